use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use threeyes_core::analytics::{campaign_stats, render_table, CampaignStats};
use threeyes_core::export::{
    export_protected_report, export_public, ExportError, ExportManifest, ExportOptions, ReportOptions,
};
use threeyes_core::io::{fetch_snapshot, load_fixture, save_fixture, AdapterConfig, PlatformError, TOKEN_ENV};
use threeyes_core::licensing::LicensingError;
use threeyes_core::store::{RunRecord, Store, StoreError};
use threeyes_core::synth::{generate_venue, sweep_csv, ConfigError, GeneratorConfig, SweepPoint};
use threeyes_core::workflow::{apply_previous_versions, run_workflow, tier_counts, ResubmissionMap, WorkflowError};
use threeyes_core::{ArtifactKind, PartitionAssignment, ReviewerDecision, Timestamp, VenueSnapshot};

use crate::{Cli, Command, ExportArgs, IngestArgs, RunArgs, SimulateArgs, StatsArgs};

#[derive(Debug)]
pub enum CliError {
    /// Bad input: exit status 2.
    Usage(String),
    /// Everything else: exit status 1.
    Runtime(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

impl From<PlatformError> for CliError {
    fn from(e: PlatformError) -> Self {
        match e {
            PlatformError::Parse { .. } | PlatformError::Integrity(_) | PlatformError::Config(_) => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<StoreError> for CliError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::Platform(p) => p.into(),
            StoreError::Io { .. } | StoreError::Json { .. } => CliError::Runtime(e.to_string()),
            StoreError::NoRun(_) => CliError::Usage(format!("{e}; use `threeyes run` first")),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<WorkflowError> for CliError {
    fn from(e: WorkflowError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<LicensingError> for CliError {
    fn from(e: LicensingError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<ExportError> for CliError {
    fn from(e: ExportError) -> Self {
        match e {
            ExportError::UnknownField(_) | ExportError::Licensing(_) => CliError::Usage(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn write(path: &Path, body: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, body).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

struct Ctx {
    store: Store,
    clock: Option<Timestamp>,
}

impl Ctx {
    fn now(&self) -> Timestamp {
        self.clock.unwrap_or_else(|| Timestamp(chrono::Utc::now().timestamp_millis()))
    }
}

pub fn dispatch(cli: Cli) -> Result<(), CliError> {
    let ctx = Ctx { store: cli.store.map_or_else(Store::from_env, Store::new), clock: cli.clock };
    match cli.command {
        Command::Ingest(args) => ingest(&ctx, args),
        Command::Run(args) => run(&ctx, args),
        Command::Stats(args) => stats(&ctx, args),
        Command::Export(args) => export(&ctx, args),
        Command::Simulate(args) => simulate(args),
    }
}

fn print_counts(s: &VenueSnapshot) {
    println!("cycles            {}", s.cycles.len());
    println!("submissions       {}", s.submissions.len());
    println!("reviews           {}", s.reviews.len());
    println!("reviewer consents {}", s.reviewer_consents.len());
    println!("author decisions  {}", s.author_decisions.len());
}

fn ingest(ctx: &Ctx, args: IngestArgs) -> Result<(), CliError> {
    let s = match (args.source.fixture, args.source.adapter) {
        (Some(dir), _) => load_fixture(&dir)?,
        (None, Some(cfg)) => {
            let cfg = AdapterConfig::from_kv(&read(&cfg)?, std::env::var(TOKEN_ENV).ok())?;
            fetch_snapshot(&cfg)?
        }
        (None, None) => unreachable!("clap requires a source"),
    };
    let hash = ctx.store.put_snapshot(&s)?;
    println!("snapshot {hash}");
    print_counts(&s);
    Ok(())
}

/// Non-empty, non-comment lines split at the first tab.
fn tsv_pairs(path: &Path) -> Result<Vec<(String, String)>, CliError> {
    let text = read(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (a, b) = line.split_once('\t').ok_or_else(|| {
            CliError::Usage(format!("{}:{}: expected two tab-separated columns", path.display(), i + 1))
        })?;
        out.push((a.trim().to_owned(), b.trim().to_owned()));
    }
    Ok(out)
}

fn kind_name(kind: ArtifactKind) -> &'static str {
    match kind {
        ArtifactKind::Review => "review",
        ArtifactKind::Draft => "draft",
    }
}

fn run(ctx: &Ctx, args: RunArgs) -> Result<(), CliError> {
    let (hash, s) = ctx.store.load_snapshot(&args.snapshot)?;
    let assignments = match &args.resubmissions {
        Some(path) => {
            let mut link = ResubmissionMap::new();
            for (current, earlier) in tsv_pairs(path)? {
                link.entry(current).or_default().push(earlier);
            }
            apply_previous_versions(&s, &link)?
        }
        None => run_workflow(&s)?,
    };
    let mut record = match ctx.store.load_run(&hash) {
        Ok(r) => r,
        Err(StoreError::NoRun(_)) => RunRecord { snapshot: hash.clone(), ..Default::default() },
        Err(e) => return Err(e.into()),
    };
    record.assignments = assignments;
    let new_grants = record.grants.record_all(&record.assignments, ctx.now());

    if let Some(path) = &args.names {
        for (reviewer_id, name) in tsv_pairs(path)? {
            let consents: Vec<_> = s
                .reviewer_consents
                .iter()
                .filter(|c| c.reviewer_id == reviewer_id && c.attribution_requested)
                .filter(|c| c.decision == ReviewerDecision::Agree)
                .collect();
            if consents.is_empty() {
                eprintln!("threeyes: skipping a name for a reviewer who did not request attribution");
            }
            for c in consents {
                record.registry.register(c, &name)?;
            }
        }
    }
    ctx.store.put_run(&record)?;

    println!("snapshot {hash}");
    for ((kind, tier), n) in tier_counts(&record.assignments) {
        println!("{:<7}{:<13}{n}", kind_name(kind), tier.to_string());
    }
    println!("grants {} ({new_grants} new)", record.grants.len());
    println!("attributed contributors {}", record.registry.len());
    Ok(())
}

fn assignments_for(ctx: &Ctx, hash: &str, s: &VenueSnapshot) -> Result<Vec<PartitionAssignment>, CliError> {
    match ctx.store.load_run(hash) {
        Ok(r) => Ok(r.assignments),
        Err(StoreError::NoRun(_)) => Ok(run_workflow(s)?),
        Err(e) => Err(e.into()),
    }
}

fn write_stats(stats: &CampaignStats, json_path: &Path) -> Result<(), CliError> {
    let csv_path = json_path.with_extension("csv");
    if csv_path == json_path {
        return Err(CliError::Usage("--out must not have a .csv extension".into()));
    }
    write(json_path, &stats.to_json())?;
    write(&csv_path, &stats.plot_csv())
}

fn stats(ctx: &Ctx, args: StatsArgs) -> Result<(), CliError> {
    let (hash, s) = ctx.store.load_snapshot(&args.snapshot)?;
    let assignments = assignments_for(ctx, &hash, &s)?;
    let mut tiers = Vec::new();
    for t in args.tiers {
        if !tiers.contains(&t) {
            tiers.push(t);
        }
    }
    let stats = campaign_stats(&s, &assignments, &tiers);
    print!("{}", render_table(&stats.rows()));
    if let Some(out) = &args.out {
        write_stats(&stats, out)?;
    }
    Ok(())
}

fn export(ctx: &Ctx, args: ExportArgs) -> Result<(), CliError> {
    let (hash, s) = ctx.store.load_snapshot(&args.snapshot)?;
    let record = ctx.store.load_run(&hash)?;
    let mut opts = ExportOptions::new(args.release_id.unwrap_or_else(|| format!("r-{}", &hash[..12])));
    opts.clock = ctx.clock;
    opts.withdrawn = args.withdraw.into_iter().collect::<BTreeSet<_>>();
    if let Some(path) = &args.previous {
        let m: ExportManifest =
            serde_json::from_str(&read(path)?).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        opts.previous = Some(m);
    }
    let manifest = export_public(&s, &record.assignments, &record.grants, &record.registry, &args.out, &opts)?;
    println!("release {}", manifest.release_id);
    for (kind, n) in &manifest.counts {
        println!("{kind:<7}{n}");
    }
    println!("tombstones {}", manifest.tombstones.len());
    println!("attributed contributors {}", manifest.attributed_contributors);

    if args.protected_report {
        let path = args.out.join("protected_report.json");
        let opts = ReportOptions { include_fields: args.report_fields, clock: ctx.clock, ..Default::default() };
        let report = export_protected_report(&s, &record.assignments, &path, &opts)?;
        println!("protected report: {} subset(s)", report.subsets.len());
    }
    Ok(())
}

/// Placeholder names for every reviewer who asked to be credited.
fn synthetic_names(s: &VenueSnapshot) -> String {
    let ids: BTreeSet<&str> = s
        .reviewer_consents
        .iter()
        .filter(|c| c.attribution_requested && c.decision == ReviewerDecision::Agree)
        .map(|c| c.reviewer_id.as_str())
        .collect();
    ids.into_iter().enumerate().map(|(i, id)| format!("{id}\tReviewer {}\n", i + 1)).collect()
}

fn write_campaign(cfg: &GeneratorConfig, dir: &Path) -> Result<CampaignStats, CliError> {
    let s = generate_venue(cfg)?;
    save_fixture(&s, &dir.join("fixture"))?;
    let assignments = run_workflow(&s)?;
    let stats = campaign_stats(&s, &assignments, &threeyes_core::analytics::TierFilter::ALL);
    write_stats(&stats, &dir.join("stats.json"))?;
    write(&dir.join("names.tsv"), &synthetic_names(&s))?;
    write(&dir.join("config.kv"), &cfg.to_kv())?;
    Ok(stats)
}

fn simulate(args: SimulateArgs) -> Result<(), CliError> {
    let mut cfg = match &args.config {
        Some(path) => GeneratorConfig::from_kv(&read(path)?)?,
        None => GeneratorConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;

    let Some(spec) = &args.sweep else {
        let stats = write_campaign(&cfg, &args.out)?;
        print!("{}", render_table(&stats.rows()));
        return Ok(());
    };
    let (field, values) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("--sweep expects FIELD=v1,v2,..., got {spec:?}")))?;
    let values = threeyes_core::config::split_list(values);
    if values.is_empty() {
        return Err(CliError::Usage("--sweep needs at least one value".into()));
    }
    let mut configs = Vec::new();
    for v in &values {
        let mut point = cfg.clone();
        point.set(field, v)?;
        point.validate()?;
        configs.push(point);
    }
    let mut points = Vec::new();
    for (point, v) in configs.iter().zip(&values) {
        let dir: PathBuf = args.out.join(format!("{field}={v}"));
        points.push(SweepPoint { value: v.clone(), stats: write_campaign(point, &dir)? });
    }
    write(&args.out.join("sweep.csv"), &sweep_csv(field, &points))?;
    print!("{}", sweep_csv(field, &points));
    Ok(())
}
