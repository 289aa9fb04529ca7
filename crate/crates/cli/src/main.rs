mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand};
use threeyes_core::analytics::TierFilter;
use threeyes_core::Timestamp;

/// Consent-gated collection, analysis and release of peer-review data.
#[derive(Debug, Parser)]
#[command(name = "threeyes", version)]
struct Cli {
    /// Store directory. Defaults to $THREEYES_STORE, then `.threeyes`.
    #[arg(long, global = true, value_name = "DIR")]
    store: Option<PathBuf>,

    /// Pins the current time: epoch milliseconds, RFC 3339, or YYYY-MM-DD.
    #[arg(long, global = true, value_name = "TIME", value_parser = parse_clock)]
    clock: Option<Timestamp>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load and validate a snapshot, then store it under its content hash.
    Ingest(IngestArgs),
    /// Partition a stored snapshot and record license grants.
    Run(RunArgs),
    /// Count tables, score histograms, agreement and behavior rates.
    Stats(StatsArgs),
    /// Write the public release bundle and, optionally, a protected report.
    Export(ExportArgs),
    /// Generate synthetic campaigns.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct Source {
    /// Fixture bundle directory.
    #[arg(long, value_name = "DIR")]
    fixture: Option<PathBuf>,
    /// Platform adapter config (key=value).
    #[arg(long, value_name = "FILE")]
    adapter: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct IngestArgs {
    #[command(flatten)]
    source: Source,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Snapshot hash, unique hash prefix, or `latest`.
    #[arg(long, default_value = "latest")]
    snapshot: String,
    /// Tab-separated `reviewer_id<TAB>display name` lines for reviewers who
    /// asked to be credited.
    #[arg(long, value_name = "TSV")]
    names: Option<PathBuf>,
    /// Tab-separated `submission_id<TAB>earlier_submission_id` lines.
    #[arg(long, value_name = "TSV")]
    resubmissions: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct StatsArgs {
    #[arg(long, default_value = "latest")]
    snapshot: String,
    /// Comma-separated subset filters: all, 1Y, 2Y, 3Y.
    #[arg(long, value_delimiter = ',', default_value = "all,1Y,2Y,3Y")]
    tiers: Vec<TierFilter>,
    /// JSON output; histogram CSV is written next to it with a `.csv` extension.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExportArgs {
    #[arg(long, default_value = "latest")]
    snapshot: String,
    /// Release directory.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Also write `protected_report.json` into the release directory.
    #[arg(long)]
    protected_report: bool,
    /// Defaults to `r-` plus the first 12 hex digits of the snapshot hash.
    #[arg(long)]
    release_id: Option<String>,
    /// Manifest of the previous release, for tombstones.
    #[arg(long, value_name = "MANIFEST")]
    previous: Option<PathBuf>,
    /// Artifact id withdrawn since earlier releases. Repeatable.
    #[arg(long, value_name = "ID")]
    withdraw: Vec<String>,
    /// Review fields to tabulate in the protected report.
    #[arg(long, value_delimiter = ',', value_name = "FIELDS")]
    report_fields: Vec<String>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Generator config (key=value). Defaults are used when absent.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// One generated campaign per value: FIELD=v1,v2,...
    #[arg(long, value_name = "FIELD=VALUES")]
    sweep: Option<String>,
}

fn parse_clock(s: &str) -> Result<Timestamp, String> {
    if let Ok(ms) = s.parse::<i64>() {
        return Ok(Timestamp(ms));
    }
    if let Ok(t) = chrono::DateTime::parse_from_rfc3339(s) {
        return Ok(Timestamp(t.timestamp_millis()));
    }
    if let Ok(d) = chrono::NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        return Ok(Timestamp(d.and_hms_opt(0, 0, 0).expect("midnight").and_utc().timestamp_millis()));
    }
    Err(format!("cannot parse {s:?} as a time"))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            eprintln!("\n{}", Cli::command().render_usage());
            return ExitCode::from(2);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    match commands::dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("threeyes: {e}");
            ExitCode::from(e.code())
        }
    }
}
