use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::scan::{LeakError, LeakKind, Scanner};
use super::{write_files, ExportError};
use crate::io::snapshot_hash;
use crate::licensing::{
    build_copyright_notice, resource_manifest, sha256_hex, AttributionEntry, AttributionRegistry, GrantStore,
    LICENSE_ID, LICENSE_TEXT,
};
use crate::model::{ReviewRecord, Submission, Timestamp, VenueSnapshot};
use crate::workflow::{tier_counts, ArtifactKind, PartitionAssignment, PartitionLabel};

pub const BUNDLE_FILES: [&str; 4] = ["public.jsonl", "NOTICE.txt", "MANIFEST.json", "LICENSE"];

/// Review fields written by default. `reviewer` is the release token and
/// `submitted_on` the submission day.
pub const PUBLIC_REVIEW_FIELDS: [&str; 17] = [
    "submission_id",
    "cycle_id",
    "reviewer",
    "paper_summary",
    "summary_of_strengths",
    "summary_of_weaknesses",
    "comments_suggestions_typos",
    "best_paper_justification",
    "ethical_concerns",
    "overall",
    "confidence",
    "best_paper",
    "replicability",
    "datasets",
    "software",
    "author_identity_guess",
    "submitted_on",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExportOptions {
    pub release_id: String,
    /// Pins `created_at` and makes release tokens reproducible.
    pub clock: Option<Timestamp>,
    /// Review fields to write besides `id` and `kind`.
    pub review_fields: Vec<String>,
    /// Artifacts withdrawn since earlier releases.
    pub withdrawn: BTreeSet<String>,
    pub previous: Option<ExportManifest>,
}

impl ExportOptions {
    pub fn new(release_id: impl Into<String>) -> Self {
        ExportOptions {
            release_id: release_id.into(),
            clock: None,
            review_fields: PUBLIC_REVIEW_FIELDS.iter().map(|f| f.to_string()).collect(),
            withdrawn: BTreeSet::new(),
            previous: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ExportedArtifact {
    pub kind: ArtifactKind,
    pub id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Tombstone {
    pub kind: ArtifactKind,
    pub artifact_id: String,
    /// Release that first excluded the artifact.
    pub withdrawn_in: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportManifest {
    pub release_id: String,
    pub previous_release_id: Option<String>,
    pub created_at: Timestamp,
    pub license_id: String,
    /// Records written to `public.jsonl`, per kind.
    pub counts: BTreeMap<String, usize>,
    /// Source artifacts per `kind/tier`.
    pub tier_counts: BTreeMap<String, usize>,
    pub attributed_contributors: usize,
    pub notice_sha256: String,
    pub license_sha256: String,
    pub agreement_text_hashes: BTreeMap<String, String>,
    pub files_sha256: BTreeMap<String, String>,
    pub source_snapshot_sha256: String,
    pub tombstones: Vec<Tombstone>,
    pub exported: Vec<ExportedArtifact>,
}

fn kind_name(kind: ArtifactKind) -> &'static str {
    match kind {
        ArtifactKind::Review => "review",
        ArtifactKind::Draft => "draft",
    }
}

/// Release-scoped pseudonym for a principal.
pub fn release_token(salt: &str, principal_id: &str) -> String {
    format!("anon-{}", &sha256_hex(format!("{salt}\0{principal_id}").as_bytes())[..16])
}

fn now() -> Timestamp {
    let ms = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as i64);
    Timestamp(ms)
}

fn flat_review(r: &ReviewRecord) -> Map<String, Value> {
    let Value::Object(mut map) = serde_json::to_value(r).expect("review serializes") else {
        unreachable!("review serializes to an object")
    };
    if let Some(Value::Object(texts)) = map.remove("text_fields") {
        map.extend(texts);
    }
    map
}

/// A review field by name, with the text fields flattened to the top level.
pub(super) fn flat_review_value(r: &ReviewRecord, field: &str) -> Option<Value> {
    flat_review(r).remove(field)
}

fn review_record(
    r: &ReviewRecord,
    fields: &[String],
    token: &dyn Fn(&str) -> String,
) -> Result<Map<String, Value>, ExportError> {
    let flat = flat_review(r);
    let mut out = Map::new();
    out.insert("id".into(), Value::String(r.id.clone()));
    out.insert("kind".into(), Value::String("review".into()));
    for f in fields {
        let value = match f.as_str() {
            "id" | "kind" => continue,
            "reviewer" => Value::String(token(&r.reviewer_id)),
            "submitted_on" => Value::String(r.submitted_at.day()),
            other => flat.get(other).cloned().ok_or_else(|| ExportError::UnknownField(other.to_owned()))?,
        };
        out.insert(f.clone(), value);
    }
    Ok(out)
}

fn draft_record(sub: &Submission, token: &dyn Fn(&str) -> String) -> Map<String, Value> {
    let mut out = Map::new();
    out.insert("id".into(), Value::String(sub.id.clone()));
    out.insert("kind".into(), Value::String("draft".into()));
    out.insert("cycle_id".into(), Value::String(sub.cycle_id.clone()));
    out.insert("venue".into(), sub.venue.clone().map_or(Value::Null, Value::String));
    out.insert("draft_ref".into(), sub.draft_ref.clone().map_or(Value::Null, Value::String));
    out.insert("authors".into(), sub.author_ids.iter().map(|a| Value::String(token(a))).collect());
    out
}

pub(super) fn principal_needles(s: &VenueSnapshot) -> Vec<(String, LeakKind)> {
    let mut out: Vec<(String, LeakKind)> = Vec::new();
    out.extend(s.reviews.iter().map(|r| (r.reviewer_id.clone(), LeakKind::PrincipalId)));
    out.extend(s.reviewer_consents.iter().map(|c| (c.reviewer_id.clone(), LeakKind::PrincipalId)));
    out.extend(s.submissions.iter().flat_map(|x| x.author_ids.iter().map(|a| (a.clone(), LeakKind::PrincipalId))));
    for (k, v) in &s.identity_map {
        out.push((k.clone(), LeakKind::PrincipalId));
        out.push((v.clone(), LeakKind::PrincipalId));
    }
    out
}

/// Writes the public bundle for `s` into `out_dir`.
///
/// Only Public3Y artifacts are written, each of which must hold a license
/// grant. Principal ids are replaced by release tokens; display names
/// appear only in `NOTICE.txt`. The output is scanned before writing and a
/// hit returns [`LeakError`] with nothing written.
pub fn export_public(
    s: &VenueSnapshot,
    assignments: &[PartitionAssignment],
    grants: &GrantStore,
    registry: &AttributionRegistry,
    out_dir: &Path,
    opts: &ExportOptions,
) -> Result<ExportManifest, ExportError> {
    let created_at = opts.clock.unwrap_or_else(now);
    let source_hash = snapshot_hash(s);
    let salt = match opts.clock {
        Some(t) => sha256_hex(format!("{}\0{}\0{source_hash}", opts.release_id, t.millis()).as_bytes()),
        None => hex::encode(rand::rng().random::<[u8; 32]>()),
    };
    let token = |id: &str| release_token(&salt, id);

    let mut excluded: BTreeSet<&str> = opts.withdrawn.iter().map(String::as_str).collect();
    if let Some(prev) = &opts.previous {
        excluded.extend(prev.tombstones.iter().map(|t| t.artifact_id.as_str()));
    }

    let public: BTreeSet<(ArtifactKind, &str)> = assignments
        .iter()
        .filter(|a| a.tier == PartitionLabel::Public3Y && !excluded.contains(a.artifact_id.as_str()))
        .map(|a| (a.kind, a.artifact_id.as_str()))
        .collect();
    for (kind, id) in &public {
        if grants.get(*kind, id).is_none() {
            return Err(ExportError::MissingGrant { kind: kind_name(*kind).to_owned(), artifact_id: id.to_string() });
        }
    }

    let mut records: Vec<(String, ArtifactKind, Map<String, Value>)> = Vec::new();
    let mut named: Vec<AttributionEntry> = Vec::new();
    for r in &s.reviews {
        if public.contains(&(ArtifactKind::Review, r.id.as_str())) {
            records.push((r.id.clone(), ArtifactKind::Review, review_record(r, &opts.review_fields, &token)?));
            if let Some(e) = registry.get(&r.reviewer_id).filter(|e| e.scope.contains(&r.cycle_id)) {
                named.push(e.clone());
            }
        }
    }
    for sub in &s.submissions {
        if public.contains(&(ArtifactKind::Draft, sub.id.as_str())) {
            records.push((sub.id.clone(), ArtifactKind::Draft, draft_record(sub, &token)));
        }
    }
    records.sort_by(|a, b| (&a.0, a.1).cmp(&(&b.0, b.1)));

    let mut jsonl = String::new();
    for (_, _, rec) in &records {
        jsonl.push_str(&serde_json::to_string(rec).expect("record serializes"));
        jsonl.push('\n');
    }
    let year: i32 = created_at.day()[..4].parse().expect("four-digit year");
    let notice = build_copyright_notice(year, &named)? + "\n";

    let mut tombstones = opts.previous.as_ref().map(|p| p.tombstones.clone()).unwrap_or_default();
    if let Some(prev) = &opts.previous {
        for e in &prev.exported {
            if opts.withdrawn.contains(&e.id) && !tombstones.iter().any(|t| t.artifact_id == e.id && t.kind == e.kind) {
                tombstones.push(Tombstone {
                    kind: e.kind,
                    artifact_id: e.id.clone(),
                    withdrawn_in: opts.release_id.clone(),
                });
            }
        }
    }
    tombstones.sort();

    let mut counts = BTreeMap::from([("draft".to_owned(), 0), ("review".to_owned(), 0)]);
    for (_, kind, _) in &records {
        *counts.entry(kind_name(*kind).to_owned()).or_insert(0) += 1;
    }
    let manifest = ExportManifest {
        release_id: opts.release_id.clone(),
        previous_release_id: opts.previous.as_ref().map(|p| p.release_id.clone()),
        created_at,
        license_id: LICENSE_ID.to_owned(),
        counts,
        tier_counts: tier_counts(assignments)
            .into_iter()
            .map(|((kind, tier), n)| (format!("{}/{tier}", kind_name(kind)), n))
            .collect(),
        attributed_contributors: crate::licensing::parse_copyright_notice(notice.trim_end())?.1.len(),
        notice_sha256: sha256_hex(notice.as_bytes()),
        license_sha256: sha256_hex(LICENSE_TEXT.as_bytes()),
        agreement_text_hashes: resource_manifest(),
        files_sha256: BTreeMap::from([
            ("LICENSE".to_owned(), sha256_hex(LICENSE_TEXT.as_bytes())),
            ("NOTICE.txt".to_owned(), sha256_hex(notice.as_bytes())),
            ("public.jsonl".to_owned(), sha256_hex(jsonl.as_bytes())),
        ]),
        source_snapshot_sha256: source_hash,
        tombstones,
        exported: records.iter().map(|(id, kind, _)| ExportedArtifact { kind: *kind, id: id.clone() }).collect(),
    };
    let manifest_json = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";

    let principals = principal_needles(s);
    let names: Vec<(String, LeakKind)> =
        registry.entries().map(|e| (e.display_name.clone(), LeakKind::DisplayName)).collect();
    let strict = Scanner::new(principals.iter().cloned().chain(names));
    let notice_scanner = Scanner::new(principals);

    for (i, line) in jsonl.lines().enumerate() {
        let location = || format!("line {}", i + 1);
        let value: Value = serde_json::from_str(line).expect("line was just serialized");
        strict.check_json("public.jsonl", &location(), &value)?;
        let kind = match value["kind"].as_str() {
            Some("review") => ArtifactKind::Review,
            _ => ArtifactKind::Draft,
        };
        let id = value["id"].as_str().unwrap_or_default();
        if !public.contains(&(kind, id)) {
            return Err(LeakError {
                file: "public.jsonl".into(),
                kind: LeakKind::NonPublicRecord,
                location: location(),
            }
            .into());
        }
    }
    notice_scanner.check("NOTICE.txt", String::new, &notice)?;
    strict.check_json("MANIFEST.json", "$", &serde_json::from_str(&manifest_json).expect("manifest parses"))?;

    write_files(
        out_dir,
        &[
            ("public.jsonl", jsonl.into_bytes()),
            ("NOTICE.txt", notice.into_bytes()),
            ("MANIFEST.json", manifest_json.into_bytes()),
            ("LICENSE", LICENSE_TEXT.as_bytes().to_vec()),
        ],
    )?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::licensing::parse_copyright_notice;
    use crate::model::fixtures::*;
    use crate::model::{Acceptance, AuthorChoice, ReviewerDecision};
    use crate::workflow::run_workflow;
    use std::fs;

    struct Case {
        s: VenueSnapshot,
        a: Vec<PartitionAssignment>,
        grants: GrantStore,
        registry: AttributionRegistry,
    }

    fn case(choice: AuthorChoice) -> Case {
        let mut s = VenueSnapshot { cycles: vec![cycle("c1")], ..Default::default() };
        s.submissions.push(submission("sub-1", "c1", Acceptance::Accepted));
        s.submissions.push(submission("sub-2", "c1", Acceptance::Rejected));
        s.reviews.push(review("rev-1", "sub-1", "rvw-1", "c1", 8));
        s.reviews.push(review("rev-2", "sub-1", "rvw-2", "c1", 6));
        s.reviews.push(review("rev-3", "sub-2", "rvw-1", "c1", 4));
        let mut agree = consent("rvw-1", "c1", ReviewerDecision::Agree);
        agree.attribution_requested = true;
        s.reviewer_consents.push(agree.clone());
        s.reviewer_consents.push(consent("rvw-2", "c1", ReviewerDecision::Decline));
        s.author_decisions.push(author("sub-1", choice));
        let a = run_workflow(&s).unwrap();
        let mut grants = GrantStore::new();
        grants.record_all(&a, Timestamp(0));
        let mut registry = AttributionRegistry::new();
        registry.register(&agree, "Grace Hopper").unwrap();
        Case { s, a, grants, registry }
    }

    fn pinned(id: &str) -> ExportOptions {
        ExportOptions { clock: Some(Timestamp(1_700_000_000_000)), ..ExportOptions::new(id) }
    }

    fn run(c: &Case, dir: &Path, opts: &ExportOptions) -> Result<ExportManifest, ExportError> {
        export_public(&c.s, &c.a, &c.grants, &c.registry, dir, opts)
    }

    fn lines(dir: &Path) -> Vec<Value> {
        fs::read_to_string(dir.join("public.jsonl"))
            .unwrap()
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect()
    }

    #[test]
    fn paper_only_exports_draft_without_reviews() {
        let c = case(AuthorChoice::PaperOnly);
        let dir = tempfile::tempdir().unwrap();
        let m = run(&c, dir.path(), &pinned("r1")).unwrap();
        let recs = lines(dir.path());
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0]["kind"], "draft");
        assert_eq!(recs[0]["id"], "sub-1");
        assert_eq!(m.counts["review"], 0);
        assert_eq!(m.counts["draft"], 1);
        let notice = fs::read_to_string(dir.path().join("NOTICE.txt")).unwrap();
        assert_eq!(parse_copyright_notice(notice.trim_end()).unwrap().1, Vec::<String>::new());
    }

    #[test]
    fn reviews_carry_tokens_and_notice_names() {
        let c = case(AuthorChoice::PaperAndReviews);
        let dir = tempfile::tempdir().unwrap();
        let m = run(&c, dir.path(), &pinned("r1")).unwrap();
        let recs = lines(dir.path());
        assert_eq!(recs.iter().map(|r| r["id"].as_str().unwrap()).collect::<Vec<_>>(), vec!["rev-1", "sub-1"]);
        assert!(recs[0]["reviewer"].as_str().unwrap().starts_with("anon-"));
        assert!(recs[0].get("reviewer_id").is_none());
        assert_eq!(m.attributed_contributors, 1);
        let notice = fs::read_to_string(dir.path().join("NOTICE.txt")).unwrap();
        assert!(notice.contains(": Grace Hopper, and other contributors"));
        let body = fs::read_to_string(dir.path().join("public.jsonl")).unwrap();
        assert!(!body.contains("rvw-1") && !body.contains("author-of-sub-1") && !body.contains("Grace"));
        assert_eq!(fs::read_to_string(dir.path().join("LICENSE")).unwrap(), LICENSE_TEXT);
    }

    #[test]
    fn empty_release() {
        let c = case(AuthorChoice::Decline);
        let dir = tempfile::tempdir().unwrap();
        let m = run(&c, dir.path(), &pinned("r1")).unwrap();
        assert_eq!(fs::read_to_string(dir.path().join("public.jsonl")).unwrap(), "");
        assert!(m.exported.is_empty());
        let notice = fs::read_to_string(dir.path().join("NOTICE.txt")).unwrap();
        assert!(notice.contains("ACL content contributors who wish to remain anonymous."));
    }

    #[test]
    fn pinned_clock_is_byte_identical() {
        let c = case(AuthorChoice::PaperAndReviews);
        let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        run(&c, d1.path(), &pinned("r1")).unwrap();
        run(&c, d2.path(), &pinned("r1")).unwrap();
        for f in BUNDLE_FILES {
            assert_eq!(fs::read(d1.path().join(f)).unwrap(), fs::read(d2.path().join(f)).unwrap(), "{f}");
        }
        // Re-running into the same directory is a no-op.
        run(&c, d1.path(), &pinned("r1")).unwrap();
        // Tokens change across releases.
        let d3 = tempfile::tempdir().unwrap();
        run(&c, d3.path(), &pinned("r2")).unwrap();
        assert_ne!(lines(d1.path())[0]["reviewer"], lines(d3.path())[0]["reviewer"]);
        assert!(matches!(run(&c, d1.path(), &pinned("r2")), Err(ExportError::Conflict(_))));
    }

    #[test]
    fn misconfigured_fields_leak_and_write_nothing() {
        let c = case(AuthorChoice::PaperAndReviews);
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("bundle");
        let mut opts = pinned("r1");
        opts.review_fields.push("reviewer_id".into());
        let err = run(&c, &out, &opts).unwrap_err();
        assert!(matches!(err, ExportError::Leak(LeakError { kind: LeakKind::PrincipalId, .. })), "{err}");
        assert!(!out.exists());

        opts.review_fields = vec!["no_such_field".into()];
        assert!(matches!(run(&c, &out, &opts), Err(ExportError::UnknownField(_))));
    }

    #[test]
    fn display_name_in_text_is_a_leak() {
        let mut c = case(AuthorChoice::PaperAndReviews);
        c.s.reviews[0].text_fields.paper_summary = "Reviewed by Grace Hopper.".into();
        let dir = tempfile::tempdir().unwrap();
        let err = run(&c, dir.path(), &pinned("r1")).unwrap_err();
        assert!(matches!(err, ExportError::Leak(LeakError { kind: LeakKind::DisplayName, .. })));
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
    }

    #[test]
    fn grants_are_required() {
        let mut c = case(AuthorChoice::PaperAndReviews);
        c.grants = GrantStore::new();
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(run(&c, dir.path(), &pinned("r1")), Err(ExportError::MissingGrant { .. })));
    }

    #[test]
    fn withdrawal_appends_tombstone_and_keeps_old_bundle() {
        let c = case(AuthorChoice::PaperAndReviews);
        let (d1, d2, d3) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let m1 = run(&c, d1.path(), &pinned("r1")).unwrap();
        let before = fs::read(d1.path().join("public.jsonl")).unwrap();

        let mut opts = pinned("r2");
        opts.previous = Some(m1);
        opts.withdrawn.insert("rev-1".into());
        opts.withdrawn.insert("rev-3".into());
        let m2 = run(&c, d2.path(), &opts).unwrap();
        assert_eq!(m2.exported, vec![ExportedArtifact { kind: ArtifactKind::Draft, id: "sub-1".into() }]);
        assert_eq!(
            m2.tombstones,
            vec![Tombstone { kind: ArtifactKind::Review, artifact_id: "rev-1".into(), withdrawn_in: "r2".into() }]
        );
        assert_eq!(fs::read(d1.path().join("public.jsonl")).unwrap(), before);

        // Tombstones carry forward without repeating the withdrawal.
        let mut opts = pinned("r3");
        opts.previous = Some(m2.clone());
        let m3 = run(&c, d3.path(), &opts).unwrap();
        assert_eq!(m3.tombstones, m2.tombstones);
        assert_eq!(m3.exported, m2.exported);
    }
}
