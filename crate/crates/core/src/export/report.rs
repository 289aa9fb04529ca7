use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::public::{flat_review_value, principal_needles};
use super::scan::{LeakError, LeakKind, Scanner};
use super::ExportError;
use crate::analytics::{
    count_table, krippendorff_alpha_ordinal, per_paper_score_dispersion, rating_units, score_histogram, subset_reviews,
    AgreementStats, CountTableRow, TierFilter,
};
use crate::model::{ScoreHalf, TextFields, Timestamp, VenueSnapshot};
use crate::workflow::PartitionAssignment;

/// Aggregates over fewer records than this are withheld.
pub const SUPPRESSION_THRESHOLD: u64 = 5;

const FORBIDDEN_KEYS: [&str; 9] = [
    "id",
    "reviewer_id",
    "reviewer",
    "author_ids",
    "submission_id",
    "stable_id",
    "submitted_at",
    "decided_at",
    "text_fields",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportOptions {
    pub tiers: Vec<TierFilter>,
    /// Review fields to tabulate as value counts.
    pub include_fields: Vec<String>,
    pub clock: Option<Timestamp>,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions { tiers: vec![TierFilter::OneY, TierFilter::TwoY], include_fields: Vec::new(), clock: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSubset {
    pub subset: TierFilter,
    /// Set when the subset has fewer reviews than the threshold; every
    /// statistic is then withheld.
    pub suppressed: bool,
    pub counts: Option<CountTableRow>,
    /// Bucket counts below the threshold are `null`.
    pub histogram: Option<BTreeMap<String, Option<u64>>>,
    pub agreement: Option<AgreementStats>,
    pub dispersion: Option<f64>,
    pub field_counts: BTreeMap<String, BTreeMap<String, Option<u64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtectedReport {
    pub generated_on: Option<String>,
    pub suppression_threshold: u64,
    pub subsets: Vec<ReportSubset>,
}

fn cell(n: u64) -> Option<u64> {
    (n == 0 || n >= SUPPRESSION_THRESHOLD).then_some(n)
}

/// Aggregates for each requested subset with at least one review.
pub fn build_protected_report(
    s: &VenueSnapshot,
    assignments: &[PartitionAssignment],
    opts: &ReportOptions,
) -> Result<ProtectedReport, ExportError> {
    let mut subsets = Vec::new();
    for &tiers in &opts.tiers {
        let reviews = subset_reviews(s, assignments, tiers);
        if reviews.is_empty() {
            continue;
        }
        if (reviews.len() as u64) < SUPPRESSION_THRESHOLD {
            subsets.push(ReportSubset {
                subset: tiers,
                suppressed: true,
                counts: None,
                histogram: None,
                agreement: None,
                dispersion: None,
                field_counts: BTreeMap::new(),
            });
            continue;
        }
        let hist = score_histogram(reviews.iter().copied());
        let units = rating_units(reviews.iter().copied());
        let agreement = krippendorff_alpha_ordinal(&units);
        let enough_pairs = agreement.n_pairable_values as u64 >= SUPPRESSION_THRESHOLD;

        let mut field_counts = BTreeMap::new();
        for field in &opts.include_fields {
            let mut tally: BTreeMap<String, u64> = BTreeMap::new();
            for r in &reviews {
                let value = flat_review_value(r, field).ok_or_else(|| ExportError::UnknownField(field.clone()))?;
                let key = match value {
                    Value::String(v) => v,
                    other => other.to_string(),
                };
                *tally.entry(key).or_insert(0) += 1;
            }
            field_counts.insert(field.clone(), tally.into_iter().map(|(k, n)| (k, cell(n))).collect());
        }

        subsets.push(ReportSubset {
            subset: tiers,
            suppressed: false,
            counts: Some(count_table(s, assignments, tiers)),
            histogram: Some(ScoreHalf::lattice().map(|b| (b.to_string(), cell(hist.count(b)))).collect()),
            dispersion: if enough_pairs { per_paper_score_dispersion(&units) } else { None },
            agreement: enough_pairs.then_some(agreement),
            field_counts,
        });
    }
    Ok(ProtectedReport {
        generated_on: opts.clock.map(Timestamp::day),
        suppression_threshold: SUPPRESSION_THRESHOLD,
        subsets,
    })
}

fn check_structure(file: &str, path: &str, value: &Value) -> Result<(), LeakError> {
    let leak = |kind, location: String| LeakError { file: file.to_owned(), kind, location };
    match value {
        Value::Number(n) if n.as_f64().is_some_and(|x| x.abs() >= 1e11) => {
            Err(leak(LeakKind::FineTimestamp, path.to_owned()))
        }
        Value::String(v) if looks_like_time_of_day(v) => Err(leak(LeakKind::FineTimestamp, path.to_owned())),
        Value::Array(items) => {
            items.iter().enumerate().try_for_each(|(i, v)| check_structure(file, &format!("{path}[{i}]"), v))
        }
        Value::Object(map) => map.iter().try_for_each(|(k, v)| {
            let here = format!("{path}.{k}");
            if FORBIDDEN_KEYS.contains(&k.as_str()) || TextFields::NAMES.contains(&k.as_str()) {
                return Err(leak(LeakKind::ForbiddenKey, here));
            }
            check_structure(file, &here, v)
        }),
        _ => Ok(()),
    }
}

fn looks_like_time_of_day(v: &str) -> bool {
    let b = v.as_bytes();
    b.windows(5).any(|w| {
        w[0].is_ascii_digit() && w[1].is_ascii_digit() && w[2] == b':' && w[3].is_ascii_digit() && w[4].is_ascii_digit()
    })
}

/// Builds the report, scans it, and writes it to `out_path`.
///
/// The scan rejects ids of any kind, review text, text-field keys and
/// anything that looks like a timestamp finer than a day.
pub fn export_protected_report(
    s: &VenueSnapshot,
    assignments: &[PartitionAssignment],
    out_path: &Path,
    opts: &ReportOptions,
) -> Result<ProtectedReport, ExportError> {
    let report = build_protected_report(s, assignments, opts)?;
    let json = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    let file = out_path.file_name().map_or_else(|| "report".to_owned(), |f| f.to_string_lossy().into_owned());

    let mut needles = principal_needles(s);
    needles.extend(s.reviews.iter().map(|r| (r.id.clone(), LeakKind::RecordId)));
    needles.extend(s.submissions.iter().map(|x| (x.id.clone(), LeakKind::RecordId)));
    for r in &s.reviews {
        for (_, text, _) in r.text_fields.entries() {
            if text.trim().chars().count() >= 4 {
                needles.push((text.to_owned(), LeakKind::TextContent));
            }
        }
    }
    let value: Value = serde_json::from_str(&json).expect("report parses");
    check_structure(&file, "$", &value)?;
    Scanner::new(needles).check_json(&file, "$", &value)?;

    let io = |source| ExportError::Io { path: out_path.to_owned(), source };
    if let Some(dir) = out_path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io)?;
    }
    let tmp = out_path.with_extension("json.tmp");
    fs::write(&tmp, json).map_err(io)?;
    fs::rename(&tmp, out_path).map_err(io)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::*;
    use crate::model::{Acceptance, ReviewerDecision};
    use crate::workflow::run_workflow;

    fn snapshot(n_subs: usize) -> (VenueSnapshot, Vec<PartitionAssignment>) {
        let mut s = VenueSnapshot { cycles: vec![cycle("c1")], ..Default::default() };
        for i in 0..n_subs {
            let sid = format!("sub-{i}");
            s.submissions.push(submission(&sid, "c1", Acceptance::Rejected));
            for j in 0..3 {
                let mut r = review(&format!("rev-{i}-{j}"), &sid, &format!("rvw-{j}"), "c1", 4 + (i + j) as u8 % 6);
                r.text_fields.summary_of_strengths = format!("strong point number {i}{j}");
                s.reviews.push(r);
            }
        }
        for j in 0..3 {
            s.reviewer_consents.push(consent(&format!("rvw-{j}"), "c1", ReviewerDecision::Agree));
        }
        let a = run_workflow(&s).unwrap();
        (s, a)
    }

    #[test]
    fn aggregates_only() {
        let (s, a) = snapshot(6);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("protected_report.json");
        let opts = ReportOptions { include_fields: vec!["confidence".into()], ..Default::default() };
        let report = export_protected_report(&s, &a, &path, &opts).unwrap();
        assert_eq!(report.subsets.len(), 1);
        let sub = &report.subsets[0];
        assert_eq!(sub.subset, TierFilter::OneY);
        assert_eq!(sub.counts.as_ref().unwrap().n_reviews, 18);
        assert_eq!(sub.field_counts["confidence"]["3"], Some(18));
        let text = fs::read_to_string(&path).unwrap();
        assert!(!text.contains("rev-") && !text.contains("rvw-") && !text.contains("sub-"));
    }

    #[test]
    fn small_cells_are_suppressed() {
        let (s, a) = snapshot(1);
        let report = build_protected_report(&s, &a, &ReportOptions::default()).unwrap();
        assert!(report.subsets[0].suppressed);
        assert!(report.subsets[0].counts.is_none());

        let (s, a) = snapshot(2);
        let report = build_protected_report(&s, &a, &ReportOptions::default()).unwrap();
        let hist = report.subsets[0].histogram.as_ref().unwrap();
        assert!(hist.values().all(|c| c.is_none() || c.unwrap() == 0 || c.unwrap() >= SUPPRESSION_THRESHOLD));
    }

    #[test]
    fn empty_protected_set() {
        let (mut s, _) = snapshot(3);
        s.reviewer_consents.clear();
        let a = run_workflow(&s).unwrap();
        let report = build_protected_report(&s, &a, &ReportOptions::default()).unwrap();
        assert!(report.subsets.is_empty());
    }

    #[test]
    fn text_field_misconfiguration_is_a_leak() {
        let (s, a) = snapshot(6);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("protected_report.json");
        let opts = ReportOptions { include_fields: vec!["summary_of_strengths".into()], ..Default::default() };
        let err = export_protected_report(&s, &a, &path, &opts).unwrap_err();
        assert!(matches!(err, ExportError::Leak(_)), "{err}");
        assert!(!path.exists());

        let opts = ReportOptions { include_fields: vec!["reviewer_id".into()], ..Default::default() };
        assert!(matches!(export_protected_report(&s, &a, &path, &opts), Err(ExportError::Leak(_))));
        assert!(!path.exists());
    }

    #[test]
    fn report_timestamps_are_days() {
        let (s, a) = snapshot(6);
        let opts = ReportOptions { clock: Some(Timestamp(1_700_000_000_000)), ..Default::default() };
        let report = build_protected_report(&s, &a, &opts).unwrap();
        assert_eq!(report.generated_on.as_deref(), Some("2023-11-14"));
        assert!(looks_like_time_of_day("2023-11-14T22:13:20"));
        assert!(!looks_like_time_of_day("2023-11-14"));
    }
}
