use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{subset_reviews, TierFilter};
use crate::io::reviews_by_reviewer;
use crate::model::VenueSnapshot;
use crate::workflow::PartitionAssignment;

/// How a mean was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SummaryFlag {
    Exact,
    /// Total over total, without the per-item breakdown.
    Estimated,
    /// Computed over per-cycle reviewer keys; the true value is at least this.
    LowerBound,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: Option<f64>,
    /// Population standard deviation.
    pub stdev: Option<f64>,
    pub flag: SummaryFlag,
}

impl Summary {
    pub fn of(values: &[usize], flag: SummaryFlag) -> Self {
        if values.is_empty() {
            return Summary { mean: None, stdev: None, flag };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<usize>() as f64 / n;
        let var = values.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / n;
        Summary { mean: Some(mean), stdev: Some(var.sqrt()), flag }
    }

    fn ratio(num: usize, den: usize, flag: SummaryFlag) -> Self {
        Summary { mean: (den > 0).then(|| num as f64 / den as f64), stdev: None, flag }
    }

    /// Two-decimal display: `1.96 ± 0.85`, `3.24*` or `2.63↑`.
    pub fn display(&self) -> String {
        let Some(mean) = self.mean else {
            return "n/a".to_owned();
        };
        let mut out = format!("{mean:.2}");
        match (self.flag, self.stdev) {
            (SummaryFlag::Estimated, _) => out.push('*'),
            (SummaryFlag::LowerBound, _) => out.push('↑'),
            (SummaryFlag::Exact, Some(sd)) => {
                let _ = write!(out, " ± {sd:.2}");
            }
            (SummaryFlag::Exact, None) => {}
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountTableRow {
    pub subset_label: String,
    pub n_submissions: usize,
    pub n_reviews: usize,
    pub n_reviewers: usize,
    /// False when `n_reviewers` counts per-cycle identities and is an upper bound.
    pub reviewers_exact: bool,
    pub reviews_per_submission: Summary,
    pub reviews_per_reviewer: Summary,
}

impl CountTableRow {
    /// Row from aggregate counts only; both means are total over total.
    pub fn from_totals(
        subset_label: &str,
        n_submissions: usize,
        n_reviews: usize,
        n_reviewers: usize,
        reviewers_exact: bool,
    ) -> Self {
        let per_reviewer = if reviewers_exact { SummaryFlag::Exact } else { SummaryFlag::LowerBound };
        CountTableRow {
            subset_label: subset_label.to_owned(),
            n_submissions,
            n_reviews,
            n_reviewers,
            reviewers_exact,
            reviews_per_submission: Summary::ratio(n_reviews, n_submissions, SummaryFlag::Estimated),
            reviews_per_reviewer: Summary::ratio(n_reviews, n_reviewers, per_reviewer),
        }
    }

    pub fn reviewers_display(&self) -> String {
        if self.reviewers_exact {
            self.n_reviewers.to_string()
        } else {
            format!("{}↓", self.n_reviewers)
        }
    }

    /// Table cells: label, submissions, reviews, reviewers, reviews/submission,
    /// reviews/reviewer.
    pub fn display_cells(&self) -> [String; 6] {
        [
            self.subset_label.clone(),
            self.n_submissions.to_string(),
            self.n_reviews.to_string(),
            self.reviewers_display(),
            self.reviews_per_submission.display(),
            self.reviews_per_reviewer.display(),
        ]
    }
}

pub fn count_table(s: &VenueSnapshot, assignments: &[PartitionAssignment], tiers: TierFilter) -> CountTableRow {
    let reviews = subset_reviews(s, assignments, tiers);

    let mut per_submission: BTreeMap<&str, usize> = BTreeMap::new();
    for r in &reviews {
        *per_submission.entry(&r.submission_id).or_insert(0) += 1;
    }
    let per_reviewer = reviews_by_reviewer(reviews.iter().copied(), &s.identity_map);
    let exact = s.has_identity_map();

    let sub_counts: Vec<usize> = per_submission.into_values().collect();
    let reviewer_counts: Vec<usize> = per_reviewer.into_values().collect();
    CountTableRow {
        subset_label: tiers.label().to_owned(),
        n_submissions: sub_counts.len(),
        n_reviews: reviews.len(),
        n_reviewers: reviewer_counts.len(),
        reviewers_exact: exact,
        reviews_per_submission: Summary::of(&sub_counts, SummaryFlag::Exact),
        reviews_per_reviewer: Summary::of(
            &reviewer_counts,
            if exact { SummaryFlag::Exact } else { SummaryFlag::LowerBound },
        ),
    }
}

/// Plain-text table of rows, two decimals.
pub fn render_table(rows: &[CountTableRow]) -> String {
    let header = ["subset", "submissions", "reviews", "reviewers", "reviews/submission", "reviews/reviewer"];
    let cells: Vec<[String; 6]> = rows.iter().map(CountTableRow::display_cells).collect();
    let mut widths = header.map(|h| h.chars().count());
    for row in &cells {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }
    let mut out = String::new();
    let mut line = |items: Vec<&str>| {
        let padded: Vec<String> =
            items.iter().zip(&widths).map(|(c, &w)| format!("{c}{}", " ".repeat(w - c.chars().count()))).collect();
        out.push_str(padded.join("  ").trim_end());
        out.push('\n');
    };
    line(header.to_vec());
    for row in &cells {
        line(row.iter().map(String::as_str).collect());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::*;
    use crate::model::Acceptance;
    use crate::workflow::run_workflow;

    #[test]
    fn constant_reviews_per_submission() {
        let mut s = VenueSnapshot { cycles: vec![cycle("c")], ..Default::default() };
        for i in 0..4 {
            let sid = format!("s{i}");
            s.submissions.push(submission(&sid, "c", Acceptance::Rejected));
            for j in 0..3 {
                s.reviews.push(review(&format!("r{i}{j}"), &sid, &format!("v{j}"), "c", 6));
            }
        }
        let a = run_workflow(&s).unwrap();
        let row = count_table(&s, &a, TierFilter::All);
        assert_eq!(row.n_submissions, 4);
        assert_eq!(row.n_reviews, 12);
        assert_eq!(row.reviews_per_submission.mean, Some(3.0));
        assert_eq!(row.reviews_per_submission.stdev, Some(0.0));
        assert_eq!(row.n_reviewers, 3);
        assert!(!row.reviewers_exact);
        assert_eq!(row.reviews_per_reviewer.flag, SummaryFlag::LowerBound);
    }

    #[test]
    fn empty_subset() {
        let s = VenueSnapshot::default();
        let row = count_table(&s, &[], TierFilter::ThreeY);
        assert_eq!(row.n_reviews, 0);
        assert_eq!(row.reviews_per_submission.mean, None);
        assert_eq!(row.reviews_per_submission.display(), "n/a");
    }

    #[test]
    fn totals_display() {
        let row = CountTableRow::from_totals("all", 3591, 11621, 4421, false);
        assert_eq!(row.reviews_per_submission.display(), "3.24*");
        assert_eq!(row.reviews_per_reviewer.display(), "2.63↑");
        assert_eq!(row.reviewers_display(), "4421↓");
        let row = CountTableRow::from_totals("1Y", 2884, 5656, 1916, true);
        assert_eq!(row.reviews_per_reviewer.display(), "2.95");
    }

    #[test]
    fn summary_stdev_is_population() {
        let s = Summary::of(&[1, 3], SummaryFlag::Exact);
        assert_eq!(s.mean, Some(2.0));
        assert_eq!(s.stdev, Some(1.0));
        assert_eq!(s.display(), "2.00 ± 1.00");
    }
}
