//! Statistics over tier subsets of a partitioned campaign.
//!
//! Every output here is aggregate: counts, means, histograms and rates. None
//! of them carry record ids, principal ids or review text, so they can be
//! computed over protected tiers.

mod agreement;
mod behavior;
mod counts;
mod histogram;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::model::{ReviewRecord, VenueSnapshot};
use crate::workflow::{ArtifactKind, PartitionAssignment, PartitionLabel};

pub use agreement::{
    alpha_ordinal, krippendorff_alpha_ordinal, per_paper_score_dispersion, rating_units, AgreementStats, RatingUnit,
};
pub use behavior::{behavior_stats, BehaviorStats};
pub use counts::{count_table, render_table, CountTableRow, Summary, SummaryFlag};
pub use histogram::{score_histogram, tv_distance, ScoreHistogram};

/// Nested review subsets: each filter keeps reviews at or above a tier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TierFilter {
    #[serde(rename = "all")]
    All,
    #[serde(rename = "1Y")]
    OneY,
    #[serde(rename = "2Y")]
    TwoY,
    #[serde(rename = "3Y")]
    ThreeY,
}

impl TierFilter {
    pub const ALL: [TierFilter; 4] = [TierFilter::All, TierFilter::OneY, TierFilter::TwoY, TierFilter::ThreeY];

    pub fn label(self) -> &'static str {
        match self {
            TierFilter::All => "all",
            TierFilter::OneY => "1Y",
            TierFilter::TwoY => "2Y",
            TierFilter::ThreeY => "3Y",
        }
    }

    pub fn min_tier(self) -> PartitionLabel {
        match self {
            TierFilter::All => PartitionLabel::Excluded,
            TierFilter::OneY => PartitionLabel::Protected1Y,
            TierFilter::TwoY => PartitionLabel::Protected2Y,
            TierFilter::ThreeY => PartitionLabel::Public3Y,
        }
    }

    pub fn contains(self, tier: PartitionLabel) -> bool {
        tier >= self.min_tier()
    }
}

impl fmt::Display for TierFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownTier(pub String);

impl fmt::Display for UnknownTier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown tier filter {:?} (expected all, 1Y, 2Y or 3Y)", self.0)
    }
}

impl std::error::Error for UnknownTier {}

impl FromStr for TierFilter {
    type Err = UnknownTier;

    fn from_str(s: &str) -> Result<Self, UnknownTier> {
        TierFilter::ALL
            .into_iter()
            .find(|t| t.label().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| UnknownTier(s.to_owned()))
    }
}

/// Reviews of `s` whose assignment falls in `tiers`, in snapshot order.
pub fn subset_reviews<'a>(
    s: &'a VenueSnapshot,
    assignments: &[PartitionAssignment],
    tiers: TierFilter,
) -> Vec<&'a ReviewRecord> {
    let ids: BTreeSet<&str> = assignments
        .iter()
        .filter(|a| a.kind == ArtifactKind::Review && tiers.contains(a.tier))
        .map(|a| a.artifact_id.as_str())
        .collect();
    s.reviews.iter().filter(|r| ids.contains(r.id.as_str())).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetStats {
    pub subset: TierFilter,
    pub counts: CountTableRow,
    pub histogram: ScoreHistogram,
    pub mean_overall: Option<f64>,
    /// Distance between this subset's overall-score distribution and the
    /// distribution over all reviews.
    pub tv_distance_to_all: Option<f64>,
    pub agreement: AgreementStats,
    pub dispersion: Option<f64>,
}

pub fn subset_stats(s: &VenueSnapshot, assignments: &[PartitionAssignment], tiers: TierFilter) -> SubsetStats {
    let reviews = subset_reviews(s, assignments, tiers);
    let histogram = score_histogram(reviews.iter().copied());
    let units = rating_units(reviews.iter().copied());
    let all = score_histogram(subset_reviews(s, assignments, TierFilter::All));
    SubsetStats {
        subset: tiers,
        counts: count_table(s, assignments, tiers),
        histogram,
        mean_overall: histogram.mean(),
        tv_distance_to_all: (histogram.total() > 0 && all.total() > 0).then(|| tv_distance(&histogram, &all)),
        agreement: krippendorff_alpha_ordinal(&units),
        dispersion: per_paper_score_dispersion(&units),
    }
}

/// The machine-readable statistics document for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignStats {
    pub subsets: Vec<SubsetStats>,
    pub behavior: BehaviorStats,
}

pub fn campaign_stats(s: &VenueSnapshot, assignments: &[PartitionAssignment], tiers: &[TierFilter]) -> CampaignStats {
    let subsets = std::thread::scope(|scope| {
        let handles: Vec<_> = tiers.iter().map(|&t| scope.spawn(move || subset_stats(s, assignments, t))).collect();
        handles.into_iter().map(|h| h.join().expect("stats thread panicked")).collect()
    });
    CampaignStats { subsets, behavior: behavior_stats(s, assignments) }
}

impl CampaignStats {
    pub fn subset(&self, tiers: TierFilter) -> Option<&SubsetStats> {
        self.subsets.iter().find(|x| x.subset == tiers)
    }

    pub fn rows(&self) -> Vec<CountTableRow> {
        self.subsets.iter().map(|x| x.counts.clone()).collect()
    }

    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("stats serialize");
        out.push('\n');
        out
    }

    /// `bucket,count,subset` rows for plotting score distributions.
    pub fn plot_csv(&self) -> String {
        let mut out = String::from("bucket,count,subset\n");
        for x in &self.subsets {
            for s in crate::model::ScoreHalf::lattice() {
                out.push_str(&format!("{s},{},{}\n", x.histogram.count(s), x.subset));
            }
        }
        out
    }
}
