use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::{AuthorChoice, ReviewerDecision, Timestamp, VenueSnapshot};
use crate::workflow::{ArtifactKind, PartitionAssignment, PartitionLabel};

/// Donation behaviour of reviewers and authors.
///
/// Reviewer rates are over active reviewer-cycles, i.e. `(reviewer, cycle)`
/// pairs with at least one review. Timing rates are over responding
/// reviewer-cycles and are `None` when any of them lacks a consent timestamp.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehaviorStats {
    pub active_reviewer_cycles: usize,
    pub reviewer_responses: usize,
    pub reviewer_donors: usize,
    pub reviewer_attributed: usize,
    pub accepted_drafts: usize,
    pub author_donors: usize,

    pub reviewer_response_rate: Option<f64>,
    pub reviewer_decline_rate_among_responses: Option<f64>,
    pub attribution_rate_among_donors: Option<f64>,
    pub attribution_rate_among_responses: Option<f64>,
    pub timing_before_first_review_rate: Option<f64>,
    pub timing_during_rate: Option<f64>,
    pub timing_after_last_review_rate: Option<f64>,
    pub author_donation_rate: Option<f64>,
    pub author_reviews_permission_rate_among_donors: Option<f64>,
    pub author_explicit_decline_rate: Option<f64>,
    pub author_response_rate: Option<f64>,
}

fn rate(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn behavior_stats(s: &VenueSnapshot, assignments: &[PartitionAssignment]) -> BehaviorStats {
    // (reviewer, cycle) -> (first review, last review)
    let mut windows: BTreeMap<(&str, &str), (Timestamp, Timestamp)> = BTreeMap::new();
    for r in &s.reviews {
        let w =
            windows.entry((r.reviewer_id.as_str(), r.cycle_id.as_str())).or_insert((r.submitted_at, r.submitted_at));
        w.0 = w.0.min(r.submitted_at);
        w.1 = w.1.max(r.submitted_at);
    }
    let consents: BTreeMap<(&str, &str), _> =
        s.reviewer_consents.iter().map(|c| ((c.reviewer_id.as_str(), c.cycle_id.as_str()), c)).collect();

    let (mut responses, mut declines, mut donors, mut attributed) = (0, 0, 0, 0);
    let (mut before, mut after, mut timed) = (0, 0, 0);
    let mut timestamps_complete = true;
    for (key, (first, last)) in &windows {
        let Some(c) = consents.get(key) else { continue };
        match c.decision {
            ReviewerDecision::NoResponse => continue,
            ReviewerDecision::Decline => declines += 1,
            ReviewerDecision::Agree => {
                donors += 1;
                if c.attribution_requested {
                    attributed += 1;
                }
            }
        }
        responses += 1;
        match c.decided_at {
            None => timestamps_complete = false,
            Some(t) => {
                timed += 1;
                if t < *first {
                    before += 1;
                } else if t > *last {
                    after += 1;
                }
            }
        }
    }
    let timing = |n: usize| if timestamps_complete { rate(n, timed) } else { None };

    let drafts: Vec<&PartitionAssignment> = assignments.iter().filter(|a| a.kind == ArtifactKind::Draft).collect();
    let accepted = drafts.len();
    let author_donors = drafts.iter().filter(|a| a.tier == PartitionLabel::Public3Y).count();
    let decisions: BTreeMap<&str, AuthorChoice> =
        s.author_decisions.iter().map(|d| (d.submission_id.as_str(), d.decision)).collect();
    let choice =
        |a: &&PartitionAssignment| decisions.get(a.artifact_id.as_str()).copied().unwrap_or(AuthorChoice::NoResponse);
    let with_reviews =
        drafts.iter().filter(|a| a.tier == PartitionLabel::Public3Y && choice(a).permits_reviews()).count();
    let explicit_declines = drafts.iter().filter(|a| choice(a) == AuthorChoice::Decline).count();

    BehaviorStats {
        active_reviewer_cycles: windows.len(),
        reviewer_responses: responses,
        reviewer_donors: donors,
        reviewer_attributed: attributed,
        accepted_drafts: accepted,
        author_donors,
        reviewer_response_rate: rate(responses, windows.len()),
        reviewer_decline_rate_among_responses: rate(declines, responses),
        attribution_rate_among_donors: rate(attributed, donors),
        attribution_rate_among_responses: rate(attributed, responses),
        timing_before_first_review_rate: timing(before),
        timing_during_rate: timing(timed - before - after),
        timing_after_last_review_rate: timing(after),
        author_donation_rate: rate(author_donors, accepted),
        author_reviews_permission_rate_among_donors: rate(with_reviews, author_donors),
        author_explicit_decline_rate: rate(explicit_declines, accepted),
        author_response_rate: rate(author_donors + explicit_declines, accepted),
    }
}
