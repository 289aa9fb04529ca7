//! Three-gate partitioning of reviews and drafts.
//!
//! A review survives the first gate only if its reviewer agreed to donate
//! for that cycle. The second gate is the publication decision. The third is
//! the authors' choice, which covers the draft and optionally its reviews.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{validate_snapshot, Acceptance, AuthorChoice, IntegrityError, ReviewerDecision, VenueSnapshot};

/// Dataset tier of an artifact, ordered from least to most exposed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PartitionLabel {
    Excluded,
    Protected1Y,
    Protected2Y,
    Public3Y,
}

impl PartitionLabel {
    pub const ALL: [PartitionLabel; 4] =
        [PartitionLabel::Excluded, PartitionLabel::Protected1Y, PartitionLabel::Protected2Y, PartitionLabel::Public3Y];

    pub fn is_donated(self) -> bool {
        self >= PartitionLabel::Protected1Y
    }

    pub fn is_protected(self) -> bool {
        matches!(self, PartitionLabel::Protected1Y | PartitionLabel::Protected2Y)
    }
}

impl fmt::Display for PartitionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            PartitionLabel::Excluded => "Excluded",
            PartitionLabel::Protected1Y => "Protected1Y",
            PartitionLabel::Protected2Y => "Protected2Y",
            PartitionLabel::Public3Y => "Public3Y",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WorkflowInputs {
    pub reviewer_decision: ReviewerDecision,
    pub acceptance: Acceptance,
    pub author_decision: AuthorChoice,
}

impl WorkflowInputs {
    /// All 45 input combinations.
    pub fn all() -> impl Iterator<Item = WorkflowInputs> {
        REVIEWER_DECISIONS.into_iter().flat_map(|r| {
            ACCEPTANCES.into_iter().flat_map(move |a| {
                AUTHOR_CHOICES.into_iter().map(move |d| WorkflowInputs {
                    reviewer_decision: r,
                    acceptance: a,
                    author_decision: d,
                })
            })
        })
    }
}

pub const REVIEWER_DECISIONS: [ReviewerDecision; 3] =
    [ReviewerDecision::Agree, ReviewerDecision::Decline, ReviewerDecision::NoResponse];
pub const ACCEPTANCES: [Acceptance; 3] = [Acceptance::Accepted, Acceptance::Rejected, Acceptance::Pending];
pub const AUTHOR_CHOICES: [AuthorChoice; 5] = [
    AuthorChoice::NoResponse,
    AuthorChoice::Decline,
    AuthorChoice::PaperOnly,
    AuthorChoice::PaperAndReviews,
    AuthorChoice::PaperAndReviewsAllVersions,
];

pub fn classify_review(inputs: WorkflowInputs) -> PartitionLabel {
    if inputs.reviewer_decision != ReviewerDecision::Agree {
        return PartitionLabel::Excluded;
    }
    if inputs.acceptance != Acceptance::Accepted {
        return PartitionLabel::Protected1Y;
    }
    if inputs.author_decision.permits_reviews() {
        PartitionLabel::Public3Y
    } else {
        PartitionLabel::Protected2Y
    }
}

/// Drafts are only solicited after acceptance, so there is no protected draft tier.
pub fn classify_draft(acceptance: Acceptance, author_decision: AuthorChoice) -> PartitionLabel {
    if acceptance == Acceptance::Accepted && author_decision.donates_draft() {
        PartitionLabel::Public3Y
    } else {
        PartitionLabel::Excluded
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArtifactKind {
    Review,
    Draft,
}

/// One fact used to derive a tier.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "fact", rename_all = "snake_case")]
pub enum DecisionFact {
    ReviewerDecision {
        reviewer_id: String,
        cycle_id: String,
        decision: ReviewerDecision,
    },
    Acceptance {
        submission_id: String,
        acceptance: Acceptance,
    },
    AuthorDecision {
        submission_id: String,
        decision: AuthorChoice,
    },
    /// Promoted because the authors of a later version licensed all previous versions.
    PromotedByLaterVersion {
        current_submission_id: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionAssignment {
    pub artifact_id: String,
    pub kind: ArtifactKind,
    pub tier: PartitionLabel,
    pub derivation: Vec<DecisionFact>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WorkflowError {
    #[error(transparent)]
    Integrity(#[from] IntegrityError),
    #[error("resubmission links form a loop through {0}")]
    Cycle(String),
}

/// Per-snapshot decision lookups with the workflow defaults applied.
struct DecisionIndex<'a> {
    consents: BTreeMap<(&'a str, &'a str), ReviewerDecision>,
    acceptance: BTreeMap<&'a str, Acceptance>,
    authors: BTreeMap<&'a str, AuthorChoice>,
}

impl<'a> DecisionIndex<'a> {
    fn new(s: &'a VenueSnapshot) -> Self {
        DecisionIndex {
            consents: s
                .reviewer_consents
                .iter()
                .map(|c| ((c.reviewer_id.as_str(), c.cycle_id.as_str()), c.decision))
                .collect(),
            acceptance: s.submissions.iter().map(|x| (x.id.as_str(), x.acceptance)).collect(),
            authors: s.author_decisions.iter().map(|d| (d.submission_id.as_str(), d.decision)).collect(),
        }
    }

    fn consent(&self, reviewer: &str, cycle: &str) -> ReviewerDecision {
        self.consents.get(&(reviewer, cycle)).copied().unwrap_or(ReviewerDecision::NoResponse)
    }

    fn acceptance(&self, submission: &str) -> Acceptance {
        self.acceptance.get(submission).copied().unwrap_or(Acceptance::Pending)
    }

    fn author(&self, submission: &str) -> AuthorChoice {
        self.authors.get(submission).copied().unwrap_or(AuthorChoice::NoResponse)
    }
}

/// Assigns a tier to every review and to the draft of every accepted
/// submission. Output is sorted by kind then artifact id.
pub fn run_workflow(s: &VenueSnapshot) -> Result<Vec<PartitionAssignment>, WorkflowError> {
    let violations = validate_snapshot(s);
    if !violations.is_empty() {
        return Err(IntegrityError(violations).into());
    }
    let index = DecisionIndex::new(s);
    let mut out = Vec::with_capacity(s.reviews.len() + s.submissions.len());

    for r in &s.reviews {
        let inputs = WorkflowInputs {
            reviewer_decision: index.consent(&r.reviewer_id, &r.cycle_id),
            acceptance: index.acceptance(&r.submission_id),
            author_decision: index.author(&r.submission_id),
        };
        out.push(PartitionAssignment {
            artifact_id: r.id.clone(),
            kind: ArtifactKind::Review,
            tier: classify_review(inputs),
            derivation: vec![
                DecisionFact::ReviewerDecision {
                    reviewer_id: r.reviewer_id.clone(),
                    cycle_id: r.cycle_id.clone(),
                    decision: inputs.reviewer_decision,
                },
                DecisionFact::Acceptance { submission_id: r.submission_id.clone(), acceptance: inputs.acceptance },
                DecisionFact::AuthorDecision {
                    submission_id: r.submission_id.clone(),
                    decision: inputs.author_decision,
                },
            ],
        });
    }

    for sub in s.submissions.iter().filter(|x| x.acceptance == Acceptance::Accepted) {
        let decision = index.author(&sub.id);
        out.push(PartitionAssignment {
            artifact_id: sub.id.clone(),
            kind: ArtifactKind::Draft,
            tier: classify_draft(sub.acceptance, decision),
            derivation: vec![
                DecisionFact::Acceptance { submission_id: sub.id.clone(), acceptance: sub.acceptance },
                DecisionFact::AuthorDecision { submission_id: sub.id.clone(), decision },
            ],
        });
    }

    out.sort_by(|a, b| (a.kind, &a.artifact_id).cmp(&(b.kind, &b.artifact_id)));
    Ok(out)
}

/// Maps a submission id to its earlier versions, oldest first.
pub type ResubmissionMap = BTreeMap<String, Vec<String>>;

fn check_acyclic(link: &ResubmissionMap) -> Result<(), WorkflowError> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Active,
        Done,
    }
    fn visit<'a>(
        node: &'a str,
        link: &'a ResubmissionMap,
        marks: &mut BTreeMap<&'a str, Mark>,
    ) -> Result<(), WorkflowError> {
        match marks.get(node) {
            Some(Mark::Done) => return Ok(()),
            Some(Mark::Active) => return Err(WorkflowError::Cycle(node.to_owned())),
            None => {}
        }
        marks.insert(node, Mark::Active);
        for next in link.get(node).into_iter().flatten() {
            visit(next, link, marks)?;
        }
        marks.insert(node, Mark::Done);
        Ok(())
    }

    let mut marks = BTreeMap::new();
    for node in link.keys() {
        visit(node, link, &mut marks)?;
    }
    Ok(())
}

/// Runs the workflow, then promotes earlier versions of submissions whose
/// authors licensed all previous versions.
///
/// A consented review of an earlier version receives the tier the same
/// reviewer decision would get on the current version, and an earlier draft
/// receives the current draft's tier. Nothing is ever demoted and nothing is
/// promoted past the current version's own tier.
pub fn apply_previous_versions(
    s: &VenueSnapshot,
    link: &ResubmissionMap,
) -> Result<Vec<PartitionAssignment>, WorkflowError> {
    check_acyclic(link)?;
    let mut assignments = run_workflow(s)?;
    let index = DecisionIndex::new(s);

    let mut position: BTreeMap<(ArtifactKind, String), usize> =
        assignments.iter().enumerate().map(|(i, a)| ((a.kind, a.artifact_id.clone()), i)).collect();
    let mut reviews_by_submission: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, r) in s.reviews.iter().enumerate() {
        reviews_by_submission.entry(r.submission_id.as_str()).or_default().push(i);
    }

    for (current, earlier) in link {
        let acceptance = index.acceptance(current);
        let decision = index.author(current);
        if decision != AuthorChoice::PaperAndReviewsAllVersions || acceptance != Acceptance::Accepted {
            continue;
        }
        let draft_cap = classify_draft(acceptance, decision);
        let mut seen = BTreeSet::new();
        for prior in earlier.iter().filter(|p| *p != current && seen.insert(p.as_str())) {
            let fact = DecisionFact::PromotedByLaterVersion { current_submission_id: current.clone() };

            if s.submission(prior).is_some() {
                promote(&mut assignments, &mut position, ArtifactKind::Draft, prior, draft_cap, &fact);
            }
            for &ri in reviews_by_submission.get(prior.as_str()).into_iter().flatten() {
                let r = &s.reviews[ri];
                let cap = classify_review(WorkflowInputs {
                    reviewer_decision: index.consent(&r.reviewer_id, &r.cycle_id),
                    acceptance,
                    author_decision: decision,
                });
                promote(&mut assignments, &mut position, ArtifactKind::Review, &r.id, cap, &fact);
            }
        }
    }

    assignments.sort_by(|a, b| (a.kind, &a.artifact_id).cmp(&(b.kind, &b.artifact_id)));
    Ok(assignments)
}

fn promote(
    assignments: &mut Vec<PartitionAssignment>,
    position: &mut BTreeMap<(ArtifactKind, String), usize>,
    kind: ArtifactKind,
    id: &str,
    tier: PartitionLabel,
    fact: &DecisionFact,
) {
    if tier == PartitionLabel::Excluded {
        return;
    }
    match position.get(&(kind, id.to_owned())) {
        Some(&i) => {
            let a = &mut assignments[i];
            if tier > a.tier {
                a.tier = tier;
                a.derivation.push(fact.clone());
            }
        }
        None => {
            position.insert((kind, id.to_owned()), assignments.len());
            assignments.push(PartitionAssignment {
                artifact_id: id.to_owned(),
                kind,
                tier,
                derivation: vec![fact.clone()],
            });
        }
    }
}

/// Tier of every assignment keyed by `(kind, artifact id)`.
pub fn tier_index(assignments: &[PartitionAssignment]) -> BTreeMap<(ArtifactKind, &str), PartitionLabel> {
    assignments.iter().map(|a| ((a.kind, a.artifact_id.as_str()), a.tier)).collect()
}

/// Number of assignments per `(kind, tier)`.
pub fn tier_counts(assignments: &[PartitionAssignment]) -> BTreeMap<(ArtifactKind, PartitionLabel), usize> {
    let mut out = BTreeMap::new();
    for a in assignments {
        *out.entry((a.kind, a.tier)).or_insert(0) += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::*;
    use crate::model::VenueSnapshot;
    use proptest::prelude::*;

    use PartitionLabel::*;

    fn one_accepted(author_choice: AuthorChoice) -> VenueSnapshot {
        VenueSnapshot {
            cycles: vec![cycle("c1")],
            submissions: vec![submission("s1", "c1", Acceptance::Accepted)],
            reviews: vec![
                review("r1", "s1", "a", "c1", 6),
                review("r2", "s1", "b", "c1", 7),
                review("r3", "s1", "c", "c1", 8),
            ],
            reviewer_consents: vec![
                consent("a", "c1", ReviewerDecision::Agree),
                consent("b", "c1", ReviewerDecision::Agree),
                consent("c", "c1", ReviewerDecision::Decline),
            ],
            author_decisions: vec![author("s1", author_choice)],
            identity_map: Default::default(),
        }
    }

    #[test]
    fn review_examples() {
        let case =
            |r, a, d| classify_review(WorkflowInputs { reviewer_decision: r, acceptance: a, author_decision: d });
        assert_eq!(case(ReviewerDecision::Agree, Acceptance::Accepted, AuthorChoice::PaperAndReviews), Public3Y);
        assert_eq!(case(ReviewerDecision::Decline, Acceptance::Accepted, AuthorChoice::PaperAndReviews), Excluded);
        assert_eq!(case(ReviewerDecision::Agree, Acceptance::Accepted, AuthorChoice::PaperOnly), Protected2Y);
        assert_eq!(case(ReviewerDecision::Agree, Acceptance::Rejected, AuthorChoice::NoResponse), Protected1Y);
    }

    #[test]
    fn draft_examples() {
        assert_eq!(classify_draft(Acceptance::Accepted, AuthorChoice::PaperOnly), Public3Y);
        assert_eq!(classify_draft(Acceptance::Rejected, AuthorChoice::NoResponse), Excluded);
        assert_eq!(classify_draft(Acceptance::Accepted, AuthorChoice::Decline), Excluded);
    }

    #[test]
    fn one_submission_three_reviews() {
        let out = run_workflow(&one_accepted(AuthorChoice::PaperAndReviews)).unwrap();
        let tiers: Vec<_> = out.iter().map(|a| (a.kind, a.artifact_id.as_str(), a.tier)).collect();
        assert_eq!(
            tiers,
            vec![
                (ArtifactKind::Review, "r1", Public3Y),
                (ArtifactKind::Review, "r2", Public3Y),
                (ArtifactKind::Review, "r3", Excluded),
                (ArtifactKind::Draft, "s1", Public3Y),
            ]
        );
        assert!(out.iter().all(|a| !a.derivation.is_empty()));
    }

    #[test]
    fn pending_everywhere_stops_at_1y() {
        let mut s = one_accepted(AuthorChoice::NoResponse);
        s.submissions[0].acceptance = Acceptance::Pending;
        s.submissions[0].venue = None;
        s.author_decisions.clear();
        let out = run_workflow(&s).unwrap();
        assert!(out.iter().all(|a| a.kind == ArtifactKind::Review));
        let tiers: Vec<_> = out.iter().map(|a| a.tier).collect();
        assert_eq!(tiers, vec![Protected1Y, Protected1Y, Excluded]);
    }

    #[test]
    fn invalid_snapshot_is_integrity_error() {
        let mut s = one_accepted(AuthorChoice::PaperOnly);
        s.reviews[0].submission_id = "missing".into();
        assert!(matches!(run_workflow(&s), Err(WorkflowError::Integrity(_))));
    }

    fn with_prior(author_choice: AuthorChoice) -> (VenueSnapshot, ResubmissionMap) {
        let mut s = one_accepted(author_choice);
        s.cycles.push(cycle("c0"));
        s.submissions.push(submission("s0", "c0", Acceptance::Rejected));
        s.reviews.push(review("r0", "s0", "z", "c0", 5));
        s.reviews.push(review("r0b", "s0", "y", "c0", 5));
        s.reviewer_consents.push(consent("z", "c0", ReviewerDecision::Agree));
        let link = [("s1".to_owned(), vec!["s0".to_owned()])].into_iter().collect();
        (s, link)
    }

    #[test]
    fn all_versions_promotes_prior_review_and_draft() {
        let (s, link) = with_prior(AuthorChoice::PaperAndReviewsAllVersions);
        let out = apply_previous_versions(&s, &link).unwrap();
        let idx = tier_index(&out);
        assert_eq!(idx[&(ArtifactKind::Review, "r0")], Public3Y);
        // no consent from y: stays out
        assert_eq!(idx[&(ArtifactKind::Review, "r0b")], Excluded);
        assert_eq!(idx[&(ArtifactKind::Draft, "s0")], Public3Y);
        let r0 = out.iter().find(|a| a.artifact_id == "r0").unwrap();
        assert!(matches!(r0.derivation.last(), Some(DecisionFact::PromotedByLaterVersion { .. })));
    }

    #[test]
    fn without_all_versions_prior_stays_1y() {
        let (s, link) = with_prior(AuthorChoice::PaperAndReviews);
        let out = apply_previous_versions(&s, &link).unwrap();
        assert_eq!(tier_index(&out)[&(ArtifactKind::Review, "r0")], Protected1Y);
        assert_eq!(out, run_workflow(&s).unwrap());
    }

    #[test]
    fn empty_link_is_identity() {
        let (s, _) = with_prior(AuthorChoice::PaperAndReviewsAllVersions);
        assert_eq!(apply_previous_versions(&s, &ResubmissionMap::new()).unwrap(), run_workflow(&s).unwrap());
    }

    #[test]
    fn looped_links_are_rejected() {
        let (s, _) = with_prior(AuthorChoice::PaperAndReviewsAllVersions);
        let link: ResubmissionMap =
            [("s1".to_owned(), vec!["s0".to_owned()]), ("s0".to_owned(), vec!["s1".to_owned()])].into_iter().collect();
        assert!(matches!(apply_previous_versions(&s, &link), Err(WorkflowError::Cycle(_))));
        let self_loop: ResubmissionMap = [("s1".to_owned(), vec!["s1".to_owned()])].into_iter().collect();
        assert!(matches!(apply_previous_versions(&s, &self_loop), Err(WorkflowError::Cycle(_))));
    }

    fn inputs_strategy() -> impl Strategy<Value = WorkflowInputs> {
        (0..3usize, 0..3usize, 0..5usize).prop_map(|(r, a, d)| WorkflowInputs {
            reviewer_decision: REVIEWER_DECISIONS[r],
            acceptance: ACCEPTANCES[a],
            author_decision: AUTHOR_CHOICES[d],
        })
    }

    proptest! {
        #[test]
        fn workflow_ignores_record_order(seed in any::<u64>(), flip in any::<bool>()) {
            let (mut s, _) = with_prior(if flip { AuthorChoice::PaperOnly } else { AuthorChoice::PaperAndReviews });
            let base = run_workflow(&s).unwrap();
            let n = s.reviews.len();
            s.reviews.rotate_left((seed % 5) as usize % n);
            s.reviewer_consents.reverse();
            s.submissions.reverse();
            prop_assert_eq!(run_workflow(&s).unwrap(), base);
        }

        #[test]
        fn consent_is_required_for_any_tier(inputs in inputs_strategy()) {
            if classify_review(inputs) >= Protected1Y {
                prop_assert_eq!(inputs.reviewer_decision, ReviewerDecision::Agree);
            }
        }
    }
}
