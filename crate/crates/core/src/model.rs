//! Domain records for one or more reviewing cycles, plus snapshot validation.
//!
//! Principal ids (reviewers, authors) are opaque pseudonyms throughout. Real
//! names only ever live in the attribution registry of [`crate::licensing`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Character limit for the free-text review form fields.
pub const TEXT_FIELD_LIMIT: usize = 20_000;
/// Character limit for the ethical concerns field.
pub const ETHICS_FIELD_LIMIT: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("off-lattice score {0}: overall scores move in steps of 0.5")]
    OffLattice(f64),
    #[error("score {0} outside [1, 5]")]
    OutOfRange(f64),
}

/// Milliseconds since the Unix epoch, UTC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Timestamp(pub i64);

impl Timestamp {
    pub fn millis(self) -> i64 {
        self.0
    }

    /// Calendar day (UTC) as `YYYY-MM-DD`.
    pub fn day(self) -> String {
        chrono::DateTime::from_timestamp_millis(self.0)
            .map(|d| d.format("%Y-%m-%d").to_string())
            .unwrap_or_else(|| "invalid-date".to_owned())
    }
}

/// Overall assessment score stored in half-point units.
///
/// The score `x` is held as `2x`, so the nine legal values 1.0, 1.5, ..., 5.0
/// are the integers 2..=10. Serialized as the decimal score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ScoreHalf(u8);

impl ScoreHalf {
    pub const MIN_TWICE: u8 = 2;
    pub const MAX_TWICE: u8 = 10;

    /// All nine lattice values in ascending order.
    pub fn lattice() -> impl Iterator<Item = ScoreHalf> {
        (Self::MIN_TWICE..=Self::MAX_TWICE).map(ScoreHalf)
    }

    pub fn new(twice_value: u8) -> Result<Self, ModelError> {
        let s = ScoreHalf(twice_value);
        if s.in_range() {
            Ok(s)
        } else {
            Err(ModelError::OutOfRange(s.value()))
        }
    }

    /// Builds a score without the range check. Out-of-range values are
    /// reported by [`validate_snapshot`].
    pub fn from_twice_unchecked(twice_value: u8) -> Self {
        ScoreHalf(twice_value)
    }

    pub fn twice_value(self) -> u8 {
        self.0
    }

    pub fn value(self) -> f64 {
        f64::from(self.0) / 2.0
    }

    pub fn in_range(self) -> bool {
        (Self::MIN_TWICE..=Self::MAX_TWICE).contains(&self.0)
    }

    /// Position on the lattice, 0 for 1.0 up to 8 for 5.0.
    pub fn index(self) -> usize {
        usize::from(self.0.saturating_sub(Self::MIN_TWICE))
    }
}

impl fmt::Display for ScoreHalf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.1}", self.value())
    }
}

/// Encodes a decimal overall score onto the half-step lattice.
pub fn encode_overall(x: f64) -> Result<ScoreHalf, ModelError> {
    let twice = half_units(x)?;
    if !(f64::from(ScoreHalf::MIN_TWICE)..=f64::from(ScoreHalf::MAX_TWICE)).contains(&twice) {
        return Err(ModelError::OutOfRange(x));
    }
    Ok(ScoreHalf(twice as u8))
}

fn half_units(x: f64) -> Result<f64, ModelError> {
    let twice = x * 2.0;
    if !twice.is_finite() || twice.fract() != 0.0 {
        return Err(ModelError::OffLattice(x));
    }
    Ok(twice)
}

impl Serialize for ScoreHalf {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.value())
    }
}

impl<'de> Deserialize<'de> for ScoreHalf {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let x = f64::deserialize(deserializer)?;
        let twice = half_units(x).map_err(serde::de::Error::custom)?;
        if !(0.0..=f64::from(u8::MAX)).contains(&twice) {
            return Err(serde::de::Error::custom(ModelError::OutOfRange(x)));
        }
        // Range is checked by validation so that a bad score surfaces as a
        // violation tied to its record rather than a parse failure.
        Ok(ScoreHalf(twice as u8))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cycle {
    pub id: String,
    pub label: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Acceptance {
    Accepted,
    Rejected,
    Pending,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Submission {
    pub id: String,
    pub cycle_id: String,
    pub author_ids: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub draft_ref: Option<String>,
    pub acceptance: Acceptance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub venue: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BestPaper {
    Yes,
    Maybe,
    No,
}

/// Free-text fields of the review form.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextFields {
    pub paper_summary: String,
    pub summary_of_strengths: String,
    pub summary_of_weaknesses: String,
    pub comments_suggestions_typos: String,
    pub best_paper_justification: String,
    pub ethical_concerns: String,
}

impl TextFields {
    pub const NAMES: [&'static str; 6] = [
        "paper_summary",
        "summary_of_strengths",
        "summary_of_weaknesses",
        "comments_suggestions_typos",
        "best_paper_justification",
        "ethical_concerns",
    ];

    /// `(field name, content, character limit)` for every field.
    pub fn entries(&self) -> [(&'static str, &str, usize); 6] {
        [
            ("paper_summary", &self.paper_summary, TEXT_FIELD_LIMIT),
            ("summary_of_strengths", &self.summary_of_strengths, TEXT_FIELD_LIMIT),
            ("summary_of_weaknesses", &self.summary_of_weaknesses, TEXT_FIELD_LIMIT),
            ("comments_suggestions_typos", &self.comments_suggestions_typos, TEXT_FIELD_LIMIT),
            ("best_paper_justification", &self.best_paper_justification, TEXT_FIELD_LIMIT),
            ("ethical_concerns", &self.ethical_concerns, ETHICS_FIELD_LIMIT),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewRecord {
    pub id: String,
    pub submission_id: String,
    pub reviewer_id: String,
    pub cycle_id: String,
    pub text_fields: TextFields,
    pub overall: ScoreHalf,
    pub confidence: u8,
    pub best_paper: BestPaper,
    pub replicability: u8,
    pub datasets: u8,
    pub software: u8,
    pub author_identity_guess: u8,
    pub submitted_at: Timestamp,
}

impl ReviewRecord {
    /// The 1-5 integer form fields by name.
    pub fn integer_fields(&self) -> [(&'static str, u8); 5] {
        [
            ("confidence", self.confidence),
            ("replicability", self.replicability),
            ("datasets", self.datasets),
            ("software", self.software),
            ("author_identity_guess", self.author_identity_guess),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReviewerDecision {
    Agree,
    Decline,
    NoResponse,
}

/// A reviewer's bulk donation decision covering all of their reviews in one cycle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewerConsent {
    pub reviewer_id: String,
    pub cycle_id: String,
    pub decision: ReviewerDecision,
    #[serde(default)]
    pub attribution_requested: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decided_at: Option<Timestamp>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuthorChoice {
    NoResponse,
    Decline,
    PaperOnly,
    PaperAndReviews,
    PaperAndReviewsAllVersions,
}

impl AuthorChoice {
    pub fn donates_draft(self) -> bool {
        matches!(
            self,
            AuthorChoice::PaperOnly | AuthorChoice::PaperAndReviews | AuthorChoice::PaperAndReviewsAllVersions
        )
    }

    pub fn permits_reviews(self) -> bool {
        matches!(self, AuthorChoice::PaperAndReviews | AuthorChoice::PaperAndReviewsAllVersions)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthorDecision {
    pub submission_id: String,
    pub decision: AuthorChoice,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decided_at: Option<Timestamp>,
}

/// Everything known about a set of reviewing cycles at one point in time.
///
/// `identity_map` links per-cycle reviewer ids to stable cross-cycle ids. An
/// empty map means no linkage is available.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VenueSnapshot {
    pub cycles: Vec<Cycle>,
    pub submissions: Vec<Submission>,
    pub reviews: Vec<ReviewRecord>,
    pub reviewer_consents: Vec<ReviewerConsent>,
    pub author_decisions: Vec<AuthorDecision>,
    #[serde(default)]
    pub identity_map: BTreeMap<String, String>,
}

impl VenueSnapshot {
    pub fn has_identity_map(&self) -> bool {
        !self.identity_map.is_empty()
    }

    /// Sorts every record list into its canonical order.
    pub fn normalize(&mut self) {
        self.cycles.sort_by(|a, b| a.id.cmp(&b.id));
        self.submissions.sort_by(|a, b| a.id.cmp(&b.id));
        self.reviews.sort_by(|a, b| a.id.cmp(&b.id));
        self.reviewer_consents.sort_by(|a, b| {
            (&a.cycle_id, &a.reviewer_id, a.decided_at).cmp(&(&b.cycle_id, &b.reviewer_id, b.decided_at))
        });
        self.author_decisions.sort_by(|a, b| (&a.submission_id, a.decided_at).cmp(&(&b.submission_id, b.decided_at)));
    }

    pub fn normalized(mut self) -> Self {
        self.normalize();
        self
    }

    pub fn submission(&self, id: &str) -> Option<&Submission> {
        self.submissions.iter().find(|s| s.id == id)
    }

    /// Drops duplicate consent rows for the same `(reviewer, cycle)` and
    /// duplicate author decisions, keeping the latest by timestamp. Returns
    /// the number of rows dropped.
    pub fn dedup_decisions(&mut self) -> usize {
        let before = self.reviewer_consents.len() + self.author_decisions.len();

        let mut consents: BTreeMap<(String, String), ReviewerConsent> = BTreeMap::new();
        for c in self.reviewer_consents.drain(..) {
            let key = (c.reviewer_id.clone(), c.cycle_id.clone());
            match consents.get(&key) {
                Some(existing) if existing.decided_at > c.decided_at => {
                    log::warn!("dropping earlier consent row for {} in {}", key.0, key.1);
                }
                Some(_) => {
                    log::warn!("replacing consent row for {} in {}", key.0, key.1);
                    consents.insert(key, c);
                }
                None => {
                    consents.insert(key, c);
                }
            }
        }
        self.reviewer_consents = consents.into_values().collect();

        let mut decisions: BTreeMap<String, AuthorDecision> = BTreeMap::new();
        for d in self.author_decisions.drain(..) {
            match decisions.get(&d.submission_id) {
                Some(existing) if existing.decided_at > d.decided_at => {
                    log::warn!("dropping earlier author decision for {}", d.submission_id);
                }
                _ => {
                    decisions.insert(d.submission_id.clone(), d);
                }
            }
        }
        self.author_decisions = decisions.into_values().collect();

        self.normalize();
        before - self.reviewer_consents.len() - self.author_decisions.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ViolationKind {
    DuplicateId,
    EmptyLabel,
    UnknownCycle,
    UnknownSubmission,
    NoAuthors,
    VenueMismatch,
    ScoreOutOfRange,
    FieldOutOfRange,
    TextTooLong,
    CycleMismatch,
    AttributionWithoutAgreement,
    DecisionTimestamp,
    DuplicateConsent,
    DuplicateAuthorDecision,
    AuthorDecisionNotAccepted,
    IdentityMapIncomplete,
}

impl ViolationKind {
    pub fn message(self) -> &'static str {
        match self {
            ViolationKind::DuplicateId => "duplicate id",
            ViolationKind::EmptyLabel => "empty cycle label",
            ViolationKind::UnknownCycle => "unknown cycle",
            ViolationKind::UnknownSubmission => "unknown submission",
            ViolationKind::NoAuthors => "submission without authors",
            ViolationKind::VenueMismatch => "venue must be set iff accepted",
            ViolationKind::ScoreOutOfRange => "ScoreHalf out of range",
            ViolationKind::FieldOutOfRange => "form field out of range",
            ViolationKind::TextTooLong => "text field over form limit",
            ViolationKind::CycleMismatch => "cycle mismatch",
            ViolationKind::AttributionWithoutAgreement => "attribution requested without agreement",
            ViolationKind::DecisionTimestamp => "decided_at must be absent iff no_response",
            ViolationKind::DuplicateConsent => "duplicate consent for reviewer and cycle",
            ViolationKind::DuplicateAuthorDecision => "duplicate author decision",
            ViolationKind::AuthorDecisionNotAccepted => "author decision on a non-accepted submission",
            ViolationKind::IdentityMapIncomplete => "identity map missing reviewer",
        }
    }
}

/// One broken invariant, tied to the record that breaks it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub record_id: String,
    pub kind: ViolationKind,
    pub detail: String,
}

impl Violation {
    fn new(record_id: impl Into<String>, kind: ViolationKind, detail: impl Into<String>) -> Self {
        Violation { record_id: record_id.into(), kind, detail: detail.into() }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.record_id, self.kind.message())?;
        if !self.detail.is_empty() {
            write!(f, " ({})", self.detail)?;
        }
        Ok(())
    }
}

/// A snapshot failed validation.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("snapshot failed validation with {} violation(s): {}", .0.len(), summarize(.0))]
pub struct IntegrityError(pub Vec<Violation>);

fn summarize(violations: &[Violation]) -> String {
    let mut parts: Vec<String> = violations.iter().take(5).map(|v| v.to_string()).collect();
    if violations.len() > 5 {
        parts.push(format!("... {} more", violations.len() - 5));
    }
    parts.join("; ")
}

/// Checks every record invariant and referential link in `s`.
pub fn validate_snapshot(s: &VenueSnapshot) -> Vec<Violation> {
    let mut out = Vec::new();

    let mut cycle_ids = BTreeSet::new();
    for c in &s.cycles {
        if !cycle_ids.insert(c.id.as_str()) {
            out.push(Violation::new(&c.id, ViolationKind::DuplicateId, "cycle"));
        }
        if c.label.trim().is_empty() {
            out.push(Violation::new(&c.id, ViolationKind::EmptyLabel, ""));
        }
    }

    let mut submissions: BTreeMap<&str, &Submission> = BTreeMap::new();
    for sub in &s.submissions {
        if submissions.insert(sub.id.as_str(), sub).is_some() {
            out.push(Violation::new(&sub.id, ViolationKind::DuplicateId, "submission"));
        }
        if !cycle_ids.contains(sub.cycle_id.as_str()) {
            out.push(Violation::new(&sub.id, ViolationKind::UnknownCycle, &sub.cycle_id));
        }
        if sub.author_ids.is_empty() {
            out.push(Violation::new(&sub.id, ViolationKind::NoAuthors, ""));
        }
        if (sub.acceptance == Acceptance::Accepted) != sub.venue.is_some() {
            out.push(Violation::new(&sub.id, ViolationKind::VenueMismatch, ""));
        }
    }

    let mut review_ids = BTreeSet::new();
    for r in &s.reviews {
        if !review_ids.insert(r.id.as_str()) {
            out.push(Violation::new(&r.id, ViolationKind::DuplicateId, "review"));
        }
        if !r.overall.in_range() {
            out.push(Violation::new(
                &r.id,
                ViolationKind::ScoreOutOfRange,
                format!("twice_value={}", r.overall.twice_value()),
            ));
        }
        for (name, v) in r.integer_fields() {
            if !(1..=5).contains(&v) {
                out.push(Violation::new(&r.id, ViolationKind::FieldOutOfRange, format!("{name}={v}")));
            }
        }
        for (name, text, limit) in r.text_fields.entries() {
            let n = text.chars().count();
            if n > limit {
                out.push(Violation::new(&r.id, ViolationKind::TextTooLong, format!("{name}: {n} > {limit}")));
            }
        }
        if !cycle_ids.contains(r.cycle_id.as_str()) {
            out.push(Violation::new(&r.id, ViolationKind::UnknownCycle, &r.cycle_id));
        }
        match submissions.get(r.submission_id.as_str()) {
            None => out.push(Violation::new(&r.id, ViolationKind::UnknownSubmission, &r.submission_id)),
            Some(sub) if sub.cycle_id != r.cycle_id => out.push(Violation::new(
                &r.id,
                ViolationKind::CycleMismatch,
                format!("review {} vs submission {}", r.cycle_id, sub.cycle_id),
            )),
            Some(_) => {}
        }
    }

    let mut consent_keys = BTreeSet::new();
    for c in &s.reviewer_consents {
        let rid = format!("{}@{}", c.reviewer_id, c.cycle_id);
        if !consent_keys.insert((c.reviewer_id.as_str(), c.cycle_id.as_str())) {
            out.push(Violation::new(&rid, ViolationKind::DuplicateConsent, ""));
        }
        if !cycle_ids.contains(c.cycle_id.as_str()) {
            out.push(Violation::new(&rid, ViolationKind::UnknownCycle, &c.cycle_id));
        }
        if c.attribution_requested && c.decision != ReviewerDecision::Agree {
            out.push(Violation::new(&rid, ViolationKind::AttributionWithoutAgreement, ""));
        }
        if (c.decision == ReviewerDecision::NoResponse) != c.decided_at.is_none() {
            out.push(Violation::new(&rid, ViolationKind::DecisionTimestamp, ""));
        }
    }

    let mut decided = BTreeSet::new();
    for d in &s.author_decisions {
        if !decided.insert(d.submission_id.as_str()) {
            out.push(Violation::new(&d.submission_id, ViolationKind::DuplicateAuthorDecision, ""));
        }
        match submissions.get(d.submission_id.as_str()) {
            None => out.push(Violation::new(&d.submission_id, ViolationKind::UnknownSubmission, "author decision")),
            Some(sub) => {
                if d.decision != AuthorChoice::NoResponse && sub.acceptance != Acceptance::Accepted {
                    out.push(Violation::new(&d.submission_id, ViolationKind::AuthorDecisionNotAccepted, ""));
                }
            }
        }
    }

    if s.has_identity_map() {
        let missing: BTreeSet<&str> =
            s.reviews.iter().map(|r| r.reviewer_id.as_str()).filter(|id| !s.identity_map.contains_key(*id)).collect();
        for id in missing {
            out.push(Violation::new(id, ViolationKind::IdentityMapIncomplete, ""));
        }
    }

    out
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    fn small() -> VenueSnapshot {
        VenueSnapshot {
            cycles: vec![cycle("2021-09"), cycle("2021-10")],
            submissions: vec![submission("s1", "2021-09", Acceptance::Accepted)],
            reviews: vec![review("r1", "s1", "rv1", "2021-09", 7)],
            reviewer_consents: vec![consent("rv1", "2021-09", ReviewerDecision::Agree)],
            author_decisions: vec![author("s1", AuthorChoice::PaperAndReviews)],
            identity_map: BTreeMap::new(),
        }
    }

    #[test]
    fn encode_examples() {
        assert_eq!(encode_overall(3.5).unwrap().twice_value(), 7);
        assert_eq!(encode_overall(1.0).unwrap().twice_value(), 2);
        assert_eq!(encode_overall(3.25), Err(ModelError::OffLattice(3.25)));
        assert_eq!(encode_overall(5.5), Err(ModelError::OutOfRange(5.5)));
        assert_eq!(encode_overall(0.5), Err(ModelError::OutOfRange(0.5)));
        assert!(encode_overall(f64::NAN).is_err());
    }

    #[test]
    fn encode_is_bijection_onto_2_to_10() {
        let encoded: Vec<u8> = (2..=10).map(|t| encode_overall(f64::from(t) / 2.0).unwrap().twice_value()).collect();
        assert_eq!(encoded, (2..=10).collect::<Vec<_>>());
        for s in ScoreHalf::lattice() {
            assert_eq!(encode_overall(s.value()).unwrap(), s);
        }
    }

    #[test]
    fn empty_snapshot_is_valid() {
        assert!(validate_snapshot(&VenueSnapshot::default()).is_empty());
        assert!(validate_snapshot(&small()).is_empty());
    }

    #[test]
    fn score_out_of_range_is_one_violation() {
        let mut s = small();
        s.reviews[0].overall = ScoreHalf::from_twice_unchecked(11);
        let v = validate_snapshot(&s);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::ScoreOutOfRange);
        assert_eq!(v[0].record_id, "r1");
        assert!(v[0].to_string().contains("ScoreHalf out of range"));
    }

    #[test]
    fn cycle_mismatch_is_one_violation() {
        let mut s = small();
        s.reviews[0].cycle_id = "2021-10".into();
        let v = validate_snapshot(&s);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::CycleMismatch);
        assert!(v[0].to_string().contains("cycle mismatch"));
    }

    #[test]
    fn consent_and_author_invariants() {
        let mut s = small();
        s.reviewer_consents[0].decision = ReviewerDecision::Decline;
        s.reviewer_consents[0].attribution_requested = true;
        s.reviewer_consents.push(consent("rv1", "2021-09", ReviewerDecision::Agree));
        s.submissions[0].acceptance = Acceptance::Rejected;
        s.submissions[0].venue = None;
        let kinds: BTreeSet<_> = validate_snapshot(&s).into_iter().map(|v| v.kind).collect();
        assert!(kinds.contains(&ViolationKind::AttributionWithoutAgreement));
        assert!(kinds.contains(&ViolationKind::DuplicateConsent));
        assert!(kinds.contains(&ViolationKind::AuthorDecisionNotAccepted));
    }

    #[test]
    fn text_limits_count_characters() {
        let mut s = small();
        s.reviews[0].text_fields.ethical_concerns = "é".repeat(ETHICS_FIELD_LIMIT);
        assert!(validate_snapshot(&s).is_empty());
        s.reviews[0].text_fields.ethical_concerns.push('x');
        assert_eq!(validate_snapshot(&s)[0].kind, ViolationKind::TextTooLong);
        s.reviews[0].text_fields.ethical_concerns.clear();
        s.reviews[0].text_fields.paper_summary = "a".repeat(TEXT_FIELD_LIMIT + 1);
        assert_eq!(validate_snapshot(&s)[0].kind, ViolationKind::TextTooLong);
    }

    #[test]
    fn identity_map_must_cover_reviewers() {
        let mut s = small();
        s.identity_map.insert("someone-else".into(), "p1".into());
        let v = validate_snapshot(&s);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::IdentityMapIncomplete);
        s.identity_map.insert("rv1".into(), "p1".into());
        assert!(validate_snapshot(&s).is_empty());
    }

    #[test]
    fn dedup_keeps_latest_consent() {
        let mut s = small();
        let mut later = consent("rv1", "2021-09", ReviewerDecision::Decline);
        later.decided_at = Some(Timestamp(1_630_600_000_000));
        s.reviewer_consents.insert(0, later);
        assert_eq!(s.dedup_decisions(), 1);
        assert_eq!(s.reviewer_consents.len(), 1);
        assert_eq!(s.reviewer_consents[0].decision, ReviewerDecision::Decline);
        assert!(validate_snapshot(&s).is_empty());
    }

    #[test]
    fn score_serializes_as_decimal() {
        let s = encode_overall(3.5).unwrap();
        assert_eq!(serde_json::to_string(&s).unwrap(), "3.5");
        let back: ScoreHalf = serde_json::from_str("4").unwrap();
        assert_eq!(back.twice_value(), 8);
        assert!(serde_json::from_str::<ScoreHalf>("3.25").is_err());
        let raw: ScoreHalf = serde_json::from_str("5.5").unwrap();
        assert!(!raw.in_range());
    }
}
