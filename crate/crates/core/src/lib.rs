//! Consent-gated collection of peer-review data.
//!
//! Reviews and paper drafts pass three gates before publication: the
//! reviewer agrees to donate, the paper is accepted, and the authors agree to
//! release. [`workflow`] assigns every artifact its tier, [`licensing`] tracks
//! the license grants and attribution notice, [`analytics`] computes aggregate
//! statistics over tier subsets, and [`export`] writes release bundles.
//! [`synth`] generates synthetic campaigns for end-to-end runs.

pub mod analytics;
pub mod config;
pub mod export;
pub mod io;
pub mod licensing;
pub mod model;
pub mod store;
pub mod synth;
pub mod workflow;

pub use model::{
    Acceptance, AuthorChoice, AuthorDecision, Cycle, IntegrityError, ReviewRecord, ReviewerConsent, ReviewerDecision,
    ScoreHalf, Submission, Timestamp, VenueSnapshot,
};
pub use workflow::{ArtifactKind, PartitionAssignment, PartitionLabel};
