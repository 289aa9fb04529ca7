//! Getting campaign data in: JSONL fixture bundles, the review-platform
//! adapter and its mock server, and reviewer-count bounds across cycles.

mod adapter;
mod bounds;
mod fixture;
pub mod mock;

use std::path::PathBuf;

use thiserror::Error;

use crate::model::IntegrityError;

pub use adapter::{fetch_snapshot, AdapterConfig, Page, TOKEN_ENV};
pub(crate) use bounds::reviews_by_reviewer;
pub use bounds::{reviewer_count, reviewer_count_bounds, ReviewerCount, ReviewerCountBounds};
pub use fixture::{
    canonical_files, load_fixture, save_fixture, snapshot_hash, FixtureBundle, IdentityLink, FIXTURE_FILES,
};

#[derive(Debug, Error)]
pub enum PlatformError {
    #[error("{file}:{line}: {message}")]
    Parse { file: String, line: usize, message: String },
    #[error(transparent)]
    Integrity(#[from] IntegrityError),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("authentication rejected: {0}")]
    Auth(String),
    #[error("transport failed after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("adapter config: {0}")]
    Config(String),
}
