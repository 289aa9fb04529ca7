//! Local content-addressed store for snapshots and workflow runs.
//!
//! Layout under the store root:
//!
//! ```text
//! snapshots/<hash>/*.jsonl   fixture bundle, hash = snapshot_hash
//! runs/<hash>.json           assignments, grants and attribution registry
//! LATEST                     hash of the most recently ingested snapshot
//! .lock                      advisory lock file
//! ```

use std::fs::{self, File, OpenOptions};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::io::{load_fixture, save_fixture, snapshot_hash, PlatformError};
use crate::licensing::{AttributionRegistry, GrantStore};
use crate::model::VenueSnapshot;
use crate::workflow::PartitionAssignment;

/// Overrides the store root.
pub const STORE_ENV: &str = "THREEYES_STORE";
pub const DEFAULT_ROOT: &str = ".threeyes";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("no snapshot matches {0}")]
    NotFound(String),
    #[error("{prefix} is ambiguous ({count} snapshots match)")]
    Ambiguous { prefix: String, count: usize },
    #[error("snapshot {0} has not been run yet")]
    NoRun(String),
    #[error("store is empty")]
    Empty,
    #[error(transparent)]
    Platform(#[from] PlatformError),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Json { path: PathBuf, source: serde_json::Error },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io { path: path.to_owned(), source }
}

/// Output of a workflow run over one snapshot.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunRecord {
    pub snapshot: String,
    pub assignments: Vec<PartitionAssignment>,
    pub grants: GrantStore,
    pub registry: AttributionRegistry,
}

#[derive(Debug, Clone)]
pub struct Store {
    root: PathBuf,
}

/// Held lock on the store; released on drop.
pub struct StoreLock(#[allow(dead_code)] File);

impl Store {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Store { root: root.into() }
    }

    /// `$THREEYES_STORE`, or `.threeyes` in the working directory.
    pub fn from_env() -> Self {
        Store::new(std::env::var_os(STORE_ENV).map_or_else(|| PathBuf::from(DEFAULT_ROOT), PathBuf::from))
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn snapshot_dir(&self, hash: &str) -> PathBuf {
        self.root.join("snapshots").join(hash)
    }

    fn run_path(&self, hash: &str) -> PathBuf {
        self.root.join("runs").join(format!("{hash}.json"))
    }

    fn lock_file(&self) -> Result<File, StoreError> {
        fs::create_dir_all(&self.root).map_err(io_err(&self.root))?;
        let path = self.root.join(".lock");
        OpenOptions::new().create(true).truncate(false).write(true).open(&path).map_err(io_err(&path))
    }

    pub fn lock_exclusive(&self) -> Result<StoreLock, StoreError> {
        let f = self.lock_file()?;
        f.lock().map_err(io_err(&self.root))?;
        Ok(StoreLock(f))
    }

    pub fn lock_shared(&self) -> Result<StoreLock, StoreError> {
        let f = self.lock_file()?;
        f.lock_shared().map_err(io_err(&self.root))?;
        Ok(StoreLock(f))
    }

    /// Stores `s` under its content hash and marks it latest. Storing an
    /// already present snapshot only updates `LATEST`.
    pub fn put_snapshot(&self, s: &VenueSnapshot) -> Result<String, StoreError> {
        let _lock = self.lock_exclusive()?;
        let hash = snapshot_hash(s);
        let dir = self.snapshot_dir(&hash);
        if !dir.exists() {
            let parent = self.root.join("snapshots");
            fs::create_dir_all(&parent).map_err(io_err(&parent))?;
            let tmp = parent.join(format!(".{hash}.tmp"));
            if tmp.exists() {
                fs::remove_dir_all(&tmp).map_err(io_err(&tmp))?;
            }
            save_fixture(s, &tmp)?;
            fs::rename(&tmp, &dir).map_err(io_err(&dir))?;
        }
        write_atomic(&self.root.join("LATEST"), format!("{hash}\n").as_bytes())?;
        Ok(hash)
    }

    fn hashes(&self) -> Result<Vec<String>, StoreError> {
        let dir = self.root.join("snapshots");
        let entries = match fs::read_dir(&dir) {
            Ok(e) => e,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(source) => return Err(StoreError::Io { path: dir, source }),
        };
        let mut out = Vec::new();
        for entry in entries {
            let name = entry.map_err(io_err(&dir))?.file_name().to_string_lossy().into_owned();
            if !name.starts_with('.') {
                out.push(name);
            }
        }
        out.sort();
        Ok(out)
    }

    /// Full hash for a unique prefix, or for `latest`.
    pub fn resolve(&self, reference: &str) -> Result<String, StoreError> {
        if reference.eq_ignore_ascii_case("latest") {
            let path = self.root.join("LATEST");
            return match fs::read_to_string(&path) {
                Ok(h) => Ok(h.trim().to_owned()),
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => Err(StoreError::Empty),
                Err(source) => Err(StoreError::Io { path, source }),
            };
        }
        let matches: Vec<String> = self.hashes()?.into_iter().filter(|h| h.starts_with(reference)).collect();
        match matches.len() {
            0 => Err(StoreError::NotFound(reference.to_owned())),
            1 => Ok(matches.into_iter().next().unwrap()),
            count => Err(StoreError::Ambiguous { prefix: reference.to_owned(), count }),
        }
    }

    pub fn load_snapshot(&self, reference: &str) -> Result<(String, VenueSnapshot), StoreError> {
        let _lock = self.lock_shared()?;
        let hash = self.resolve(reference)?;
        let s = load_fixture(&self.snapshot_dir(&hash))?;
        Ok((hash, s))
    }

    pub fn put_run(&self, run: &RunRecord) -> Result<PathBuf, StoreError> {
        let _lock = self.lock_exclusive()?;
        let path = self.run_path(&run.snapshot);
        let dir = self.root.join("runs");
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let json =
            serde_json::to_string_pretty(run).map_err(|source| StoreError::Json { path: path.clone(), source })?;
        write_atomic(&path, (json + "\n").as_bytes())?;
        Ok(path)
    }

    pub fn load_run(&self, hash: &str) -> Result<RunRecord, StoreError> {
        let _lock = self.lock_shared()?;
        let path = self.run_path(hash);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Err(StoreError::NoRun(hash.to_owned())),
            Err(source) => return Err(StoreError::Io { path, source }),
        };
        serde_json::from_str(&text).map_err(|source| StoreError::Json { path, source })
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::licensing::GrantStore;
    use crate::model::fixtures::*;
    use crate::model::{Acceptance, AuthorChoice, ReviewerDecision, Timestamp};
    use crate::workflow::run_workflow;

    fn snapshot() -> VenueSnapshot {
        let mut s = VenueSnapshot { cycles: vec![cycle("c1")], ..Default::default() };
        s.submissions.push(submission("sub-1", "c1", Acceptance::Accepted));
        s.reviews.push(review("rev-1", "sub-1", "rvw-1", "c1", 6));
        s.reviewer_consents.push(consent("rvw-1", "c1", ReviewerDecision::Agree));
        s.author_decisions.push(author("sub-1", AuthorChoice::PaperAndReviews));
        s
    }

    #[test]
    fn snapshot_round_trip_by_prefix_and_latest() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::new(dir.path());
        assert!(matches!(store.resolve("latest"), Err(StoreError::Empty)));
        let s = snapshot();
        let h = store.put_snapshot(&s).unwrap();
        assert_eq!(h, snapshot_hash(&s));
        assert_eq!(store.put_snapshot(&s).unwrap(), h);
        assert_eq!(store.load_snapshot(&h[..8]).unwrap(), (h.clone(), s.clone().normalized()));
        assert_eq!(store.resolve("latest").unwrap(), h);
        assert!(matches!(store.resolve("zz"), Err(StoreError::NotFound(_))));

        let h2 = store.put_snapshot(&VenueSnapshot::default()).unwrap();
        assert_eq!(store.resolve("LATEST").unwrap(), h2);
        assert!(matches!(store.resolve(""), Err(StoreError::Ambiguous { count: 2, .. })));
    }

    #[test]
    fn run_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::new(dir.path());
        let s = snapshot();
        let h = store.put_snapshot(&s).unwrap();
        assert!(matches!(store.load_run(&h), Err(StoreError::NoRun(_))));
        let assignments = run_workflow(&s).unwrap();
        let mut grants = GrantStore::new();
        grants.record_all(&assignments, Timestamp(5));
        let run = RunRecord { snapshot: h.clone(), assignments, grants, registry: Default::default() };
        store.put_run(&run).unwrap();
        assert_eq!(store.load_run(&h).unwrap(), run);
    }

    #[test]
    fn shared_locks_coexist() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::new(dir.path());
        let a = store.lock_shared().unwrap();
        let b = store.lock_shared().unwrap();
        drop((a, b));
        let _x = store.lock_exclusive().unwrap();
    }
}
