use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::PlatformError;
use crate::licensing::sha256_hex;
use crate::model::{validate_snapshot, IntegrityError, VenueSnapshot};

/// Bundle files in the order they are written.
pub const FIXTURE_FILES: [&str; 6] = [
    "cycles.jsonl",
    "submissions.jsonl",
    "reviews.jsonl",
    "reviewer_consents.jsonl",
    "author_decisions.jsonl",
    "identity_map.jsonl",
];

/// One line of `identity_map.jsonl`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentityLink {
    pub reviewer_id: String,
    pub stable_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixtureBundle {
    pub dir: PathBuf,
    pub files: Vec<PathBuf>,
}

fn jsonl<T: Serialize>(records: &[T]) -> String {
    let mut out = String::new();
    for r in records {
        // Plain data with string keys; serialization cannot fail.
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out
}

/// The six bundle files of `s` in canonical (sorted) form.
pub fn canonical_files(s: &VenueSnapshot) -> Vec<(&'static str, String)> {
    let s = s.clone().normalized();
    let links: Vec<IdentityLink> =
        s.identity_map.iter().map(|(k, v)| IdentityLink { reviewer_id: k.clone(), stable_id: v.clone() }).collect();
    vec![
        (FIXTURE_FILES[0], jsonl(&s.cycles)),
        (FIXTURE_FILES[1], jsonl(&s.submissions)),
        (FIXTURE_FILES[2], jsonl(&s.reviews)),
        (FIXTURE_FILES[3], jsonl(&s.reviewer_consents)),
        (FIXTURE_FILES[4], jsonl(&s.author_decisions)),
        (FIXTURE_FILES[5], jsonl(&links)),
    ]
}

/// Content hash of the canonical bundle; equal snapshots hash equal
/// regardless of in-memory record order.
pub fn snapshot_hash(s: &VenueSnapshot) -> String {
    let mut buf = Vec::new();
    for (name, body) in canonical_files(s) {
        buf.extend_from_slice(name.as_bytes());
        buf.push(0);
        buf.extend_from_slice(body.as_bytes());
        buf.push(0);
    }
    sha256_hex(&buf)
}

/// Writes `s` as a bundle under `dir`, records sorted by id. Saving equal
/// snapshots produces byte-identical files.
pub fn save_fixture(s: &VenueSnapshot, dir: &Path) -> Result<FixtureBundle, PlatformError> {
    let violations = validate_snapshot(s);
    if !violations.is_empty() {
        return Err(IntegrityError(violations).into());
    }
    fs::create_dir_all(dir).map_err(|source| PlatformError::Io { path: dir.to_owned(), source })?;
    let mut files = Vec::new();
    for (name, body) in canonical_files(s) {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|source| PlatformError::Io { path: path.clone(), source })?;
        files.push(path);
    }
    Ok(FixtureBundle { dir: dir.to_owned(), files })
}

fn read_jsonl<T: DeserializeOwned>(dir: &Path, name: &str, required: bool) -> Result<Vec<T>, PlatformError> {
    let path = dir.join(name);
    let text = match fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) if !required && e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(source) => return Err(PlatformError::Io { path, source }),
    };
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(line).map_err(|e| PlatformError::Parse {
            file: name.to_owned(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(record);
    }
    Ok(out)
}

/// Reads and validates a bundle. Duplicate decision rows keep the latest by
/// timestamp; any remaining invariant violation is an integrity error.
pub fn load_fixture(dir: &Path) -> Result<VenueSnapshot, PlatformError> {
    let links: Vec<IdentityLink> = read_jsonl(dir, FIXTURE_FILES[5], false)?;
    let mut s = VenueSnapshot {
        cycles: read_jsonl(dir, FIXTURE_FILES[0], true)?,
        submissions: read_jsonl(dir, FIXTURE_FILES[1], true)?,
        reviews: read_jsonl(dir, FIXTURE_FILES[2], true)?,
        reviewer_consents: read_jsonl(dir, FIXTURE_FILES[3], true)?,
        author_decisions: read_jsonl(dir, FIXTURE_FILES[4], true)?,
        identity_map: Default::default(),
    };
    for (i, link) in links.into_iter().enumerate() {
        if s.identity_map.insert(link.reviewer_id, link.stable_id).is_some() {
            return Err(PlatformError::Parse {
                file: FIXTURE_FILES[5].to_owned(),
                line: i + 1,
                message: "duplicate reviewer_id".into(),
            });
        }
    }
    finish(s)
}

pub(super) fn finish(mut s: VenueSnapshot) -> Result<VenueSnapshot, PlatformError> {
    let dropped = s.dedup_decisions();
    if dropped > 0 {
        log::info!("kept latest of duplicated decision rows, dropped {dropped}");
    }
    let violations = validate_snapshot(&s);
    if !violations.is_empty() {
        return Err(IntegrityError(violations).into());
    }
    Ok(s)
}
