//! Release bundles: the public dataset with its notice and manifest, and
//! aggregate-only reports over protected tiers.
//!
//! Every buffer is built in memory and scanned for identifying strings
//! before anything touches the disk. A hit aborts the export.

mod public;
mod report;
mod scan;

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::licensing::LicensingError;

pub use public::{
    export_public, release_token, ExportManifest, ExportOptions, ExportedArtifact, Tombstone, BUNDLE_FILES,
    PUBLIC_REVIEW_FIELDS,
};
pub use report::{
    build_protected_report, export_protected_report, ProtectedReport, ReportOptions, ReportSubset,
    SUPPRESSION_THRESHOLD,
};
pub use scan::{LeakError, LeakKind};

#[derive(Debug, Error)]
pub enum ExportError {
    #[error(transparent)]
    Leak(#[from] LeakError),
    #[error(transparent)]
    Licensing(#[from] LicensingError),
    #[error("{kind} {artifact_id} is public but has no license grant")]
    MissingGrant { kind: String, artifact_id: String },
    #[error("unknown review field {0}")]
    UnknownField(String),
    #[error("{} already holds a different bundle; releases are never overwritten", .0.display())]
    Conflict(PathBuf),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ExportError + '_ {
    move |source| ExportError::Io { path: path.to_owned(), source }
}

/// Writes `files` into `dir`. Existing files must already hold exactly the
/// same bytes; otherwise nothing is written.
pub(crate) fn write_files(dir: &Path, files: &[(&str, Vec<u8>)]) -> Result<(), ExportError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    for (name, bytes) in files {
        let path = dir.join(name);
        match fs::read(&path) {
            Ok(existing) if &existing == bytes => {}
            Ok(_) => return Err(ExportError::Conflict(dir.to_owned())),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
            Err(e) => return Err(ExportError::Io { path, source: e }),
        }
    }
    for (name, bytes) in files {
        let path = dir.join(name);
        let tmp = dir.join(format!(".{name}.tmp"));
        fs::write(&tmp, bytes).map_err(io_err(&tmp))?;
        fs::rename(&tmp, &path).map_err(io_err(&path))?;
    }
    Ok(())
}
