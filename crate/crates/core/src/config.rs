//! Line-oriented `key = value` config files.

use std::collections::BTreeMap;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct KvError {
    pub line: usize,
    pub message: String,
}

/// Parses `key = value` pairs. Blank lines and lines starting with `#` are
/// skipped; values are trimmed and may be empty.
pub fn parse_kv(text: &str) -> Result<BTreeMap<String, (usize, String)>, KvError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (key, value) = trimmed
            .split_once('=')
            .ok_or_else(|| KvError { line, message: format!("expected key = value, got {trimmed:?}") })?;
        let key = key.trim();
        if key.is_empty() {
            return Err(KvError { line, message: "empty key".into() });
        }
        if out.insert(key.to_owned(), (line, value.trim().to_owned())).is_some() {
            return Err(KvError { line, message: format!("duplicate key {key}") });
        }
    }
    Ok(out)
}

/// Splits a comma-separated list, dropping empty items.
pub fn split_list(value: &str) -> Vec<String> {
    value.split(',').map(str::trim).filter(|v| !v.is_empty()).map(str::to_owned).collect()
}
