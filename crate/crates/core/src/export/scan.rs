//! Whole-token search for identifying strings in output buffers.

use std::fmt;

use aho_corasick::AhoCorasick;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeakKind {
    PrincipalId,
    DisplayName,
    TextContent,
    RecordId,
    NonPublicRecord,
    ForbiddenKey,
    FineTimestamp,
}

impl fmt::Display for LeakKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            LeakKind::PrincipalId => "principal id",
            LeakKind::DisplayName => "attribution display name",
            LeakKind::TextContent => "review text",
            LeakKind::RecordId => "record id",
            LeakKind::NonPublicRecord => "record outside the public tier",
            LeakKind::ForbiddenKey => "forbidden field",
            LeakKind::FineTimestamp => "timestamp finer than a day",
        };
        f.write_str(s)
    }
}

/// The offending value itself is not reported.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind} in {file} ({location}); nothing was written")]
pub struct LeakError {
    pub file: String,
    pub kind: LeakKind,
    pub location: String,
}

fn is_token_char(c: char) -> bool {
    c.is_alphanumeric() || c == '-' || c == '_'
}

/// Matches a fixed set of needles, each only where it is not part of a
/// longer token: `rvw-1` matches in `by rvw-1.` but not in `rvw-12`.
pub(crate) struct Scanner {
    automaton: Option<AhoCorasick>,
    needles: Vec<(String, LeakKind)>,
}

impl Scanner {
    pub fn new(needles: impl IntoIterator<Item = (String, LeakKind)>) -> Self {
        let mut needles: Vec<(String, LeakKind)> = needles.into_iter().filter(|(n, _)| !n.is_empty()).collect();
        needles.sort();
        needles.dedup_by(|a, b| a.0 == b.0);
        let automaton = (!needles.is_empty())
            .then(|| AhoCorasick::new(needles.iter().map(|(n, _)| n.as_str())).expect("literal patterns build"));
        Scanner { automaton, needles }
    }

    /// First whole-token needle in `text`, as `(kind, byte offset)`.
    pub fn find(&self, text: &str) -> Option<(LeakKind, usize)> {
        let ac = self.automaton.as_ref()?;
        for m in ac.find_overlapping_iter(text) {
            let (needle, kind) = &self.needles[m.pattern().as_usize()];
            let starts_token = needle.chars().next().is_some_and(is_token_char);
            let ends_token = needle.chars().next_back().is_some_and(is_token_char);
            let before_ok = !starts_token || !text[..m.start()].chars().next_back().is_some_and(is_token_char);
            let after_ok = !ends_token || !text[m.end()..].chars().next().is_some_and(is_token_char);
            if before_ok && after_ok {
                return Some((*kind, m.start()));
            }
        }
        None
    }

    pub fn check(&self, file: &str, location: impl FnOnce() -> String, text: &str) -> Result<(), LeakError> {
        match self.find(text) {
            Some((kind, _)) => Err(LeakError { file: file.to_owned(), kind, location: location() }),
            None => Ok(()),
        }
    }

    /// Checks every key and string value of a JSON document.
    pub fn check_json(&self, file: &str, path: &str, value: &Value) -> Result<(), LeakError> {
        match value {
            Value::String(s) => self.check(file, || path.to_owned(), s),
            Value::Array(items) => {
                items.iter().enumerate().try_for_each(|(i, v)| self.check_json(file, &format!("{path}[{i}]"), v))
            }
            Value::Object(map) => map.iter().try_for_each(|(k, v)| {
                self.check(file, || format!("a key under {path}"), k)?;
                self.check_json(file, &format!("{path}.{k}"), v)
            }),
            _ => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scanner() -> Scanner {
        Scanner::new([
            ("rvw-1".to_owned(), LeakKind::PrincipalId),
            ("Ada Lovelace".to_owned(), LeakKind::DisplayName),
            (String::new(), LeakKind::TextContent),
        ])
    }

    #[test]
    fn whole_tokens_only() {
        let s = scanner();
        assert_eq!(s.find("signed rvw-1."), Some((LeakKind::PrincipalId, 7)));
        assert_eq!(s.find("rvw-12 and xrvw-1"), None);
        assert_eq!(s.find("(Ada Lovelace)"), Some((LeakKind::DisplayName, 1)));
        assert_eq!(s.find("Ada Lovelaces"), None);
        assert_eq!(s.find(""), None);
    }

    #[test]
    fn overlapping_candidates() {
        // The first candidate is embedded; the later one stands alone.
        let s = scanner();
        assert_eq!(s.find("rvw-1x rvw-1"), Some((LeakKind::PrincipalId, 7)));
    }

    #[test]
    fn json_keys_and_values() {
        let s = scanner();
        let v: Value = serde_json::json!({"a": [1, "ok", {"rvw-1": 2}]});
        let err = s.check_json("f", "$", &v).unwrap_err();
        assert_eq!(err.kind, LeakKind::PrincipalId);
        assert!(err.location.contains("key"));
        assert!(!err.to_string().contains("rvw-1"));
        assert!(s.check_json("f", "$", &serde_json::json!({"x": "fine"})).is_ok());
    }
}
