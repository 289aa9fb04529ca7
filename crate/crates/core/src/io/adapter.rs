//! Read-only client for a review platform that exposes campaign records as
//! cursor-paginated JSON collections.
//!
//! Wire shape, all `GET` with `Authorization: Bearer <token>`:
//!
//! ```text
//! /v1/cycles                                   -> Page<Cycle>
//! /v1/cycles/{cycle_id}/submissions            -> Page<Submission>
//! /v1/cycles/{cycle_id}/reviews                -> Page<ReviewRecord>
//! /v1/cycles/{cycle_id}/reviewer_consents      -> Page<ReviewerConsent>
//! /v1/cycles/{cycle_id}/author_decisions       -> Page<AuthorDecision>
//! /v1/identity_map                             -> Page<IdentityLink>
//! ```
//!
//! Every collection takes `?limit=N` and, after the first page, `&cursor=C`
//! with the cursor returned by the previous page.

use std::thread;
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::fixture::{finish, IdentityLink};
use super::PlatformError;
use crate::config::{parse_kv, split_list};
use crate::model::{AuthorDecision, Cycle, ReviewRecord, ReviewerConsent, Submission, VenueSnapshot};

/// Environment variable holding the platform token.
pub const TOKEN_ENV: &str = "THREEYES_TOKEN";

const MAX_RETRY_LIMIT: u32 = 10;

/// One page of a collection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Page<T> {
    pub items: Vec<T>,
    pub cursor: Option<String>,
    pub has_more: bool,
}

#[derive(Clone, PartialEq, Eq)]
pub struct AdapterConfig {
    pub base_url: String,
    pub auth_token: String,
    /// Cycles to fetch; empty means every cycle the platform lists.
    pub cycle_ids: Vec<String>,
    pub page_size: usize,
    /// Total attempts per request before giving up.
    pub retry_limit: u32,
    /// First backoff delay; doubles after each failed attempt.
    pub backoff_ms: u64,
    pub timeout_ms: u64,
}

impl std::fmt::Debug for AdapterConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AdapterConfig")
            .field("base_url", &self.base_url)
            .field("auth_token", &"<redacted>")
            .field("cycle_ids", &self.cycle_ids)
            .field("page_size", &self.page_size)
            .field("retry_limit", &self.retry_limit)
            .finish()
    }
}

impl AdapterConfig {
    pub fn new(base_url: impl Into<String>, auth_token: impl Into<String>) -> Self {
        AdapterConfig {
            base_url: base_url.into(),
            auth_token: auth_token.into(),
            cycle_ids: Vec::new(),
            page_size: 100,
            retry_limit: 3,
            backoff_ms: 200,
            timeout_ms: 30_000,
        }
    }

    /// Reads a `key = value` config. `auth_token` may be left out of the file,
    /// in which case `env_token` (normally `$THREEYES_TOKEN`) supplies it; a
    /// token in the environment wins over one in the file.
    pub fn from_kv(text: &str, env_token: Option<String>) -> Result<Self, PlatformError> {
        let kv = parse_kv(text).map_err(|e| PlatformError::Config(e.to_string()))?;
        let get = |k: &str| kv.get(k).map(|(_, v)| v.as_str());
        let base_url = get("base_url").ok_or_else(|| PlatformError::Config("base_url is required".into()))?;
        let token = env_token
            .filter(|t| !t.is_empty())
            .or_else(|| get("auth_token").map(str::to_owned))
            .ok_or_else(|| PlatformError::Config(format!("no auth_token and {TOKEN_ENV} unset")))?;
        let mut cfg = AdapterConfig::new(base_url, token);
        for (key, (line, value)) in &kv {
            let bad = |what: &str| PlatformError::Config(format!("line {line}: {key}: {what}"));
            match key.as_str() {
                "base_url" | "auth_token" => {}
                "cycle_ids" => cfg.cycle_ids = split_list(value),
                "page_size" => cfg.page_size = value.parse().map_err(|_| bad("expected integer"))?,
                "retry_limit" => cfg.retry_limit = value.parse().map_err(|_| bad("expected integer"))?,
                "backoff_ms" => cfg.backoff_ms = value.parse().map_err(|_| bad("expected integer"))?,
                "timeout_ms" => cfg.timeout_ms = value.parse().map_err(|_| bad("expected integer"))?,
                _ => return Err(bad("unknown key")),
            }
        }
        cfg.check()?;
        Ok(cfg)
    }

    pub fn check(&self) -> Result<(), PlatformError> {
        if self.page_size == 0 {
            return Err(PlatformError::Config("page_size must be at least 1".into()));
        }
        if self.retry_limit > MAX_RETRY_LIMIT {
            return Err(PlatformError::Config(format!("retry_limit must be at most {MAX_RETRY_LIMIT}")));
        }
        if self.auth_token.is_empty() {
            return Err(PlatformError::Config("empty auth token".into()));
        }
        Ok(())
    }
}

enum Failure {
    Fatal(PlatformError),
    Retry(String),
}

struct Client<'a> {
    cfg: &'a AdapterConfig,
    agent: ureq::Agent,
}

impl<'a> Client<'a> {
    fn new(cfg: &'a AdapterConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_millis(cfg.timeout_ms)))
            .build()
            .into();
        Client { cfg, agent }
    }

    fn attempt<T: DeserializeOwned>(&self, url: &str) -> Result<Page<T>, Failure> {
        let mut resp = self
            .agent
            .get(url)
            .header("Authorization", &format!("Bearer {}", self.cfg.auth_token))
            .call()
            .map_err(|e| Failure::Retry(e.to_string()))?;
        let status = resp.status().as_u16();
        match status {
            200 => {}
            401 | 403 => return Err(Failure::Fatal(PlatformError::Auth(format!("{url} returned {status}")))),
            500..=599 | 429 => return Err(Failure::Retry(format!("{url} returned {status}"))),
            _ => {
                return Err(Failure::Fatal(PlatformError::Transport {
                    attempts: 1,
                    message: format!("{url} returned {status}"),
                }))
            }
        }
        let body = resp.body_mut().read_to_string().map_err(|e| Failure::Retry(e.to_string()))?;
        serde_json::from_str(&body).map_err(|e| Failure::Retry(format!("{url}: incomplete page: {e}")))
    }

    fn page<T: DeserializeOwned>(&self, url: &str) -> Result<Page<T>, PlatformError> {
        let attempts = self.cfg.retry_limit.max(1);
        let mut last = String::new();
        for attempt in 1..=attempts {
            match self.attempt(url) {
                Ok(page) => return Ok(page),
                Err(Failure::Fatal(e)) => return Err(e),
                Err(Failure::Retry(msg)) => {
                    log::debug!("attempt {attempt}/{attempts} failed: {msg}");
                    last = msg;
                    if attempt < attempts {
                        thread::sleep(Duration::from_millis(self.cfg.backoff_ms << (attempt - 1).min(16)));
                    }
                }
            }
        }
        Err(PlatformError::Transport { attempts, message: last })
    }

    fn collect<T: DeserializeOwned>(&self, path: &str) -> Result<Vec<T>, PlatformError> {
        let base = self.cfg.base_url.trim_end_matches('/');
        let mut out = Vec::new();
        let mut cursor: Option<String> = None;
        loop {
            let mut url = format!("{base}{path}?limit={}", self.cfg.page_size);
            if let Some(c) = &cursor {
                url.push_str("&cursor=");
                url.push_str(c);
            }
            let page: Page<T> = self.page(&url)?;
            out.extend(page.items);
            if !page.has_more {
                return Ok(out);
            }
            cursor = Some(page.cursor.ok_or_else(|| PlatformError::Transport {
                attempts: 1,
                message: format!("{url}: has_more without cursor"),
            })?);
        }
    }
}

#[derive(Default)]
struct CyclePart {
    submissions: Vec<Submission>,
    reviews: Vec<ReviewRecord>,
    reviewer_consents: Vec<ReviewerConsent>,
    author_decisions: Vec<AuthorDecision>,
}

fn fetch_cycle(client: &Client<'_>, cycle_id: &str) -> Result<CyclePart, PlatformError> {
    let root = format!("/v1/cycles/{cycle_id}");
    Ok(CyclePart {
        submissions: client.collect(&format!("{root}/submissions"))?,
        reviews: client.collect(&format!("{root}/reviews"))?,
        reviewer_consents: client.collect(&format!("{root}/reviewer_consents"))?,
        author_decisions: client.collect(&format!("{root}/author_decisions"))?,
    })
}

/// Pages through every collection of the configured cycles and assembles a
/// validated snapshot. Cycles are fetched concurrently. Any failed page fails
/// the whole fetch; no partial snapshot is returned.
pub fn fetch_snapshot(cfg: &AdapterConfig) -> Result<VenueSnapshot, PlatformError> {
    cfg.check()?;
    let client = Client::new(cfg);

    let mut cycles: Vec<Cycle> = client.collect("/v1/cycles")?;
    if !cfg.cycle_ids.is_empty() {
        for id in &cfg.cycle_ids {
            if !cycles.iter().any(|c| &c.id == id) {
                return Err(PlatformError::Config(format!("platform does not list cycle {id}")));
            }
        }
        cycles.retain(|c| cfg.cycle_ids.contains(&c.id));
    }

    let parts: Vec<Result<CyclePart, PlatformError>> = thread::scope(|scope| {
        let handles: Vec<_> = cycles
            .iter()
            .map(|c| {
                let client = &client;
                scope.spawn(move || fetch_cycle(client, &c.id))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("cycle fetch thread panicked")).collect()
    });

    let links: Vec<IdentityLink> = client.collect("/v1/identity_map")?;

    let mut s = VenueSnapshot { cycles, ..Default::default() };
    for part in parts {
        let part = part?;
        s.submissions.extend(part.submissions);
        s.reviews.extend(part.reviews);
        s.reviewer_consents.extend(part.reviewer_consents);
        s.author_decisions.extend(part.author_decisions);
    }
    s.identity_map = links.into_iter().map(|l| (l.reviewer_id, l.stable_id)).collect();
    finish(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_from_kv() {
        let cfg = AdapterConfig::from_kv(
            "base_url = http://localhost:9\ncycle_ids = a, b\npage_size = 7\nretry_limit = 4\n",
            Some("tok".into()),
        )
        .unwrap();
        assert_eq!(cfg.cycle_ids, vec!["a", "b"]);
        assert_eq!(cfg.page_size, 7);
        assert_eq!(cfg.auth_token, "tok");
        assert!(!format!("{cfg:?}").contains("tok\""));
    }

    #[test]
    fn config_limits() {
        assert!(AdapterConfig::from_kv("base_url = x\npage_size = 0", Some("t".into())).is_err());
        assert!(AdapterConfig::from_kv("base_url = x\nretry_limit = 11", Some("t".into())).is_err());
        assert!(AdapterConfig::from_kv("base_url = x", None).is_err());
        assert!(AdapterConfig::from_kv("base_url = x\nbogus = 1", Some("t".into())).is_err());
        let file_token = AdapterConfig::from_kv("base_url = x\nauth_token = f", None).unwrap();
        assert_eq!(file_token.auth_token, "f");
    }
}
