//! Seeded generator of synthetic reviewing campaigns.
//!
//! Every entity draws from its own ChaCha stream derived from the master
//! seed and a `(domain, index)` pair, so growing one population leaves the
//! draws of the others untouched.

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::analytics::{campaign_stats, CampaignStats, TierFilter};
use crate::config::{parse_kv, split_list, KvError};
use crate::model::{
    Acceptance, AuthorChoice, AuthorDecision, BestPaper, Cycle, ReviewRecord, ReviewerConsent, ReviewerDecision,
    ScoreHalf, Submission, TextFields, Timestamp, VenueSnapshot,
};
use crate::workflow::{run_workflow, WorkflowError};

const DAY_MS: i64 = 86_400_000;
const EPOCH_MS: i64 = 1_630_454_400_000;
const CYCLE_MS: i64 = 30 * DAY_MS;
const PLACEHOLDER_LEN: usize = 64;
const WEIGHT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error(transparent)]
    Syntax(#[from] KvError),
    #[error("unknown config key {0}")]
    UnknownKey(String),
    #[error("{key}: cannot parse {value:?}")]
    Parse { key: String, value: String },
    #[error("{key}: {reason}")]
    Invalid { key: String, reason: String },
    #[error("line {line}: {source}")]
    AtLine { line: usize, source: Box<ConfigError> },
    #[error(transparent)]
    Workflow(#[from] WorkflowError),
}

fn invalid(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key: key.to_owned(), reason: reason.into() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub seed: u64,
    pub n_submissions: usize,
    pub n_cycles: usize,
    /// Reviewer slots summed over cycles; each cycle gets an equal share.
    pub reviewer_pool_size: usize,
    /// Weights for 2, 3, 4 and 5 reviews per submission.
    pub reviews_per_submission: [f64; 4],
    /// Weights over the nine overall-score values, lowest first.
    pub score_weights: [f64; 9],
    /// Latent correlation between reviews of the same paper.
    pub within_paper_correlation: f64,
    /// Share of submissions accepted, taken from the top by mean score.
    pub acceptance_fraction: f64,
    pub respond: f64,
    pub decline_given_response: f64,
    pub attribution_given_agree: f64,
    /// Logistic slope linking a reviewer's mean given score to their response propensity.
    pub score_dependence: f64,
    /// Consent before the first review, between reviews, after the last review.
    pub timing: [f64; 3],
    pub donate_given_accepted: f64,
    pub reviews_permission_given_donate: f64,
    pub explicit_decline: f64,
    pub emit_identity_map: bool,
    /// Chance that a reviewer slot is held by the same person as in the previous cycle.
    pub returning_rate: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            seed: 42,
            n_submissions: 3591,
            n_cycles: 3,
            reviewer_pool_size: 4421,
            reviews_per_submission: [0.16, 0.50, 0.28, 0.06],
            score_weights: [0.02, 0.04, 0.10, 0.17, 0.25, 0.20, 0.14, 0.06, 0.02],
            within_paper_correlation: 0.3,
            acceptance_fraction: 0.32,
            respond: 0.519,
            decline_given_response: 0.0633,
            attribution_given_agree: 0.3749,
            score_dependence: 0.0,
            timing: [0.439, 0.1563, 0.4047],
            donate_given_accepted: 0.2953,
            reviews_permission_given_donate: 0.8779,
            explicit_decline: 0.3734,
            emit_identity_map: false,
            returning_rate: 0.3,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.trim().parse().map_err(|_| ConfigError::Parse { key: key.to_owned(), value: value.to_owned() })
}

fn parse_weights<const N: usize>(key: &str, value: &str) -> Result<[f64; N], ConfigError> {
    let items = split_list(value);
    if items.len() != N {
        return Err(invalid(key, format!("expected {N} weights, got {}", items.len())));
    }
    let mut out = [0.0; N];
    for (o, item) in out.iter_mut().zip(&items) {
        *o = parse(key, item)?;
    }
    Ok(out)
}

fn join(weights: &[f64]) -> String {
    weights.iter().map(f64::to_string).collect::<Vec<_>>().join(", ")
}

impl GeneratorConfig {
    pub const KEYS: [&'static str; 20] = [
        "seed",
        "n_submissions",
        "n_cycles",
        "reviewer_pool_size",
        "reviews_per_submission.weights",
        "score_model.weights",
        "score_model.within_paper_correlation",
        "acceptance.fraction",
        "reviewer.respond",
        "reviewer.decline_given_response",
        "reviewer.attribution_given_agree",
        "reviewer.score_dependence",
        "timing.before",
        "timing.during",
        "timing.after",
        "author.donate_given_accepted",
        "author.reviews_permission_given_donate",
        "author.explicit_decline",
        "identity.emit_map",
        "identity.returning_rate",
    ];

    /// Sets one field by its dotted key. `reviewer.consent` is shorthand for
    /// an agree propensity: it sets `reviewer.respond` and zeroes declines.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "seed" => self.seed = parse(key, value)?,
            "n_submissions" => self.n_submissions = parse(key, value)?,
            "n_cycles" => self.n_cycles = parse(key, value)?,
            "reviewer_pool_size" => self.reviewer_pool_size = parse(key, value)?,
            "reviews_per_submission.weights" => self.reviews_per_submission = parse_weights(key, value)?,
            "score_model.weights" => self.score_weights = parse_weights(key, value)?,
            "score_model.within_paper_correlation" => self.within_paper_correlation = parse(key, value)?,
            "acceptance.fraction" => self.acceptance_fraction = parse(key, value)?,
            "reviewer.respond" => self.respond = parse(key, value)?,
            "reviewer.decline_given_response" => self.decline_given_response = parse(key, value)?,
            "reviewer.attribution_given_agree" => self.attribution_given_agree = parse(key, value)?,
            "reviewer.score_dependence" => self.score_dependence = parse(key, value)?,
            "reviewer.consent" => {
                self.respond = parse(key, value)?;
                self.decline_given_response = 0.0;
            }
            "timing.before" => self.timing[0] = parse(key, value)?,
            "timing.during" => self.timing[1] = parse(key, value)?,
            "timing.after" => self.timing[2] = parse(key, value)?,
            "author.donate_given_accepted" => self.donate_given_accepted = parse(key, value)?,
            "author.reviews_permission_given_donate" => self.reviews_permission_given_donate = parse(key, value)?,
            "author.explicit_decline" => self.explicit_decline = parse(key, value)?,
            "identity.emit_map" => self.emit_identity_map = parse(key, value)?,
            "identity.returning_rate" => self.returning_rate = parse(key, value)?,
            _ => return Err(ConfigError::UnknownKey(key.to_owned())),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<String> {
        Some(match key {
            "seed" => self.seed.to_string(),
            "n_submissions" => self.n_submissions.to_string(),
            "n_cycles" => self.n_cycles.to_string(),
            "reviewer_pool_size" => self.reviewer_pool_size.to_string(),
            "reviews_per_submission.weights" => join(&self.reviews_per_submission),
            "score_model.weights" => join(&self.score_weights),
            "score_model.within_paper_correlation" => self.within_paper_correlation.to_string(),
            "acceptance.fraction" => self.acceptance_fraction.to_string(),
            "reviewer.respond" => self.respond.to_string(),
            "reviewer.decline_given_response" => self.decline_given_response.to_string(),
            "reviewer.attribution_given_agree" => self.attribution_given_agree.to_string(),
            "reviewer.score_dependence" => self.score_dependence.to_string(),
            "timing.before" => self.timing[0].to_string(),
            "timing.during" => self.timing[1].to_string(),
            "timing.after" => self.timing[2].to_string(),
            "author.donate_given_accepted" => self.donate_given_accepted.to_string(),
            "author.reviews_permission_given_donate" => self.reviews_permission_given_donate.to_string(),
            "author.explicit_decline" => self.explicit_decline.to_string(),
            "identity.emit_map" => self.emit_identity_map.to_string(),
            "identity.returning_rate" => self.returning_rate.to_string(),
            _ => return None,
        })
    }

    /// Defaults overridden by a `key = value` file, then validated.
    pub fn from_kv(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = GeneratorConfig::default();
        for (key, (line, value)) in parse_kv(text)? {
            cfg.set(&key, &value).map_err(|e| ConfigError::AtLine { line, source: Box::new(e) })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_kv(&self) -> String {
        Self::KEYS.iter().map(|k| format!("{k} = {}\n", self.get(k).expect("listed key"))).collect()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let probabilities = [
            ("score_model.within_paper_correlation", self.within_paper_correlation),
            ("reviewer.respond", self.respond),
            ("reviewer.decline_given_response", self.decline_given_response),
            ("reviewer.attribution_given_agree", self.attribution_given_agree),
            ("author.donate_given_accepted", self.donate_given_accepted),
            ("author.reviews_permission_given_donate", self.reviews_permission_given_donate),
            ("author.explicit_decline", self.explicit_decline),
            ("identity.returning_rate", self.returning_rate),
        ];
        for (key, p) in probabilities {
            if !(0.0..=1.0).contains(&p) {
                return Err(invalid(key, format!("{p} is not in [0, 1]")));
            }
        }
        if self.donate_given_accepted + self.explicit_decline > 1.0 + WEIGHT_TOLERANCE {
            return Err(invalid("author.explicit_decline", "donate and explicit decline exceed 1 together"));
        }
        if !(self.acceptance_fraction > 0.0 && self.acceptance_fraction <= 1.0) {
            return Err(invalid("acceptance.fraction", format!("{} is not in (0, 1]", self.acceptance_fraction)));
        }
        if !self.score_dependence.is_finite() {
            return Err(invalid("reviewer.score_dependence", "must be finite"));
        }
        check_weights("reviews_per_submission.weights", &self.reviews_per_submission)?;
        check_weights("score_model.weights", &self.score_weights)?;
        check_weights("timing", &self.timing)?;
        if self.n_cycles == 0 {
            return Err(invalid("n_cycles", "must be at least 1"));
        }
        if self.reviewer_pool_size / self.n_cycles < 5 {
            return Err(invalid("reviewer_pool_size", "need at least 5 reviewers per cycle"));
        }
        if self.n_submissions > 999_999 || self.reviewer_pool_size / self.n_cycles > 99_999 || self.n_cycles > 99 {
            return Err(invalid("n_submissions", "sizes exceed the id format"));
        }
        Ok(())
    }

    fn expected_score(&self) -> f64 {
        ScoreHalf::lattice().zip(&self.score_weights).map(|(s, w)| s.value() * w).sum()
    }
}

fn check_weights(key: &str, weights: &[f64]) -> Result<(), ConfigError> {
    if weights.iter().any(|w| !(0.0..=1.0).contains(w)) {
        return Err(invalid(key, "weights must lie in [0, 1]"));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > WEIGHT_TOLERANCE {
        return Err(invalid(key, format!("weights sum to {sum}, not 1")));
    }
    Ok(())
}

#[derive(Clone, Copy)]
enum Domain {
    Submission = 1,
    ReviewerSlot = 2,
    Author = 3,
    Identity = 4,
}

fn stream(seed: u64, domain: Domain, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((domain as u64) << 48) | index);
    rng
}

/// Index of the bucket that `u` falls into under cumulative `weights`.
fn inverse_cdf(weights: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

fn logistic_shift(p: f64, shift: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 || shift == 0.0 {
        return p;
    }
    let logit = (p / (1.0 - p)).ln() + shift;
    1.0 / (1.0 + (-logit).exp())
}

fn placeholder(field: &str) -> String {
    let mut s = format!("[synthetic] {field} placeholder ");
    while s.len() < PLACEHOLDER_LEN {
        s.push('x');
    }
    s
}

fn cycle_id(c: usize) -> String {
    format!("c{:02}", c + 1)
}

fn reviewer_id(c: usize, slot: usize) -> String {
    format!("rvw-{}-{slot:05}", cycle_id(c))
}

/// Builds a synthetic snapshot. The same config always yields the same snapshot.
pub fn generate_venue(cfg: &GeneratorConfig) -> Result<VenueSnapshot, ConfigError> {
    cfg.validate()?;
    let normal = Normal::standard();
    let per_cycle_pool = cfg.reviewer_pool_size / cfg.n_cycles;
    let rho = cfg.within_paper_correlation;

    let cycles: Vec<Cycle> =
        (0..cfg.n_cycles).map(|c| Cycle { id: cycle_id(c), label: format!("synthetic cycle {}", c + 1) }).collect();

    let mut submissions = Vec::with_capacity(cfg.n_submissions);
    let mut reviews = Vec::new();
    for i in 0..cfg.n_submissions {
        let mut rng = stream(cfg.seed, Domain::Submission, i as u64);
        let c = i % cfg.n_cycles;
        let sid = format!("sub-{i:06}");
        let n_authors = rng.random_range(1..=4usize);
        let author_ids = (0..n_authors).map(|k| format!("auth-{:06}", i * 4 + k)).collect();
        submissions.push(Submission {
            id: sid.clone(),
            cycle_id: cycle_id(c),
            author_ids,
            draft_ref: Some(format!("drafts/{sid}.pdf")),
            acceptance: Acceptance::Rejected,
            venue: None,
        });

        let k = 2 + inverse_cdf(&cfg.reviews_per_submission, rng.random());
        let common: f64 = rng.sample(StandardNormal);
        let slots = sample(&mut rng, per_cycle_pool, k.min(per_cycle_pool));
        let cycle_start = EPOCH_MS + c as i64 * CYCLE_MS;
        for (j, slot) in slots.into_iter().enumerate() {
            let own: f64 = rng.sample(StandardNormal);
            let z = rho.sqrt() * common + (1.0 - rho).sqrt() * own;
            let score = inverse_cdf(&cfg.score_weights, normal.cdf(z));
            let mut draw = || rng.random_range(1..=5u8);
            let confidence = draw();
            let replicability = draw();
            let datasets = draw();
            let software = draw();
            let author_identity_guess = draw();
            let best_paper = match rng.random_range(0..20) {
                0 => BestPaper::Yes,
                1..=2 => BestPaper::Maybe,
                _ => BestPaper::No,
            };
            let text_fields = TextFields {
                paper_summary: placeholder("paper_summary"),
                summary_of_strengths: placeholder("summary_of_strengths"),
                summary_of_weaknesses: placeholder("summary_of_weaknesses"),
                comments_suggestions_typos: placeholder("comments_suggestions_typos"),
                best_paper_justification: String::new(),
                ethical_concerns: String::new(),
            };
            reviews.push(ReviewRecord {
                id: format!("rev-{:06}-{j}", i),
                submission_id: sid.clone(),
                reviewer_id: reviewer_id(c, slot),
                cycle_id: cycle_id(c),
                text_fields,
                overall: ScoreHalf::from_twice_unchecked(2 + score as u8),
                confidence,
                best_paper,
                replicability,
                datasets,
                software,
                author_identity_guess,
                submitted_at: Timestamp(cycle_start + 10 * DAY_MS + rng.random_range(0..15 * DAY_MS)),
            });
        }
    }

    accept_top(cfg, &mut submissions, &reviews);

    let reviewer_consents = reviewer_consents(cfg, &reviews);
    let author_decisions = author_decisions(cfg, &submissions);
    let identity_map =
        if cfg.emit_identity_map { identity_map(cfg, per_cycle_pool, &reviews) } else { BTreeMap::new() };

    Ok(VenueSnapshot { cycles, submissions, reviews, reviewer_consents, author_decisions, identity_map }.normalized())
}

fn accept_top(cfg: &GeneratorConfig, submissions: &mut [Submission], reviews: &[ReviewRecord]) {
    let mut sums: BTreeMap<&str, (u32, u32)> = BTreeMap::new();
    for r in reviews {
        let e = sums.entry(&r.submission_id).or_default();
        e.0 += u32::from(r.overall.twice_value());
        e.1 += 1;
    }
    let mean = |id: &str| sums.get(id).map_or(0.0, |&(s, n)| f64::from(s) / f64::from(n));
    let mut order: Vec<usize> = (0..submissions.len()).collect();
    order.sort_by(|&a, &b| {
        mean(&submissions[b].id)
            .total_cmp(&mean(&submissions[a].id))
            .then_with(|| submissions[a].id.cmp(&submissions[b].id))
    });
    let n_accept = (cfg.acceptance_fraction * submissions.len() as f64).round() as usize;
    for &i in order.iter().take(n_accept) {
        submissions[i].acceptance = Acceptance::Accepted;
        submissions[i].venue = Some("synthetic venue".to_owned());
    }
}

fn reviewer_consents(cfg: &GeneratorConfig, reviews: &[ReviewRecord]) -> Vec<ReviewerConsent> {
    // (cycle, reviewer) -> (score sum, count, first, last)
    let mut active: BTreeMap<(&str, &str), (f64, usize, i64, i64)> = BTreeMap::new();
    for r in reviews {
        let t = r.submitted_at.millis();
        let e = active.entry((&r.cycle_id, &r.reviewer_id)).or_insert((0.0, 0, t, t));
        e.0 += r.overall.value();
        e.1 += 1;
        e.2 = e.2.min(t);
        e.3 = e.3.max(t);
    }
    let expected = cfg.expected_score();
    let mut out = Vec::with_capacity(active.len());
    for ((cycle, reviewer), (sum, n, first, last)) in active {
        let slot: u64 = reviewer.rsplit('-').next().and_then(|x| x.parse().ok()).expect("generated reviewer id");
        let c: u64 = cycle[1..].parse().expect("generated cycle id");
        let mut rng = stream(cfg.seed, Domain::ReviewerSlot, (c << 20) | slot);
        let (u_respond, u_decline, u_attr, u_timing, u_offset): (f64, f64, f64, f64, f64) =
            (rng.random(), rng.random(), rng.random(), rng.random(), rng.random());

        let p_respond = logistic_shift(cfg.respond, cfg.score_dependence * (sum / n as f64 - expected));
        let decision = if u_respond >= p_respond {
            ReviewerDecision::NoResponse
        } else if u_decline < cfg.decline_given_response {
            ReviewerDecision::Decline
        } else {
            ReviewerDecision::Agree
        };
        let decided_at = (decision != ReviewerDecision::NoResponse).then(|| {
            let t = match inverse_cdf(&cfg.timing, u_timing) {
                0 => first - 1 - (u_offset * 5.0 * DAY_MS as f64) as i64,
                1 if last - first >= 2 => first + 1 + (u_offset * (last - first - 1) as f64) as i64,
                1 => first,
                _ => last + 1 + (u_offset * 5.0 * DAY_MS as f64) as i64,
            };
            Timestamp(t)
        });
        out.push(ReviewerConsent {
            reviewer_id: reviewer.to_owned(),
            cycle_id: cycle.to_owned(),
            decision,
            attribution_requested: decision == ReviewerDecision::Agree && u_attr < cfg.attribution_given_agree,
            decided_at,
        });
    }
    out
}

fn author_decisions(cfg: &GeneratorConfig, submissions: &[Submission]) -> Vec<AuthorDecision> {
    let mut out = Vec::new();
    for (i, s) in submissions.iter().enumerate() {
        if s.acceptance != Acceptance::Accepted {
            continue;
        }
        let mut rng = stream(cfg.seed, Domain::Author, i as u64);
        let (u, u_reviews, u_time): (f64, f64, f64) = (rng.random(), rng.random(), rng.random());
        let decision = if u < cfg.donate_given_accepted {
            if u_reviews < cfg.reviews_permission_given_donate {
                AuthorChoice::PaperAndReviews
            } else {
                AuthorChoice::PaperOnly
            }
        } else if u < cfg.donate_given_accepted + cfg.explicit_decline {
            AuthorChoice::Decline
        } else {
            AuthorChoice::NoResponse
        };
        let cycle: i64 = s.cycle_id[1..].parse().expect("generated cycle id");
        let decided_at = (decision != AuthorChoice::NoResponse)
            .then(|| Timestamp(EPOCH_MS + cycle * CYCLE_MS + 30 * DAY_MS + (u_time * 10.0 * DAY_MS as f64) as i64));
        out.push(AuthorDecision { submission_id: s.id.clone(), decision, decided_at });
    }
    out
}

/// Stable ids for reviewer slots: a slot keeps the previous cycle's person
/// with probability `returning_rate`.
fn identity_map(cfg: &GeneratorConfig, pool: usize, reviews: &[ReviewRecord]) -> BTreeMap<String, String> {
    let mut people: Vec<usize> = (0..pool).collect();
    let mut next = pool;
    let mut all = BTreeMap::new();
    for c in 0..cfg.n_cycles {
        for (slot, person) in people.iter_mut().enumerate() {
            if c > 0 {
                let mut rng = stream(cfg.seed, Domain::Identity, ((c as u64) << 20) | slot as u64);
                if rng.random::<f64>() >= cfg.returning_rate {
                    *person = next;
                    next += 1;
                }
            }
            all.insert(reviewer_id(c, slot), format!("person-{person:06}"));
        }
    }
    let used: std::collections::BTreeSet<&str> = reviews.iter().map(|r| r.reviewer_id.as_str()).collect();
    all.retain(|k, _| used.contains(k.as_str()));
    all
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: String,
    pub stats: CampaignStats,
}

/// Generates, partitions and summarizes one campaign per value of `parameter`.
pub fn sweep(base: &GeneratorConfig, parameter: &str, values: &[String]) -> Result<Vec<SweepPoint>, ConfigError> {
    let configs = values
        .iter()
        .map(|v| {
            let mut cfg = base.clone();
            cfg.set(parameter, v)?;
            cfg.validate()?;
            Ok(cfg)
        })
        .collect::<Result<Vec<_>, ConfigError>>()?;
    std::thread::scope(|scope| {
        let handles: Vec<_> = configs
            .iter()
            .zip(values)
            .map(|(cfg, v)| {
                scope.spawn(move || -> Result<SweepPoint, ConfigError> {
                    let s = generate_venue(cfg)?;
                    let a = run_workflow(&s)?;
                    Ok(SweepPoint { value: v.clone(), stats: campaign_stats(&s, &a, &TierFilter::ALL) })
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("sweep thread panicked")).collect()
    })
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// One row per sweep point and subset.
pub fn sweep_csv(parameter: &str, points: &[SweepPoint]) -> String {
    let mut out = String::from(
        "parameter,value,subset,n_submissions,n_reviews,n_reviewers,mean_overall,tv_distance_to_all,alpha,dispersion\n",
    );
    for p in points {
        for x in &p.stats.subsets {
            out.push_str(&format!(
                "{parameter},{},{},{},{},{},{},{},{},{}\n",
                p.value,
                x.subset,
                x.counts.n_submissions,
                x.counts.n_reviews,
                x.counts.n_reviewers,
                opt(x.mean_overall),
                opt(x.tv_distance_to_all),
                opt(x.agreement.alpha),
                opt(x.dispersion),
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_snapshot;
    use crate::workflow::{ArtifactKind, PartitionLabel};

    fn small(seed: u64) -> GeneratorConfig {
        GeneratorConfig { seed, n_submissions: 300, reviewer_pool_size: 400, ..Default::default() }
    }

    #[test]
    fn defaults_are_valid() {
        let cfg = GeneratorConfig::default();
        cfg.validate().unwrap();
        let mean: f64 = cfg.reviews_per_submission.iter().zip(2..).map(|(w, k)| w * k as f64).sum();
        assert!((mean - 3.24).abs() < 1e-9);
        assert!((cfg.expected_score() - 3.085).abs() < 1e-9);
    }

    #[test]
    fn same_seed_same_snapshot() {
        let a = generate_venue(&small(42)).unwrap();
        let b = generate_venue(&small(42)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, generate_venue(&small(43)).unwrap());
        assert!(validate_snapshot(&a).is_empty(), "{:?}", validate_snapshot(&a));
    }

    #[test]
    fn growing_one_population_keeps_existing_draws() {
        let a = generate_venue(&small(7)).unwrap();
        let b = generate_venue(&GeneratorConfig { n_submissions: 330, ..small(7) }).unwrap();
        let first = |s: &VenueSnapshot| s.reviews.iter().find(|r| r.submission_id == "sub-000010").cloned();
        assert_eq!(first(&a), first(&b));
    }

    #[test]
    fn closed_first_gate_excludes_everything() {
        let mut cfg = small(1);
        cfg.set("reviewer.respond", "0").unwrap();
        let s = generate_venue(&cfg).unwrap();
        let a = run_workflow(&s).unwrap();
        assert!(a.iter().filter(|x| x.kind == ArtifactKind::Review).all(|x| x.tier == PartitionLabel::Excluded));
    }

    #[test]
    fn universal_consent_keeps_everything() {
        let points = sweep(&small(3), "reviewer.consent", &["1.0".to_owned()]).unwrap();
        let st = &points[0].stats;
        assert_eq!(st.subset(TierFilter::OneY).unwrap().counts, {
            let mut row = st.subset(TierFilter::All).unwrap().counts.clone();
            row.subset_label = "1Y".into();
            row
        });
    }

    #[test]
    fn full_acceptance_makes_2y_equal_1y() {
        let points = sweep(&small(5), "acceptance.fraction", &["1.0".to_owned()]).unwrap();
        let st = &points[0].stats;
        assert_eq!(st.subset(TierFilter::TwoY).unwrap().histogram, st.subset(TierFilter::OneY).unwrap().histogram);
    }

    #[test]
    fn config_round_trip_and_errors() {
        let cfg = GeneratorConfig { seed: 9, emit_identity_map: true, ..Default::default() };
        assert_eq!(GeneratorConfig::from_kv(&cfg.to_kv()).unwrap(), cfg);
        assert!(matches!(GeneratorConfig::from_kv("bogus = 1"), Err(ConfigError::AtLine { line: 1, .. })));
        assert!(GeneratorConfig::from_kv("reviewer.respond = 1.5").is_err());
        assert!(GeneratorConfig::from_kv("acceptance.fraction = 0").is_err());
        assert!(GeneratorConfig::from_kv("timing.before = 0.5").is_err());
        assert!(GeneratorConfig::from_kv("score_model.weights = 1, 0").is_err());
    }

    #[test]
    fn identity_map_links_returning_reviewers() {
        let mut cfg = small(11);
        cfg.emit_identity_map = true;
        cfg.returning_rate = 1.0;
        let s = generate_venue(&cfg).unwrap();
        assert!(validate_snapshot(&s).is_empty());
        assert!(!s.identity_map.is_empty());
        for (reviewer, person) in &s.identity_map {
            let slot = &reviewer[reviewer.len() - 5..];
            assert_eq!(person, &format!("person-0{slot}"));
        }
    }
}
