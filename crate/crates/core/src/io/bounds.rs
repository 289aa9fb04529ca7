use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::model::{ReviewRecord, VenueSnapshot};

/// Reviewer count over a set of reviews.
///
/// Without cross-cycle identity linkage every `(reviewer, cycle)` pair counts
/// as a separate reviewer, so `reviewers` is an upper bound and
/// `reviews_per_reviewer` a lower bound. `exact` is set when the identity map
/// was used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReviewerCount {
    pub reviewers: usize,
    pub reviews_per_reviewer: f64,
    pub exact: bool,
}

/// Bounds for the whole snapshot, plus the exact figures when available.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReviewerCountBounds {
    pub upper_reviewers: usize,
    pub lower_reviews_per_reviewer: f64,
    pub exact: Option<ReviewerCount>,
}

/// Review count per reviewer key; the key is the stable id when
/// `identity_map` is non-empty, else `reviewer_id@cycle_id`.
pub(crate) fn reviews_by_reviewer<'a>(
    reviews: impl IntoIterator<Item = &'a ReviewRecord>,
    identity_map: &BTreeMap<String, String>,
) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    for r in reviews {
        let key = match identity_map.get(&r.reviewer_id) {
            Some(stable) if !identity_map.is_empty() => stable.clone(),
            _ => format!("{}@{}", r.reviewer_id, r.cycle_id),
        };
        *out.entry(key).or_insert(0) += 1;
    }
    out
}

pub fn reviewer_count<'a>(
    reviews: impl IntoIterator<Item = &'a ReviewRecord>,
    identity_map: &BTreeMap<String, String>,
) -> ReviewerCount {
    let counts = reviews_by_reviewer(reviews, identity_map);
    let total: usize = counts.values().sum();
    ReviewerCount {
        reviewers: counts.len(),
        reviews_per_reviewer: if counts.is_empty() { f64::NAN } else { total as f64 / counts.len() as f64 },
        exact: !identity_map.is_empty(),
    }
}

pub fn reviewer_count_bounds(s: &VenueSnapshot) -> ReviewerCountBounds {
    let rows: BTreeSet<(&str, &str)> =
        s.reviews.iter().map(|r| (r.reviewer_id.as_str(), r.cycle_id.as_str())).collect();
    let upper = rows.len();
    let lower = if upper == 0 { f64::NAN } else { s.reviews.len() as f64 / upper as f64 };
    ReviewerCountBounds {
        upper_reviewers: upper,
        lower_reviews_per_reviewer: lower,
        exact: s.has_identity_map().then(|| reviewer_count(&s.reviews, &s.identity_map)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::*;
    use crate::model::Acceptance;

    /// Three cycles of reviews with the given number of distinct reviewer ids
    /// per cycle, reviews spread round-robin.
    fn shaped(reviews: usize, reviewers_per_cycle: [usize; 3]) -> VenueSnapshot {
        let mut s = VenueSnapshot::default();
        let per_cycle = [reviews / 3, reviews / 3, reviews - 2 * (reviews / 3)];
        for (c, (&n_rev, &n_rvw)) in per_cycle.iter().zip(&reviewers_per_cycle).enumerate() {
            let cid = format!("c{c}");
            s.cycles.push(cycle(&cid));
            let sid = format!("s{c}");
            s.submissions.push(submission(&sid, &cid, Acceptance::Rejected));
            for i in 0..n_rev {
                s.reviews.push(review(&format!("r{c}-{i}"), &sid, &format!("rv{}", i % n_rvw), &cid, 6));
            }
        }
        s
    }

    #[test]
    fn arr_all_shape() {
        // Same per-cycle ids recur across cycles; each cycle is counted separately.
        let s = shaped(11621, [1474, 1474, 1473]);
        let b = reviewer_count_bounds(&s);
        assert_eq!(b.upper_reviewers, 4421);
        assert_eq!(format!("{:.2}", b.lower_reviews_per_reviewer), "2.63");
        assert!(b.exact.is_none());
    }

    #[test]
    fn identity_map_collapses_two_ids() {
        // One person reviewed in two cycles under two different per-cycle ids.
        let mut s = shaped(12, [2, 2, 2]);
        for r in s.reviews.iter_mut() {
            r.reviewer_id = format!("{}-{}", r.cycle_id, r.reviewer_id);
        }
        for r in &s.reviews {
            s.identity_map.insert(r.reviewer_id.clone(), format!("p-{}", r.reviewer_id));
        }
        let separate = reviewer_count_bounds(&s);
        assert_eq!(separate.upper_reviewers, 6);
        assert_eq!(separate.exact.unwrap().reviewers, 6);

        s.identity_map.insert("c1-rv0".into(), "p-c0-rv0".into());
        let merged = reviewer_count_bounds(&s);
        let exact = merged.exact.unwrap();
        assert!(exact.exact);
        assert_eq!(exact.reviewers, merged.upper_reviewers - 1);
        assert!(exact.reviews_per_reviewer >= merged.lower_reviews_per_reviewer);
    }

    #[test]
    fn single_cycle_bounds_coincide() {
        let mut s = VenueSnapshot { cycles: vec![cycle("c")], ..Default::default() };
        s.submissions.push(submission("s", "c", Acceptance::Rejected));
        for i in 0..7 {
            s.reviews.push(review(&format!("r{i}"), "s", &format!("rv{}", i % 3), "c", 6));
        }
        for r in &s.reviews {
            s.identity_map.insert(r.reviewer_id.clone(), format!("p-{}", r.reviewer_id));
        }
        let b = reviewer_count_bounds(&s);
        let exact = b.exact.unwrap();
        assert_eq!(b.upper_reviewers, exact.reviewers);
        assert_eq!(b.lower_reviews_per_reviewer, exact.reviews_per_reviewer);
    }
}
