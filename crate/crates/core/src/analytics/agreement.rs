//! Krippendorff's alpha with the ordinal metric, and per-paper score spread.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::{ReviewRecord, ScoreHalf};

/// Ratings grouped by the paper they were given to.
pub type RatingUnit = (String, Vec<ScoreHalf>);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementStats {
    /// Undefined when there is nothing to compare or no expected disagreement.
    pub alpha: Option<f64>,
    pub n_units_used: usize,
    pub n_pairable_values: usize,
    pub observed_disagreement: Option<f64>,
    pub expected_disagreement: Option<f64>,
    pub metric: String,
}

/// Groups reviews into rating units by submission, in submission-id order.
pub fn rating_units<'a>(reviews: impl IntoIterator<Item = &'a ReviewRecord>) -> Vec<RatingUnit> {
    let mut by_sub: BTreeMap<&str, Vec<ScoreHalf>> = BTreeMap::new();
    for r in reviews {
        by_sub.entry(&r.submission_id).or_default().push(r.overall);
    }
    by_sub.into_iter().map(|(k, v)| (k.to_owned(), v)).collect()
}

pub fn krippendorff_alpha_ordinal(units: &[RatingUnit]) -> AgreementStats {
    let values: Vec<&[ScoreHalf]> = units.iter().map(|(_, v)| v.as_slice()).collect();
    alpha_ordinal(&values)
}

/// Ordinal alpha over any ordered category type.
///
/// Only the rank order of the values matters: the ordinal distance between
/// two categories is built from the marginal frequencies of the categories
/// between them.
pub fn alpha_ordinal<T: Ord + Copy>(units: &[&[T]]) -> AgreementStats {
    let pairable: Vec<&[T]> = units.iter().copied().filter(|u| u.len() >= 2).collect();

    let mut categories: Vec<T> = pairable.iter().flat_map(|u| u.iter().copied()).collect();
    categories.sort();
    categories.dedup();
    let k = categories.len();
    let index = |v: &T| categories.binary_search(v).expect("value was collected");

    // Coincidence matrix from per-unit category counts.
    let mut coincidence = vec![vec![0.0f64; k]; k];
    for unit in &pairable {
        let mut counts = vec![0usize; k];
        for v in unit.iter() {
            counts[index(v)] += 1;
        }
        let weight = 1.0 / (unit.len() - 1) as f64;
        for c in 0..k {
            if counts[c] == 0 {
                continue;
            }
            for d in 0..k {
                let pairs = if c == d { counts[c] * (counts[c] - 1) } else { counts[c] * counts[d] };
                if pairs > 0 {
                    coincidence[c][d] += pairs as f64 * weight;
                }
            }
        }
    }

    let marginals: Vec<f64> = coincidence.iter().map(|row| row.iter().sum()).collect();
    let n: f64 = marginals.iter().sum();
    let n_values: usize = pairable.iter().map(|u| u.len()).sum();

    let mut stats = AgreementStats {
        alpha: None,
        n_units_used: pairable.len(),
        n_pairable_values: n_values,
        observed_disagreement: None,
        expected_disagreement: None,
        metric: "ordinal".to_owned(),
    };
    if n_values < 2 {
        return stats;
    }

    // prefix[i] = sum of marginals[..i]
    let mut prefix = vec![0.0; k + 1];
    for i in 0..k {
        prefix[i + 1] = prefix[i] + marginals[i];
    }
    let delta2 = |c: usize, d: usize| {
        let (lo, hi) = if c <= d { (c, d) } else { (d, c) };
        let between = prefix[hi + 1] - prefix[lo] - (marginals[lo] + marginals[hi]) / 2.0;
        between * between
    };

    let mut observed = 0.0;
    let mut expected = 0.0;
    for c in 0..k {
        for d in 0..k {
            if c == d {
                continue;
            }
            let dist = delta2(c, d);
            observed += coincidence[c][d] * dist;
            expected += marginals[c] * marginals[d] * dist;
        }
    }
    let d_o = observed / n;
    let d_e = expected / (n * (n - 1.0));
    stats.observed_disagreement = Some(d_o);
    stats.expected_disagreement = Some(d_e);
    if d_e > 0.0 {
        stats.alpha = Some(1.0 - d_o / d_e);
    }
    stats
}

/// Mean over units with two or more ratings of the population standard
/// deviation of the unit's scores.
pub fn per_paper_score_dispersion(units: &[RatingUnit]) -> Option<f64> {
    let spreads: Vec<f64> = units
        .iter()
        .filter(|(_, v)| v.len() >= 2)
        .map(|(_, v)| {
            let m = v.len() as f64;
            let mean = v.iter().map(|s| s.value()).sum::<f64>() / m;
            (v.iter().map(|s| (s.value() - mean).powi(2)).sum::<f64>() / m).sqrt()
        })
        .collect();
    if spreads.is_empty() {
        None
    } else {
        Some(spreads.iter().sum::<f64>() / spreads.len() as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn units(raw: &[&[u8]]) -> Vec<RatingUnit> {
        raw.iter()
            .enumerate()
            .map(|(i, u)| (format!("u{i}"), u.iter().map(|&t| ScoreHalf::new(t).unwrap()).collect()))
            .collect()
    }

    #[test]
    fn perfect_agreement_is_one() {
        let a = krippendorff_alpha_ordinal(&units(&[&[4, 4], &[8, 8]]));
        assert_eq!(a.alpha, Some(1.0));
        assert_eq!(a.n_units_used, 2);
        assert_eq!(a.n_pairable_values, 4);
    }

    #[test]
    fn single_category_is_undefined() {
        assert_eq!(krippendorff_alpha_ordinal(&units(&[&[6, 6], &[6, 6, 6]])).alpha, None);
    }

    #[test]
    fn no_pairable_units_is_undefined() {
        let a = krippendorff_alpha_ordinal(&units(&[&[6], &[8]]));
        assert_eq!(a.alpha, None);
        assert_eq!(a.n_units_used, 0);
        assert_eq!(krippendorff_alpha_ordinal(&[]).alpha, None);
    }

    #[test]
    fn dispersion_examples() {
        assert_eq!(per_paper_score_dispersion(&units(&[&[6, 6], &[8, 8, 8]])), Some(0.0));
        // {3, 4}: population stdev is 0.5
        assert_eq!(per_paper_score_dispersion(&units(&[&[6, 8]])), Some(0.5));
        assert_eq!(per_paper_score_dispersion(&units(&[&[6]])), None);
        // single-rating units are ignored
        assert_eq!(per_paper_score_dispersion(&units(&[&[6, 8], &[2]])), Some(0.5));
    }
}
