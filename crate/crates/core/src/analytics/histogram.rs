use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::{ReviewRecord, ScoreHalf};

/// Counts of overall scores on the nine-value lattice.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "HistogramRepr", try_from = "HistogramRepr")]
pub struct ScoreHistogram {
    counts: [u64; 9],
}

#[derive(Serialize, Deserialize)]
struct HistogramRepr {
    buckets: BTreeMap<String, u64>,
    total: u64,
}

impl From<ScoreHistogram> for HistogramRepr {
    fn from(h: ScoreHistogram) -> Self {
        HistogramRepr { buckets: ScoreHalf::lattice().map(|s| (s.to_string(), h.count(s))).collect(), total: h.total() }
    }
}

impl TryFrom<HistogramRepr> for ScoreHistogram {
    type Error = String;

    fn try_from(r: HistogramRepr) -> Result<Self, String> {
        let mut h = ScoreHistogram::default();
        for (k, v) in r.buckets {
            let x: f64 = k.parse().map_err(|_| format!("bad bucket {k}"))?;
            let s = crate::model::encode_overall(x).map_err(|e| e.to_string())?;
            h.counts[s.index()] = v;
        }
        if h.total() != r.total {
            return Err(format!("bucket counts sum to {} but total is {}", h.total(), r.total));
        }
        Ok(h)
    }
}

impl ScoreHistogram {
    pub fn add(&mut self, s: ScoreHalf) {
        if s.in_range() {
            self.counts[s.index()] += 1;
        }
    }

    pub fn count(&self, s: ScoreHalf) -> u64 {
        if s.in_range() {
            self.counts[s.index()]
        } else {
            0
        }
    }

    pub fn counts(&self) -> &[u64; 9] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Bucket probabilities; all zero for an empty histogram.
    pub fn normalized(&self) -> [f64; 9] {
        let total = self.total();
        let mut out = [0.0; 9];
        if total > 0 {
            for (o, &c) in out.iter_mut().zip(&self.counts) {
                *o = c as f64 / total as f64;
            }
        }
        out
    }

    /// Mean score in half-point units (twice the score).
    pub fn mean_twice(&self) -> Option<f64> {
        let total = self.total();
        if total == 0 {
            return None;
        }
        let sum: u64 = ScoreHalf::lattice().map(|s| u64::from(s.twice_value()) * self.count(s)).sum();
        Some(sum as f64 / total as f64)
    }

    pub fn mean(&self) -> Option<f64> {
        self.mean_twice().map(|m| m / 2.0)
    }

    /// Most frequent score; the lowest one on ties.
    pub fn mode(&self) -> Option<ScoreHalf> {
        let max = *self.counts.iter().max()?;
        if max == 0 {
            return None;
        }
        ScoreHalf::lattice().find(|&s| self.count(s) == max)
    }
}

pub fn score_histogram<'a>(reviews: impl IntoIterator<Item = &'a ReviewRecord>) -> ScoreHistogram {
    let mut h = ScoreHistogram::default();
    for r in reviews {
        h.add(r.overall);
    }
    h
}

/// Total-variation distance between the normalized histograms.
pub fn tv_distance(a: &ScoreHistogram, b: &ScoreHistogram) -> f64 {
    let (pa, pb) = (a.normalized(), b.normalized());
    0.5 * pa.iter().zip(&pb).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::review;
    use proptest::prelude::*;

    #[test]
    fn empty_histogram() {
        let h = score_histogram(&[]);
        assert_eq!(h.total(), 0);
        assert!(h.counts().iter().all(|&c| c == 0));
        assert_eq!(h.normalized(), [0.0; 9]);
        assert_eq!(h.mean(), None);
    }

    #[test]
    fn point_mass() {
        let reviews: Vec<_> = (0..5).map(|i| review(&format!("r{i}"), "s", "v", "c", 6)).collect();
        let h = score_histogram(&reviews);
        assert_eq!(h.count(ScoreHalf::new(6).unwrap()), 5);
        assert_eq!(h.total(), 5);
        assert_eq!(h.mode(), ScoreHalf::new(6).ok());
        assert_eq!(h.mean(), Some(3.0));
    }

    #[test]
    fn serializes_with_decimal_buckets() {
        let mut h = ScoreHistogram::default();
        h.add(ScoreHalf::new(7).unwrap());
        let json = serde_json::to_value(h).unwrap();
        assert_eq!(json["buckets"]["3.5"], 1);
        assert_eq!(json["total"], 1);
        let back: ScoreHistogram = serde_json::from_value(json).unwrap();
        assert_eq!(back, h);
    }

    proptest! {
        #[test]
        fn conservation(scores in proptest::collection::vec(2u8..=10, 0..200)) {
            let mut h = ScoreHistogram::default();
            for &t in &scores {
                h.add(ScoreHalf::new(t).unwrap());
            }
            prop_assert_eq!(h.total() as usize, scores.len());
            if !scores.is_empty() {
                let sum: f64 = h.normalized().iter().sum();
                prop_assert!((sum - 1.0).abs() <= 1e-12);
            }
            prop_assert!(tv_distance(&h, &h).abs() < 1e-15);
        }
    }
}
