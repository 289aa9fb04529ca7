//! Inputs shared by the benchmarks.

use threeyes_core::analytics::{rating_units, RatingUnit};
use threeyes_core::synth::{generate_venue, GeneratorConfig};
use threeyes_core::VenueSnapshot;

/// A default-calibrated synthetic campaign with `n_submissions` papers.
pub fn campaign(n_submissions: usize) -> VenueSnapshot {
    let cfg = GeneratorConfig {
        n_submissions,
        reviewer_pool_size: (n_submissions * 4421 / 3591).max(15),
        ..GeneratorConfig::default()
    };
    generate_venue(&cfg).expect("default config is valid")
}

pub fn units(s: &VenueSnapshot) -> Vec<RatingUnit> {
    rating_units(&s.reviews)
}
