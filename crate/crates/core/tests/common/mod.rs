#![allow(dead_code)]

use metastab::disorder::DisorderDistribution;
use metastab::landscape::{beta_critical, ModelParams};

pub struct Fixture {
    pub name: &'static str,
    pub dist: DisorderDistribution,
    pub params: ModelParams,
    pub expected_points: usize,
}

fn fixture(name: &'static str, a: &[f64], w: &[f64], h: f64, beta_mult: f64, expected: usize) -> Fixture {
    let dist = DisorderDistribution::with_complement(a.to_vec(), w).unwrap();
    let beta = beta_mult * beta_critical(&dist);
    Fixture { name, params: ModelParams::new(beta, h).unwrap(), dist, expected_points: expected }
}

/// Reference parameter sets with their expected critical-point counts.
/// The last weight is one minus the others.
pub fn reference_sets() -> Vec<Fixture> {
    vec![
        fixture("two-level A", &[77.0, 45.0], &[0.688], 1740.0, 113.0, 3),
        fixture("two-level B", &[774.0, 36.84], &[0.59], 1740.0, 131.0, 5),
        fixture("three-level A", &[77.0, 45.0, 33.5], &[0.688, 0.15], 1740.0, 113.0, 3),
        fixture("three-level B", &[77.0, 45.0, 27.0], &[0.59, 0.15], 1740.0, 113.0, 5),
        fixture("three-level C", &[77.0, 45.0, 33.5], &[0.59, 0.15], 1740.0, 113.0, 7),
        fixture("four-level A", &[12.0, 16.0, 139.5, 24.5], &[0.474, 0.22, 0.111], 178.0, 3.8, 3),
        fixture("four-level B", &[14.0, 27.0, 57.0, 24.5], &[0.366, 0.1, 0.13], 262.0, 38.4, 5),
        fixture("four-level C", &[2.32, 4.92, 5.0, 11.32], &[0.6, 0.096, 0.033], 7.6, 95.2, 7),
        fixture("four-level D", &[12.0, 16.0, 50.5, 24.5], &[0.474, 0.22, 0.111], 178.0, 63.2, 9),
    ]
}

/// Two-level B with the leading coupling read as 77.4.
pub fn two_level_b_corrected() -> Fixture {
    fixture("two-level B (a1 = 77.4)", &[77.4, 36.84], &[0.59], 1740.0, 131.0, 5)
}

/// Distribution with a non-monotone critical field.
pub fn reentrant() -> DisorderDistribution {
    DisorderDistribution::with_complement(vec![12.0, 16.0, 50.5, 24.5], &[0.474, 0.22, 0.111]).unwrap()
}

pub fn curie_weiss() -> DisorderDistribution {
    DisorderDistribution::new(vec![1.0], vec![1.0]).unwrap()
}
