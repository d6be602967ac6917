use serde::{Deserialize, Serialize};

use super::entropy::{cramer_entropy_derivative, cramer_entropy_split, grid_counts, grid_entropy_counts};
use super::ModelParams;
use crate::disorder::{DisorderDistribution, DisorderRealization};
use crate::error::Result;
use crate::magnetization::MagnetizationVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FreeEnergyVariant {
    StirlingMeanField,
    ExactBinomial,
}

/// E(m) = -(1/2)(sum a w m)^2 - h sum w m for arbitrary weights.
pub fn energy(m: &MagnetizationVector, support: &[f64], weights: &[f64], p: &ModelParams) -> f64 {
    let k = m.weighted(support, weights);
    let mag: f64 = m.values().iter().zip(weights).map(|(m, w)| w * m).sum();
    -0.5 * k * k - p.h * mag
}

/// E_n at integer up-counts: K_n = sum a_l (2 j_l - |A_l|)/n.
pub fn energy_counts(up: &[u64], real: &DisorderRealization, p: &ModelParams) -> f64 {
    let n = real.n_f64();
    let mut k = 0.0;
    let mut mag = 0.0;
    for l in 0..up.len() {
        let s = 2.0 * up[l] as f64 - real.level_counts[l] as f64;
        k += real.support[l] * s;
        mag += s;
    }
    k /= n;
    mag /= n;
    -0.5 * k * k - p.h * mag
}

/// E + (1/beta) sum w I_C(m) with the given weights.
pub fn mean_field_free_energy(
    m: &MagnetizationVector,
    support: &[f64],
    weights: &[f64],
    p: &ModelParams,
) -> f64 {
    let entropy: f64 = (0..m.k())
        .map(|l| weights[l] * cramer_entropy_split(m.one_minus(l), m.one_plus(l)))
        .sum();
    energy(m, support, weights, p) + entropy / p.beta
}

pub fn free_energy_limit(m: &MagnetizationVector, dist: &DisorderDistribution, p: &ModelParams) -> f64 {
    mean_field_free_energy(m, dist.support(), dist.weights(), p)
}

pub fn free_energy_finite(
    m: &MagnetizationVector,
    real: &DisorderRealization,
    p: &ModelParams,
    variant: FreeEnergyVariant,
) -> Result<f64> {
    match variant {
        FreeEnergyVariant::StirlingMeanField => {
            Ok(mean_field_free_energy(m, &real.support, &real.empirical_weights, p))
        }
        FreeEnergyVariant::ExactBinomial => {
            let up = grid_counts(m, real)?;
            Ok(free_energy_counts(&up, real, p))
        }
    }
}

/// F_n = E_n + I_n / beta at integer up-counts.
pub fn free_energy_counts(up: &[u64], real: &DisorderRealization, p: &ModelParams) -> f64 {
    energy_counts(up, real, p) + grid_entropy_counts(up, real) / p.beta
}

/// Gradient of the mean-field free energy:
/// -a_l w_l K - h w_l + (w_l/beta) artanh(m_l).
pub fn gradient(m: &MagnetizationVector, support: &[f64], weights: &[f64], p: &ModelParams) -> Vec<f64> {
    let k = m.weighted(support, weights);
    (0..m.k())
        .map(|l| {
            let w = weights[l];
            -support[l] * w * k - p.h * w
                + w / p.beta * cramer_entropy_derivative(m.one_minus(l), m.one_plus(l))
        })
        .collect()
}
