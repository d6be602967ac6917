use std::f64::consts::PI;

use crate::disorder::DisorderRealization;
use crate::error::{Error, Result};
use crate::magnetization::MagnetizationVector;

fn xlogx(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// I_C(x) = ((1-x)/2) log((1-x)/2) + ((1+x)/2) log((1+x)/2), with 0 log 0 = 0.
pub fn cramer_entropy(x: f64) -> f64 {
    cramer_entropy_split(1.0 - x, 1.0 + x)
}

/// I_C from 1 - x and 1 + x, for saturated arguments.
pub fn cramer_entropy_split(one_minus: f64, one_plus: f64) -> f64 {
    xlogx(0.5 * one_minus) + xlogx(0.5 * one_plus)
}

/// d I_C / dx = artanh(x).
pub fn cramer_entropy_derivative(one_minus: f64, one_plus: f64) -> f64 {
    0.5 * (one_plus / one_minus).ln()
}

pub fn ln_factorial(n: u64) -> f64 {
    if n < 20 {
        let mut p = 1.0f64;
        for i in 2..=n {
            p *= i as f64;
        }
        return p.ln();
    }
    let x = n as f64;
    let x2 = x * x;
    let series = 1.0 / (12.0 * x) - 1.0 / (360.0 * x * x2) + 1.0 / (1260.0 * x * x2 * x2)
        - 1.0 / (1680.0 * x * x2 * x2 * x2);
    x * x.ln() - x + 0.5 * (2.0 * PI * x).ln() + series
}

pub fn ln_binomial(n: u64, j: u64) -> f64 {
    debug_assert!(j <= n);
    if j == 0 || j == n {
        return 0.0;
    }
    ln_factorial(n) - ln_factorial(j) - ln_factorial(n - j)
}

/// Up-spin counts j_l = (1 + m_l)|A_l|/2, or an error if m is off the grid.
pub fn grid_counts(m: &MagnetizationVector, real: &DisorderRealization) -> Result<Vec<u64>> {
    if m.k() != real.k() {
        return Err(Error::InvalidInput("dimension mismatch".into()));
    }
    (0..m.k())
        .map(|l| {
            let a = real.level_counts[l] as f64;
            let j = 0.5 * m.one_plus(l) * a;
            let r = j.round();
            if (j - r).abs() > 1e-9 * a.max(1.0) || r < 0.0 || r > a {
                Err(Error::NotOnGrid { level: l })
            } else {
                Ok(r as u64)
            }
        })
        .collect()
}

/// I_n(m) = -(1/n) sum_l log C(|A_l|, j_l).
pub fn grid_entropy_exact(m: &MagnetizationVector, real: &DisorderRealization) -> Result<f64> {
    let up = grid_counts(m, real)?;
    Ok(grid_entropy_counts(&up, real))
}

pub fn grid_entropy_counts(up: &[u64], real: &DisorderRealization) -> f64 {
    let total: f64 = up
        .iter()
        .zip(&real.level_counts)
        .map(|(&j, &a)| ln_binomial(a, j))
        .sum();
    -total / real.n_f64()
}
