//! Eyring–Kramers ingredients: Hessians, determinant ratio, saddle rates,
//! the negative eigenvalue gamma_n and the assembled mean-time prediction.

pub mod fluctuation;
pub mod limit;

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::disorder::DisorderRealization;
use crate::error::{Error, Result};
use crate::landscape::free_energy::free_energy_counts;
use crate::landscape::hypothesis::check_hypothesis;
use crate::landscape::{ModelParams, QuenchedLandscape};
use crate::magnetization::MagnetizationVector;

pub use fluctuation::{exponent_fluctuation, ExponentFluctuation};
pub use limit::{limit_prefactor, LimitPrefactor};

#[derive(Debug, Clone, PartialEq)]
pub struct HessianMatrix {
    pub entries: DMatrix<f64>,
}

impl HessianMatrix {
    pub fn k(&self) -> usize {
        self.entries.nrows()
    }

    pub fn det_lu(&self) -> f64 {
        self.entries.clone().lu().determinant()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.entries.clone()).eigenvalues.iter().cloned().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }
}

/// A(m): off-diagonal -a_l w_l a_l' w_l', diagonal w_l/(beta (1 - m_l^2)) - a_l^2 w_l^2.
pub fn hessian(m: &MagnetizationVector, weights: &[f64], support: &[f64], p: &ModelParams) -> Result<HessianMatrix> {
    m.ensure_interior()?;
    let k = m.k();
    let entries = DMatrix::from_fn(k, k, |i, j| {
        let off = -support[i] * weights[i] * support[j] * weights[j];
        if i == j {
            weights[i] / (p.beta * m.chi(i)) + off
        } else {
            off
        }
    });
    Ok(HessianMatrix { entries })
}

/// Eigenvalues of A(m) in increasing order from its diagonal-minus-rank-one
/// form diag(w_l/(beta (1 - m_l^2))) - u u^T, u_l = a_l w_l. Each eigenvalue is
/// bracketed between consecutive diagonal entries, so the result stays
/// accurate when the diagonal spans many orders of magnitude (saturated
/// minima), where a dense eigensolver loses the small end.
pub fn hessian_eigenvalues(m: &MagnetizationVector, weights: &[f64], support: &[f64], p: &ModelParams) -> Result<Vec<f64>> {
    m.ensure_interior()?;
    let mut poles: Vec<(f64, f64)> = (0..m.k())
        .map(|l| (weights[l] / (p.beta * m.chi(l)), (support[l] * weights[l]).powi(2)))
        .collect();
    poles.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut out = Vec::with_capacity(poles.len());
    // equal diagonal entries deflate to an eigenvalue at the pole
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(poles.len());
    for (d, u2) in poles {
        match merged.last_mut() {
            Some(last) if last.0 == d => {
                last.1 += u2;
                out.push(d);
            }
            _ => merged.push((d, u2)),
        }
    }
    let total: f64 = merged.iter().map(|x| x.1).sum();
    let secular = |lam: f64| 1.0 - merged.iter().map(|(d, u2)| u2 / (d - lam)).sum::<f64>();
    for i in 0..merged.len() {
        let mut lo = if i == 0 { merged[0].0 - total } else { merged[i - 1].0 };
        let mut hi = merged[i].0;
        for _ in 0..4000 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if secular(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        out.push(0.5 * (lo + hi));
    }
    out.sort_by(f64::total_cmp);
    Ok(out)
}

/// 1 - beta sum a_l^2 w_l (1 - m_l^2).
pub fn det_leading_factor(m: &MagnetizationVector, weights: &[f64], support: &[f64], p: &ModelParams) -> f64 {
    1.0 - p.beta * (0..m.k()).map(|l| support[l] * support[l] * weights[l] * m.chi(l)).sum::<f64>()
}

/// (sign, log |det A(m)|) from the closed form.
pub fn log_det_closed_form(
    m: &MagnetizationVector,
    weights: &[f64],
    support: &[f64],
    p: &ModelParams,
) -> Result<(f64, f64)> {
    m.ensure_interior()?;
    let lead = det_leading_factor(m, weights, support, p);
    let log_prod: f64 = (0..m.k()).map(|l| (weights[l] / (p.beta * m.chi(l))).ln()).sum();
    Ok((lead.signum(), lead.abs().ln() + log_prod))
}

pub fn det_closed_form(m: &MagnetizationVector, weights: &[f64], support: &[f64], p: &ModelParams) -> Result<f64> {
    let (sign, log_abs) = log_det_closed_form(m, weights, support, p)?;
    Ok(sign * log_abs.exp())
}

/// r_l = |A_l| (1 - t_l)/2 exp[-2 beta (-h - a_l (a_l/n + K_n(t)))_+].
pub fn saddle_rates(t: &MagnetizationVector, real: &DisorderRealization, p: &ModelParams) -> Vec<f64> {
    let n = real.n_f64();
    let k_n = t.weighted(&real.support, &real.empirical_weights);
    (0..t.k())
        .map(|l| {
            let a = real.support[l];
            let uphill = (-p.h - a * (a / n + k_n)).max(0.0);
            real.level_counts[l] as f64 * 0.5 * t.one_minus(l) * (-2.0 * p.beta * uphill).exp()
        })
        .collect()
}

fn require_saddle(t: &MagnetizationVector, real: &DisorderRealization, p: &ModelParams) -> Result<()> {
    if det_leading_factor(t, &real.empirical_weights, &real.support, p) >= 0.0 {
        return Err(Error::NoNegativeEigenvalue);
    }
    Ok(())
}

pub fn gamma_secular(t: &MagnetizationVector, real: &DisorderRealization, p: &ModelParams) -> Result<f64> {
    let rates = saddle_rates(t, real, p);
    gamma_secular_with_rates(t, real, p, &rates)
}

/// Root of (1/n) sum a_l^2 / [1/(n beta w_l (1 - t_l^2)) - gamma/r_l] = 1 on the
/// negative axis, written as (1/n) sum a_l^2 r_l / (d_l - gamma) = 1 with
/// d_l = r_l / (n beta w_l (1 - t_l^2)).
pub fn gamma_secular_with_rates(
    t: &MagnetizationVector,
    real: &DisorderRealization,
    p: &ModelParams,
    rates: &[f64],
) -> Result<f64> {
    require_saddle(t, real, p)?;
    let n = real.n_f64();
    let terms: Vec<(f64, f64)> = (0..t.k())
        .filter(|&l| rates[l] > 0.0 && t.chi(l) > 0.0)
        .map(|l| {
            let a = real.support[l];
            let d = rates[l] / (n * p.beta * real.empirical_weights[l] * t.chi(l));
            (a * a * rates[l] / n, d)
        })
        .collect();
    let secular = |g: f64| terms.iter().map(|(num, d)| num / (d - g)).sum::<f64>() - 1.0;
    let scale = terms.iter().map(|(num, _)| num * n).fold(0.0, f64::max);
    let mut lo = -scale - 1.0;
    let mut hi = 0.0;
    let mut expand = 0;
    while secular(lo) >= 0.0 {
        lo *= 2.0;
        expand += 1;
        if expand > 2000 {
            return Err(Error::Singular("secular bracket".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 1e-14 || mid == lo || mid == hi {
            break;
        }
        if secular(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// B_n with entries sqrt(r_l r_l')/(n w_l w_l') A_ll'.
pub fn b_matrix(t: &MagnetizationVector, real: &DisorderRealization, p: &ModelParams, rates: &[f64]) -> Result<DMatrix<f64>> {
    let a = hessian(t, &real.empirical_weights, &real.support, p)?;
    let n = real.n_f64();
    let w = &real.empirical_weights;
    let k = t.k();
    Ok(DMatrix::from_fn(k, k, |i, j| (rates[i] * rates[j]).sqrt() / (n * w[i] * w[j]) * a.entries[(i, j)]))
}

pub fn gamma_eigen(t: &MagnetizationVector, real: &DisorderRealization, p: &ModelParams) -> Result<f64> {
    require_saddle(t, real, p)?;
    let rates = saddle_rates(t, real, p);
    let b = b_matrix(t, real, p, &rates)?;
    let ev = SymmetricEigen::new(b).eigenvalues;
    Ok(ev.iter().cloned().fold(f64::INFINITY, f64::min))
}

#[derive(Debug, Clone, Serialize)]
pub struct KramersPrediction {
    pub exponent: f64,
    pub det_ratio_sqrt: f64,
    pub gamma: f64,
    pub prefactor: f64,
    pub log_mean_time: f64,
    #[serde(skip)]
    pub mean_time: f64,
    #[serde(skip)]
    pub saddle_rates: Vec<f64>,
    #[serde(skip)]
    pub minimum_index: usize,
    #[serde(skip)]
    pub saddle_index: usize,
}

/// Mean crossover time from the minimum `minimum_index` of a quenched
/// landscape to the set of lower minima.
pub fn predict_mean_time(
    landscape: &QuenchedLandscape,
    minimum_index: usize,
    real: &DisorderRealization,
    p: &ModelParams,
) -> Result<KramersPrediction> {
    let diag = check_hypothesis(real, p, landscape, minimum_index);
    if let Some(item) = diag.first_failure() {
        return Err(Error::Hypothesis { item: item.item, detail: item.detail.clone() });
    }
    let saddle_index = diag.gate_index.expect("gate exists when the hypothesis holds");
    let report = &landscape.report;
    let m = &report.points[minimum_index].m;
    let t = &report.points[saddle_index].m;
    let w = &real.empirical_weights;

    let f_t = free_energy_counts(&landscape.snapped[saddle_index], real, p);
    let f_m = free_energy_counts(&landscape.snapped[minimum_index], real, p);
    let exponent = p.beta * real.n_f64() * (f_t - f_m);

    let (_, log_det_t) = log_det_closed_form(t, w, &real.support, p)?;
    let (sign_m, log_det_m) = log_det_closed_form(m, w, &real.support, p)?;
    if sign_m <= 0.0 {
        return Err(Error::Hypothesis { item: 2, detail: "det A(m) <= 0 at the minimum".into() });
    }
    let log_det_ratio_sqrt = 0.5 * (log_det_t - log_det_m);

    let rates = saddle_rates(t, real, p);
    let gamma = gamma_secular_with_rates(t, real, p, &rates)?;
    let prefactor = PI / (2.0 * p.beta * (-gamma));
    let log_mean_time = log_det_ratio_sqrt + prefactor.ln() + exponent;
    Ok(KramersPrediction {
        exponent,
        det_ratio_sqrt: log_det_ratio_sqrt.exp(),
        gamma,
        prefactor,
        log_mean_time,
        mean_time: log_mean_time.exp(),
        saddle_rates: rates,
        minimum_index,
        saddle_index,
    })
}
