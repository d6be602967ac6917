//! Free-energy landscape: the self-consistency map T, its fixed points, and
//! the metastable phase diagram.

pub mod entropy;
pub mod free_energy;
pub mod hypothesis;
pub mod reduced;
pub mod roots;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::disorder::{quenched, DisorderDistribution, DisorderRealization};
use crate::error::{Error, Result};
use crate::magnetization::MagnetizationVector;

pub use entropy::{cramer_entropy, grid_entropy_exact};
pub use free_energy::{free_energy_finite, free_energy_limit, FreeEnergyVariant};
pub use hypothesis::{check_hypothesis, HypothesisDiagnostic, HypothesisItem};
pub use reduced::g_reduced;
pub use roots::ScanOptions;

pub const TANGENCY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub beta: f64,
    pub h: f64,
}

impl ModelParams {
    pub fn new(beta: f64, h: f64) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::InvalidInput(format!("beta = {beta} must be > 0")));
        }
        if !(h.is_finite() && h >= 0.0) {
            return Err(Error::InvalidInput(format!("h = {h} must be >= 0")));
        }
        Ok(ModelParams { beta, h })
    }
}

/// tanh and its first four derivatives at y, with sech^2 computed without
/// cancellation.
pub(crate) fn tanh_derivs(y: f64) -> [f64; 5] {
    let e = (-2.0 * y.abs()).exp();
    let th = y.tanh();
    let s = 4.0 * e / ((1.0 + e) * (1.0 + e));
    [
        th,
        s,
        -2.0 * th * s,
        -2.0 * s + 6.0 * th * th * s,
        4.0 * th * s + 12.0 * th * s * s - 12.0 * th * th * th * s,
    ]
}

/// Derivatives of T of order `from..from+3` at K.
fn t_derivs(k: f64, dist: &DisorderDistribution, p: &ModelParams, from: usize) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (&a, &w) in dist.support().iter().zip(dist.weights()) {
        let d = tanh_derivs(p.beta * (a * k + p.h));
        let mut scale = a * w * (p.beta * a).powi(from as i32);
        for (j, o) in out.iter_mut().enumerate() {
            *o += scale * d[from + j];
            scale *= p.beta * a;
        }
    }
    out
}

/// T(K) = sum a_l w_l tanh(beta (a_l K + h)).
pub fn t_map(k: f64, dist: &DisorderDistribution, p: &ModelParams) -> f64 {
    t_derivs(k, dist, p, 0)[0]
}

pub fn t_prime(k: f64, dist: &DisorderDistribution, p: &ModelParams) -> f64 {
    t_derivs(k, dist, p, 0)[1]
}

pub fn t_second(k: f64, dist: &DisorderDistribution, p: &ModelParams) -> f64 {
    t_derivs(k, dist, p, 0)[2]
}

pub fn beta_critical(dist: &DisorderDistribution) -> f64 {
    1.0 / dist.second_moment()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PointKind {
    Minimum,
    Saddle,
    Degenerate,
}

#[derive(Debug, Clone, Serialize)]
pub struct CriticalPoint {
    #[serde(rename = "K")]
    pub k_value: f64,
    pub m: MagnetizationVector,
    pub kind: PointKind,
    #[serde(rename = "F")]
    pub free_energy: f64,
    #[serde(rename = "G")]
    pub reduced: f64,
    #[serde(rename = "Tprime")]
    pub t_prime: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LandscapeReport {
    pub beta_c: f64,
    pub points: Vec<CriticalPoint>,
    pub metastable: bool,
    pub inflection_points: Vec<f64>,
    /// A root with |T' - 1| below the tangency tolerance was found.
    pub degenerate: bool,
}

impl LandscapeReport {
    pub fn minima(&self) -> impl Iterator<Item = (usize, &CriticalPoint)> {
        self.points.iter().enumerate().filter(|(_, c)| c.kind == PointKind::Minimum)
    }

    pub fn count(&self) -> usize {
        self.points.len()
    }
}

/// m_l = tanh(beta (a_l K + h)).
pub fn magnetization_at(k: f64, dist: &DisorderDistribution, p: &ModelParams) -> MagnetizationVector {
    let y: Vec<f64> = dist.support().iter().map(|a| p.beta * (a * k + p.h)).collect();
    MagnetizationVector::from_fields(&y)
}

/// Roots of T(K) - K on [-(sum a w) - h, sum a w + h].
pub fn fixed_point_locations(dist: &DisorderDistribution, p: &ModelParams, opts: &ScanOptions) -> Vec<f64> {
    let bound = dist.mean() + p.h;
    roots::scan_roots(
        |k| {
            let t = t_derivs(k, dist, p, 0);
            [t[0] - k, t[1] - 1.0, t[2]]
        },
        -bound,
        bound,
        opts,
    )
}

fn classify(t_prime: f64) -> PointKind {
    if (t_prime - 1.0).abs() < TANGENCY_TOL {
        PointKind::Degenerate
    } else if t_prime < 1.0 {
        PointKind::Minimum
    } else {
        PointKind::Saddle
    }
}

pub fn metastable_from_roots(dist: &DisorderDistribution, p: &ModelParams, roots: &[f64]) -> bool {
    roots.iter().filter(|&&k| classify(t_prime(k, dist, p)) != PointKind::Degenerate).count() >= 3
}

pub fn find_fixed_points_with(dist: &DisorderDistribution, p: &ModelParams, opts: &ScanOptions) -> LandscapeReport {
    let locations = fixed_point_locations(dist, p, opts);
    let points: Vec<CriticalPoint> = locations
        .iter()
        .map(|&k| {
            let m = magnetization_at(k, dist, p);
            let t_prime = t_prime(k, dist, p);
            CriticalPoint {
                k_value: k,
                free_energy: free_energy_limit(&m, dist, p),
                reduced: g_reduced(k, dist, p),
                kind: classify(t_prime),
                t_prime,
                m,
            }
        })
        .collect();
    let degenerate = points.iter().any(|c| c.kind == PointKind::Degenerate);
    let metastable = points.iter().filter(|c| c.kind != PointKind::Degenerate).count() >= 3;
    LandscapeReport {
        beta_c: beta_critical(dist),
        points,
        metastable,
        inflection_points: inflection_points(dist, p),
        degenerate,
    }
}

pub fn find_fixed_points(dist: &DisorderDistribution, p: &ModelParams, tol: f64) -> LandscapeReport {
    find_fixed_points_with(dist, p, &ScanOptions { tol, ..Default::default() })
}

pub fn is_metastable(dist: &DisorderDistribution, p: &ModelParams) -> bool {
    let roots = fixed_point_locations(dist, p, &ScanOptions::default());
    metastable_from_roots(dist, p, &roots)
}

/// Critical points of the quenched landscape together with their nearest grid
/// points, stored as up-spin counts.
#[derive(Debug, Clone, Serialize)]
pub struct QuenchedLandscape {
    pub report: LandscapeReport,
    pub snapped: Vec<Vec<u64>>,
}

impl QuenchedLandscape {
    pub fn snapped_magnetization(&self, index: usize, real: &DisorderRealization) -> MagnetizationVector {
        MagnetizationVector::from_counts(&self.snapped[index], &real.level_counts)
    }
}

pub fn snap_to_grid(m: &MagnetizationVector, real: &DisorderRealization) -> Vec<u64> {
    (0..m.k())
        .map(|l| {
            let a = real.level_counts[l];
            let j = (0.5 * m.one_plus(l) * a as f64).round();
            (j.max(0.0) as u64).min(a)
        })
        .collect()
}

pub fn finite_n_fixed_points(real: &DisorderRealization, p: &ModelParams, tol: f64) -> Result<QuenchedLandscape> {
    let dist = quenched(real)?;
    let report = find_fixed_points(&dist, p, tol);
    let snapped = report.points.iter().map(|c| snap_to_grid(&c.m, real)).collect();
    Ok(QuenchedLandscape { report, snapped })
}

pub fn h_critical(beta: f64, dist: &DisorderDistribution, tol: f64) -> Result<f64> {
    let beta_c = beta_critical(dist);
    if beta <= beta_c {
        return Err(Error::NotMetastableRegime { beta, beta_c });
    }
    let metastable = |h: f64| is_metastable(dist, &ModelParams { beta, h });
    let mut lo = 0.0;
    let mut hi = dist.max_support() * dist.mean();
    if !metastable(lo) {
        return Ok(0.0);
    }
    if metastable(hi) {
        return Err(Error::InvalidInput(format!("metastable at the upper bracket h = {hi}")));
    }
    for _ in 0..60 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if metastable(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Roots of T'' inside [-h/min a, -h/max a]; {0} when h = 0.
pub fn inflection_points(dist: &DisorderDistribution, p: &ModelParams) -> Vec<f64> {
    if p.h == 0.0 {
        return vec![0.0];
    }
    let lo = -p.h / dist.min_support();
    let hi = -p.h / dist.max_support();
    if lo == hi {
        return vec![lo];
    }
    let pad = 1e-9 * (hi - lo);
    roots::scan_roots(|k| t_derivs(k, dist, p, 2), lo - pad, hi + pad, &ScanOptions::default())
        .into_iter()
        .map(|k| k.clamp(lo, hi))
        .collect()
}

/// (K, T, T', T'') over the fixed-point bracket.
pub fn t_curve(dist: &DisorderDistribution, p: &ModelParams, samples: usize) -> Vec<[f64; 4]> {
    let bound = dist.mean() + p.h;
    let samples = samples.max(2);
    (0..samples)
        .map(|i| {
            let k = -bound + 2.0 * bound * i as f64 / (samples - 1) as f64;
            let t = t_derivs(k, dist, p, 0);
            [k, t[0], t[1], t[2]]
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseCell {
    pub beta: f64,
    pub h: f64,
    pub metastable: bool,
    pub n_roots: usize,
}

pub fn phase_grid(dist: &DisorderDistribution, betas: &[f64], hs: &[f64]) -> Vec<PhaseCell> {
    let cells: Vec<(f64, f64)> = betas.iter().flat_map(|&b| hs.iter().map(move |&h| (b, h))).collect();
    cells
        .par_iter()
        .map(|&(beta, h)| {
            let p = ModelParams { beta, h };
            let roots = fixed_point_locations(dist, &p, &ScanOptions::default());
            PhaseCell { beta, h, metastable: metastable_from_roots(dist, &p, &roots), n_roots: roots.len() }
        })
        .collect()
}
