//! n -> infinity limit of the prefactor: gamma from the expectation equation
//! over the coupling law and the limiting determinant ratio.

use serde::Serialize;

use crate::disorder::DisorderDistribution;
use crate::error::{Error, Result};
use crate::landscape::{tanh_derivs, CriticalPoint, ModelParams};

#[derive(Debug, Clone, Copy, Serialize)]
pub struct LimitPrefactor {
    pub gamma_limit: f64,
    pub det_ratio_limit: f64,
    pub log_det_ratio_limit: f64,
}

/// E[J^2 (1 + tanh U) e^{-2U+} / (e^{-2U+}/(beta (1 - tanh U)) - 2 gamma)] - 1,
/// U = -beta (J K(t) + h).
fn limit_equation(gamma: f64, k_t: f64, dist: &DisorderDistribution, p: &ModelParams) -> f64 {
    let mut total = 0.0;
    for (&a, &w) in dist.support().iter().zip(dist.weights()) {
        let u = -p.beta * (a * k_t + p.h);
        let plus_tanh = 2.0 / (1.0 + (-2.0 * u).exp());
        let minus_tanh = 2.0 / (1.0 + (2.0 * u).exp());
        if plus_tanh == 0.0 || minus_tanh == 0.0 {
            continue;
        }
        let e = (-2.0 * u.max(0.0)).exp();
        total += w * a * a * plus_tanh * e / (e / (p.beta * minus_tanh) - 2.0 * gamma);
    }
    total - 1.0
}

fn mean_beta_j2_sech2(k: f64, dist: &DisorderDistribution, p: &ModelParams) -> f64 {
    dist.support()
        .iter()
        .zip(dist.weights())
        .map(|(&a, &w)| w * p.beta * a * a * tanh_derivs(-p.beta * (a * k + p.h))[1])
        .sum()
}

pub fn limit_prefactor(
    dist: &DisorderDistribution,
    p: &ModelParams,
    minimum: &CriticalPoint,
    saddle: &CriticalPoint,
) -> Result<LimitPrefactor> {
    let k_t = saddle.k_value;
    let at_t = mean_beta_j2_sech2(k_t, dist, p);
    let at_m = mean_beta_j2_sech2(minimum.k_value, dist, p);
    if at_t <= 1.0 {
        return Err(Error::NoNegativeEigenvalue);
    }
    let f = |g: f64| limit_equation(g, k_t, dist, p);
    let mut lo = -1.0;
    while f(lo) >= 0.0 {
        lo *= 2.0;
        if lo < -1e300 {
            return Err(Error::Singular("limit gamma bracket".into()));
        }
    }
    let mut hi = 0.0;
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let gamma_limit = 0.5 * (lo + hi);

    let log_prod: f64 = (0..dist.k())
        .map(|l| (minimum.m.chi(l) / saddle.m.chi(l)).ln())
        .sum();
    let log_det_ratio_limit = ((at_t - 1.0) / (1.0 - at_m)).ln() + log_prod;
    Ok(LimitPrefactor { gamma_limit, det_ratio_limit: log_det_ratio_limit.exp(), log_det_ratio_limit })
}
