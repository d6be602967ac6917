//! Quasi one-dimensional free energy
//! G(K) = -K^2/2 - log 2/beta - inf_t [K t + sum (w_l/beta) log cosh(beta (h - t a_l))].

use std::f64::consts::LN_2;

use super::{tanh_derivs, ModelParams};
use crate::disorder::DisorderDistribution;

fn log_cosh(x: f64) -> f64 {
    let ax = x.abs();
    ax + (-2.0 * ax).exp().ln_1p() - LN_2
}

fn inner(k: f64, t: f64, dist: &DisorderDistribution, p: &ModelParams) -> [f64; 3] {
    let mut value = k * t;
    let mut slope = k;
    let mut curv = 0.0;
    for (&a, &w) in dist.support().iter().zip(dist.weights()) {
        let y = p.beta * (p.h - t * a);
        let d = tanh_derivs(y);
        value += w / p.beta * log_cosh(y);
        slope -= w * a * d[0];
        curv += w * a * a * p.beta * d[1];
    }
    [value, slope, curv]
}

/// Minimizer of the inner objective. The slope K - sum w a tanh(beta(h - t a))
/// increases strictly from K - S to K + S, so a root exists iff |K| < S.
/// Returns None when the minimizer runs off to infinity (|K| = S to working
/// precision), where the infimum is the plateau value.
pub fn inner_minimizer(k: f64, dist: &DisorderDistribution, p: &ModelParams) -> Option<f64> {
    let s = dist.mean();
    if !(k.abs() < s) {
        return None;
    }
    // at a fixed point of T the minimizer is exactly -K
    let t0 = -k;
    let slope0 = inner(k, t0, dist, p)[1];
    if slope0 == 0.0 {
        return Some(t0);
    }
    let mut step = 1.0 / (p.beta * dist.max_support());
    let (mut lo, mut hi);
    if slope0 > 0.0 {
        hi = t0;
        lo = t0 - step;
        while inner(k, lo, dist, p)[1] > 0.0 {
            hi = lo;
            step *= 2.0;
            lo = t0 - step;
            if step > 1e12 * (1.0 + t0.abs()) {
                return None;
            }
        }
    } else {
        lo = t0;
        hi = t0 + step;
        while inner(k, hi, dist, p)[1] < 0.0 {
            lo = hi;
            step *= 2.0;
            hi = t0 + step;
            if step > 1e12 * (1.0 + t0.abs()) {
                return None;
            }
        }
    }
    let mut t = 0.5 * (lo + hi);
    for _ in 0..200 {
        let [_, g, c] = inner(k, t, dist, p);
        if g == 0.0 {
            return Some(t);
        }
        if g > 0.0 {
            hi = t;
        } else {
            lo = t;
        }
        let newton = t - g / c;
        let next = if c > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (next - t).abs() <= 1e-12 * (1.0 + t.abs()) || hi - lo <= 1e-15 * (1.0 + t.abs()) {
            return Some(next);
        }
        t = next;
    }
    Some(t)
}

/// G is finite on [-S, S]; at K = +-S (to the root tolerance) the infimum is approached as t -> -+inf
/// and equals +-h - log 2/beta, giving G = -K^2/2 -+ h (the all-aligned energy).
pub fn g_reduced(k: f64, dist: &DisorderDistribution, p: &ModelParams) -> f64 {
    let s = dist.mean();
    if k.abs() > s * (1.0 + 1e-10) {
        return f64::INFINITY;
    }
    match inner_minimizer(k, dist, p) {
        Some(t) => -0.5 * k * k - LN_2 / p.beta - inner(k, t, dist, p)[0],
        None => -0.5 * k * k - k.signum() * p.h,
    }
}
