//! One-sample Kolmogorov–Smirnov test against the unit exponential after
//! rescaling by the sample mean.

use std::f64::consts::PI;

use serde::Serialize;

use super::HittingTimeSample;
use crate::error::{Error, Result};

pub const MIN_SAMPLES: usize = 100;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct BatchSummary {
    pub trials: usize,
    pub mean: f64,
    pub stderr: f64,
    pub ks_statistic: f64,
    pub p_value: f64,
}

impl BatchSummary {
    pub fn from_times(times: &[f64]) -> Result<Self> {
        let (mean, stderr) = mean_stderr(times);
        let (ks_statistic, p_value) = ks_exponential(times)?;
        Ok(BatchSummary { trials: times.len(), mean, stderr, ks_statistic, p_value })
    }
}

pub fn mean_stderr(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    if x.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Kolmogorov survival function P(sup |B| > lambda).
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        let mut cdf = 0.0;
        for j in 1..=50 {
            let k = (2 * j - 1) as f64;
            cdf += (-(k * k) * PI * PI / (8.0 * lambda * lambda)).exp();
        }
        (1.0 - (2.0 * PI).sqrt() / lambda * cdf).clamp(0.0, 1.0)
    } else {
        let mut q = 0.0;
        for j in 1..=100 {
            let jf = j as f64;
            let term = (-2.0 * jf * jf * lambda * lambda).exp();
            q += if j % 2 == 1 { term } else { -term };
            if term < 1e-300 {
                break;
            }
        }
        (2.0 * q).clamp(0.0, 1.0)
    }
}

/// (D, p) for times rescaled by their mean against Exp(1).
pub fn ks_exponential(times: &[f64]) -> Result<(f64, f64)> {
    if times.len() < MIN_SAMPLES {
        return Err(Error::TooFewSamples { needed: MIN_SAMPLES, got: times.len() });
    }
    let mean = times.iter().sum::<f64>() / times.len() as f64;
    let mut x: Vec<f64> = times.iter().map(|t| t / mean).collect();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &xi) in x.iter().enumerate() {
        let f = 1.0 - (-xi).exp();
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    let sn = n.sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    Ok((d, kolmogorov_survival(lambda)))
}

pub fn exponential_law_test(samples: &[HittingTimeSample]) -> Result<(f64, f64)> {
    let times: Vec<f64> = samples.iter().map(|s| s.time).collect();
    ks_exponential(&times)
}
