//! Coupling law P = sum_l w_l delta_{a_l} and its finite-n realizations.

use rand::distributions::{Distribution, WeightedIndex};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDistribution", into = "RawDistribution")]
pub struct DisorderDistribution {
    support: Vec<f64>,
    weights: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawDistribution {
    support: Vec<f64>,
    weights: Vec<f64>,
}

impl TryFrom<RawDistribution> for DisorderDistribution {
    type Error = Error;

    fn try_from(raw: RawDistribution) -> Result<Self> {
        DisorderDistribution::normalized(raw.support, raw.weights)
    }
}

impl From<DisorderDistribution> for RawDistribution {
    fn from(d: DisorderDistribution) -> Self {
        RawDistribution { support: d.support, weights: d.weights }
    }
}

impl DisorderDistribution {
    /// Strict constructor: weights must already sum to 1 within 1e-12.
    pub fn new(support: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        Self::validate_shape(&support, &weights)?;
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidDistribution(format!("weights sum to {total}, not 1")));
        }
        Ok(DisorderDistribution { support, weights })
    }

    /// Literal constructor used by the JSON parser. Weights within 1e-9 of a
    /// unit sum are rescaled; anything further off is rejected.
    pub fn normalized(support: Vec<f64>, mut weights: Vec<f64>) -> Result<Self> {
        Self::validate_shape(&support, &weights)?;
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidDistribution(format!("weights sum to {total}, not 1")));
        }
        if (total - 1.0).abs() > 1e-12 {
            for w in &mut weights {
                *w /= total;
            }
        }
        Ok(DisorderDistribution { support, weights })
    }

    /// Weights given for all but the last level; the last is 1 minus the rest.
    pub fn with_complement(support: Vec<f64>, leading: &[f64]) -> Result<Self> {
        let mut weights = leading.to_vec();
        weights.push(1.0 - leading.iter().sum::<f64>());
        Self::new(support, weights)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidDistribution(e.to_string()))
    }

    fn validate_shape(support: &[f64], weights: &[f64]) -> Result<()> {
        if support.is_empty() {
            return Err(Error::InvalidDistribution("empty support".into()));
        }
        if support.len() != weights.len() {
            return Err(Error::InvalidDistribution(format!(
                "{} support values but {} weights",
                support.len(),
                weights.len()
            )));
        }
        for (l, &a) in support.iter().enumerate() {
            if !(a.is_finite() && a > 0.0) {
                return Err(Error::InvalidDistribution(format!("support[{l}] = {a} must be > 0")));
            }
            if support[..l].contains(&a) {
                return Err(Error::InvalidDistribution(format!("support value {a} repeated")));
            }
        }
        for (l, &w) in weights.iter().enumerate() {
            if !(w.is_finite() && w > 0.0 && w < 1.0 || w == 1.0 && weights.len() == 1) {
                return Err(Error::InvalidDistribution(format!("weights[{l}] = {w} not in (0,1)")));
            }
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.support.len()
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// sum a_l w_l, the saturation value of T.
    pub fn mean(&self) -> f64 {
        self.support.iter().zip(&self.weights).map(|(a, w)| a * w).sum()
    }

    /// sum a_l^2 w_l.
    pub fn second_moment(&self) -> f64 {
        self.support.iter().zip(&self.weights).map(|(a, w)| a * a * w).sum()
    }

    pub fn max_support(&self) -> f64 {
        self.support.iter().cloned().fold(f64::MIN, f64::max)
    }

    pub fn min_support(&self) -> f64 {
        self.support.iter().cloned().fold(f64::MAX, f64::min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMode {
    Iid,
    ExactProportions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisorderRealization {
    pub n: u64,
    pub level_counts: Vec<u64>,
    pub empirical_weights: Vec<f64>,
    pub support: Vec<f64>,
    /// Set when some level is empty; downstream landscape code refuses these.
    pub has_empty_level: bool,
}

impl DisorderRealization {
    pub fn from_counts(support: &[f64], counts: &[u64]) -> Result<Self> {
        if support.len() != counts.len() || support.is_empty() {
            return Err(Error::InvalidInput("support and counts differ in length".into()));
        }
        let n: u64 = counts.iter().sum();
        if n == 0 {
            return Err(Error::InvalidInput("n must be positive".into()));
        }
        Ok(DisorderRealization {
            n,
            level_counts: counts.to_vec(),
            empirical_weights: counts.iter().map(|&c| c as f64 / n as f64).collect(),
            support: support.to_vec(),
            has_empty_level: counts.contains(&0),
        })
    }

    pub fn k(&self) -> usize {
        self.level_counts.len()
    }

    pub fn n_f64(&self) -> f64 {
        self.n as f64
    }

    pub fn ensure_nonempty(&self) -> Result<()> {
        match self.level_counts.iter().position(|&c| c == 0) {
            Some(level) => Err(Error::EmptyLevel { level }),
            None => Ok(()),
        }
    }
}

pub fn sample_realization(
    dist: &DisorderDistribution,
    n: u64,
    seed: u64,
    mode: SamplingMode,
) -> Result<DisorderRealization> {
    if n == 0 {
        return Err(Error::InvalidInput("n must be at least 1".into()));
    }
    let counts = match mode {
        SamplingMode::ExactProportions => {
            let counts = largest_remainder(dist.weights(), n);
            if let Some(level) = counts.iter().position(|&c| c == 0) {
                return Err(Error::EmptyLevel { level });
            }
            counts
        }
        SamplingMode::Iid => {
            let mut rng = rng::stream(seed, 0);
            let index = WeightedIndex::new(dist.weights())
                .map_err(|e| Error::InvalidDistribution(e.to_string()))?;
            let mut counts = vec![0u64; dist.k()];
            for _ in 0..n {
                counts[index.sample(&mut rng)] += 1;
            }
            counts
        }
    };
    DisorderRealization::from_counts(dist.support(), &counts)
}

fn largest_remainder(weights: &[f64], n: u64) -> Vec<u64> {
    let nf = n as f64;
    let mut counts = Vec::with_capacity(weights.len());
    let mut fractions = Vec::with_capacity(weights.len());
    for &w in weights {
        let q = nf * w;
        // products like 1000 * 0.688 land a few ulps off an integer
        let r = q.round();
        let q = if (q - r).abs() <= 1e-9 * nf.max(1.0) { r } else { q };
        let base = q.floor();
        counts.push(base as u64);
        fractions.push(q - base);
    }
    let assigned: u64 = counts.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&i, &j| fractions[j].total_cmp(&fractions[i]).then(i.cmp(&j)));
    if assigned <= n {
        for &i in order.iter().cycle().take((n - assigned) as usize) {
            counts[i] += 1;
        }
    } else {
        // only reachable through rounding of weights that overshoot 1
        let mut excess = assigned - n;
        for &i in order.iter().rev().cycle() {
            if excess == 0 {
                break;
            }
            if counts[i] > 0 {
                counts[i] -= 1;
                excess -= 1;
            }
        }
    }
    counts
}

pub fn empirical_distribution(
    real: &DisorderRealization,
    dist: &DisorderDistribution,
) -> Result<DisorderDistribution> {
    real.ensure_nonempty()?;
    if real.k() != dist.k() {
        return Err(Error::InvalidInput("realization and distribution differ in k".into()));
    }
    Ok(DisorderDistribution {
        support: dist.support().to_vec(),
        weights: real.empirical_weights.clone(),
    })
}

/// Quenched law of a realization, using the support it carries.
pub fn quenched(real: &DisorderRealization) -> Result<DisorderDistribution> {
    real.ensure_nonempty()?;
    Ok(DisorderDistribution {
        support: real.support.clone(),
        weights: real.empirical_weights.clone(),
    })
}
