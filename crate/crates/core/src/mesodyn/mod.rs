//! Lumped Metropolis dynamics on the grid of level magnetizations.

pub mod ks;
pub mod spin;

use std::collections::HashSet;

use rand::Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::disorder::DisorderRealization;
use crate::error::{Error, Result};
use crate::landscape::free_energy::free_energy_counts;
use crate::landscape::hypothesis::{locate_gate, lower_minima};
use crate::landscape::{ModelParams, QuenchedLandscape};
use crate::magnetization::MagnetizationVector;
use crate::rng;

pub use ks::{exponential_law_test, ks_exponential, BatchSummary};
pub use spin::{simulate_spin_hitting_time, SpinState};

pub const DEFAULT_STEP_CAP: u64 = 10_000_000_000;

/// Grid point of the lumped chain as up-spin counts j_l in [0, |A_l|].
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MesoState {
    pub up: Vec<u64>,
}

impl MesoState {
    pub fn new(up: Vec<u64>, real: &DisorderRealization) -> Result<Self> {
        if up.len() != real.k() {
            return Err(Error::InvalidInput("state dimension differs from k".into()));
        }
        if let Some(l) = (0..up.len()).find(|&l| up[l] > real.level_counts[l]) {
            return Err(Error::NotOnGrid { level: l });
        }
        Ok(MesoState { up })
    }

    pub fn magnetization(&self, real: &DisorderRealization) -> MagnetizationVector {
        MagnetizationVector::from_counts(&self.up, &real.level_counts)
    }
}

/// Precomputed data for evaluating lumped rates at integer states.
#[derive(Debug, Clone)]
pub struct LumpedDynamics<'a> {
    pub real: &'a DisorderRealization,
    pub p: ModelParams,
    n: f64,
}

impl<'a> LumpedDynamics<'a> {
    pub fn new(real: &'a DisorderRealization, p: &ModelParams) -> Self {
        LumpedDynamics { real, p: *p, n: real.n_f64() }
    }

    /// K_n = sum a_l (2 j_l - |A_l|)/n.
    pub fn k_n(&self, up: &[u64]) -> f64 {
        let mut s = 0.0;
        for l in 0..up.len() {
            s += self.real.support[l] * (2.0 * up[l] as f64 - self.real.level_counts[l] as f64);
        }
        s / self.n
    }

    /// n [E_n(m^{l,-}) - E_n(m)] and n [E_n(m^{l,+}) - E_n(m)] given K_n(m).
    pub fn energy_steps(&self, l: usize, k_n: f64) -> (f64, f64) {
        let a = self.real.support[l];
        let h = self.p.h;
        let curvature = 2.0 * a * a / self.n;
        (2.0 * a * k_n - curvature + 2.0 * h, -2.0 * a * k_n - curvature - 2.0 * h)
    }

    /// Rates in the order (l=0,-), (l=0,+), (l=1,-), ...
    pub fn rates_into(&self, up: &[u64], out: &mut [f64]) {
        let k_n = self.k_n(up);
        let beta = self.p.beta;
        for l in 0..up.len() {
            let (down, upward) = self.energy_steps(l, k_n);
            let j = up[l] as f64;
            let a = self.real.level_counts[l] as f64;
            out[2 * l] = if up[l] == 0 { 0.0 } else { j * (-beta * down.max(0.0)).exp() };
            out[2 * l + 1] = if up[l] == self.real.level_counts[l] { 0.0 } else { (a - j) * (-beta * upward.max(0.0)).exp() };
        }
    }
}

pub fn lumped_rates(s: &MesoState, real: &DisorderRealization, p: &ModelParams) -> Vec<(MesoState, f64)> {
    let dynamics = LumpedDynamics::new(real, p);
    let mut rates = vec![0.0; 2 * s.up.len()];
    dynamics.rates_into(&s.up, &mut rates);
    let mut out = Vec::new();
    for l in 0..s.up.len() {
        if s.up[l] > 0 {
            let mut up = s.up.clone();
            up[l] -= 1;
            out.push((MesoState { up }, rates[2 * l]));
        }
        if s.up[l] < real.level_counts[l] {
            let mut up = s.up.clone();
            up[l] += 1;
            out.push((MesoState { up }, rates[2 * l + 1]));
        }
    }
    out
}

/// Conjunction of optional constraints on a grid state.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct TargetSet {
    /// Explicit list of states.
    pub states: Option<HashSet<Vec<u64>>>,
    /// K_n(m) >= threshold (`above`) or <= threshold.
    pub k_bound: Option<(f64, bool)>,
    /// F_n(m) <= value.
    pub free_energy_max: Option<f64>,
}

impl TargetSet {
    pub fn explicit<I: IntoIterator<Item = Vec<u64>>>(states: I) -> Self {
        TargetSet { states: Some(states.into_iter().collect()), ..Default::default() }
    }

    pub fn k_beyond(threshold: f64, above: bool) -> Self {
        TargetSet { k_bound: Some((threshold, above)), ..Default::default() }
    }

    pub fn contains(&self, up: &[u64], dynamics: &LumpedDynamics) -> bool {
        if let Some(states) = &self.states {
            if !states.contains(up) {
                return false;
            }
        }
        if let Some((threshold, above)) = self.k_bound {
            let k = dynamics.k_n(up);
            if (above && k < threshold) || (!above && k > threshold) {
                return false;
            }
        }
        if let Some(fmax) = self.free_energy_max {
            if free_energy_counts(up, dynamics.real, &dynamics.p) > fmax {
                return false;
            }
        }
        true
    }

    /// Grid states beyond the gate saddle whose F_n is within 2/(beta n) of the
    /// F_n of the nearest lower minimum on that side.
    pub fn sublevel_default(
        landscape: &QuenchedLandscape,
        minimum_index: usize,
        real: &DisorderRealization,
        p: &ModelParams,
    ) -> Result<Self> {
        let report = &landscape.report;
        let gate = locate_gate(report, minimum_index)
            .ok_or_else(|| Error::Hypothesis { item: 1, detail: "no lower minimum".into() })?;
        let above = gate.saddle_index > minimum_index;
        let lower = lower_minima(report, minimum_index);
        let nearest = if above {
            lower.iter().copied().filter(|&i| i > gate.saddle_index).min()
        } else {
            lower.iter().copied().filter(|&i| i < gate.saddle_index).max()
        }
        .expect("gate lies between the minimum and a lower minimum");
        let f_low = free_energy_counts(&landscape.snapped[nearest], real, p);
        Ok(TargetSet {
            states: None,
            k_bound: Some((report.points[gate.saddle_index].k_value, above)),
            free_energy_max: Some(f_low + 2.0 / (p.beta * real.n_f64())),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HittingTimeSample {
    pub time: f64,
    pub steps: u64,
    pub seed: u64,
    pub stream: u64,
    pub absorbed_at: MesoState,
}

/// Neumaier compensated sum.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

pub fn simulate_hitting_time(
    start: &MesoState,
    target: &TargetSet,
    real: &DisorderRealization,
    p: &ModelParams,
    seed: u64,
    stream: u64,
    max_steps: u64,
) -> Result<HittingTimeSample> {
    let dynamics = LumpedDynamics::new(real, p);
    let mut rng = rng::stream(seed, stream);
    let mut up = start.up.clone();
    let mut rates = vec![0.0; 2 * up.len()];
    let mut clock = CompensatedSum::default();
    let mut steps = 0u64;
    while !target.contains(&up, &dynamics) {
        if steps >= max_steps {
            return Err(Error::Timeout { steps, time: clock.value() });
        }
        dynamics.rates_into(&up, &mut rates);
        let total: f64 = rates.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Singular("absorbing non-target state".into()));
        }
        let hold: f64 = rng.sample(Exp1);
        clock.add(hold / total);
        let mut u = rng.gen::<f64>() * total;
        let mut choice = rates.len() - 1;
        for (i, &r) in rates.iter().enumerate() {
            if u < r {
                choice = i;
                break;
            }
            u -= r;
        }
        while rates[choice] == 0.0 {
            choice -= 1;
        }
        let l = choice / 2;
        if choice % 2 == 0 {
            up[l] -= 1;
        } else {
            up[l] += 1;
        }
        steps += 1;
    }
    Ok(HittingTimeSample { time: clock.value(), steps, seed, stream, absorbed_at: MesoState { up } })
}

/// Independent trials on streams 0..trials of one master seed, in trial order.
pub fn run_batch(
    start: &MesoState,
    target: &TargetSet,
    real: &DisorderRealization,
    p: &ModelParams,
    seed: u64,
    trials: u64,
    max_steps: u64,
) -> Result<Vec<HittingTimeSample>> {
    (0..trials)
        .into_par_iter()
        .map(|trial| simulate_hitting_time(start, target, real, p, seed, trial, max_steps))
        .collect()
}
