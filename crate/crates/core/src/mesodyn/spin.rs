//! Full n-spin Metropolis dynamics, used to cross-check lumpability.

use rand::Rng;
use rand_distr::Exp1;

use super::{CompensatedSum, HittingTimeSample, LumpedDynamics, MesoState, TargetSet};
use crate::disorder::DisorderRealization;
use crate::error::{Error, Result};
use crate::landscape::ModelParams;
use crate::rng;

pub const MAX_SPINS: u64 = 1 << 16;
const PROJECTION_CHECK: u64 = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct SpinState {
    pub spins: Vec<i8>,
    /// Level index of each vertex.
    pub level: Vec<usize>,
}

impl SpinState {
    /// Vertices are laid out level by level; the first j_l of level l are up.
    pub fn from_meso(s: &MesoState, real: &DisorderRealization) -> Self {
        let mut spins = Vec::with_capacity(real.n as usize);
        let mut level = Vec::with_capacity(real.n as usize);
        for l in 0..real.k() {
            for i in 0..real.level_counts[l] {
                spins.push(if i < s.up[l] { 1 } else { -1 });
                level.push(l);
            }
        }
        SpinState { spins, level }
    }

    pub fn projection(&self, k: usize) -> Vec<u64> {
        let mut up = vec![0u64; k];
        for (s, &l) in self.spins.iter().zip(&self.level) {
            if *s > 0 {
                up[l] += 1;
            }
        }
        up
    }
}

/// sum_i J_i sigma_i.
fn coupling_field(state: &SpinState, real: &DisorderRealization) -> f64 {
    state.spins.iter().zip(&state.level).map(|(&s, &l)| real.support[l] * s as f64).sum()
}

pub fn simulate_spin_hitting_time(
    start: &SpinState,
    target: &TargetSet,
    real: &DisorderRealization,
    p: &ModelParams,
    seed: u64,
    stream: u64,
    max_steps: u64,
) -> Result<HittingTimeSample> {
    if real.n > MAX_SPINS {
        return Err(Error::InvalidInput(format!("n = {} above the spin simulator limit {MAX_SPINS}", real.n)));
    }
    let k = real.k();
    let n = real.n_f64();
    let dynamics = LumpedDynamics::new(real, p);
    let mut rng = rng::stream(seed, stream);
    let mut state = start.clone();
    let mut up = state.projection(k);
    let mut field = coupling_field(&state, real);
    let mut rates = vec![0.0; state.spins.len()];
    let mut clock = CompensatedSum::default();
    let mut steps = 0u64;
    while !target.contains(&up, &dynamics) {
        if steps >= max_steps {
            return Err(Error::Timeout { steps, time: clock.value() });
        }
        // H = -S^2/(2n) - h M, so flipping i changes H by
        // 2 J_i s_i (S - J_i s_i)/n + 2 h s_i
        let mut total = 0.0;
        for (i, r) in rates.iter_mut().enumerate() {
            let js = real.support[state.level[i]] * state.spins[i] as f64;
            let dh = 2.0 * js * (field - js) / n + 2.0 * p.h * state.spins[i] as f64;
            *r = (-p.beta * dh.max(0.0)).exp();
            total += *r;
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
        let l = state.level[choice];
        let s = state.spins[choice];
        field -= 2.0 * real.support[l] * s as f64;
        state.spins[choice] = -s;
        if s > 0 {
            up[l] -= 1;
        } else {
            up[l] += 1;
        }
        steps += 1;
        if steps % PROJECTION_CHECK == 0 {
            if state.projection(k) != up {
                return Err(Error::InvalidInput("spin state and lumped projection disagree".into()));
            }
            field = coupling_field(&state, real);
        }
    }
    Ok(HittingTimeSample { time: clock.value(), steps, seed, stream, absorbed_at: MesoState { up } })
}
