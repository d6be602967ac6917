//! Exact quantities on the fully enumerated lumped chain: mean hitting times,
//! capacities and valley weights. Gibbs weights are kept as logs of
//! exp(-beta n F_n); the partition function is never formed.

pub mod banded;

use std::io::Write;

use rayon::prelude::*;

use crate::disorder::DisorderRealization;
use crate::error::{Error, Result};
use crate::landscape::entropy::ln_binomial;
use crate::landscape::free_energy::energy_counts;
use crate::landscape::ModelParams;
use crate::mesodyn::LumpedDynamics;
use banded::BandMatrix;

pub const MAX_STATES: usize = 1_000_000;

fn log_sum_exp<I: IntoIterator<Item = f64>>(terms: I) -> f64 {
    let v: Vec<f64> = terms.into_iter().collect();
    let top = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return top;
    }
    top + v.iter().map(|x| (x - top).exp()).sum::<f64>().ln()
}

#[derive(Debug, Clone)]
pub struct LumpedChain {
    pub real: DisorderRealization,
    pub p: ModelParams,
    pub sizes: Vec<u64>,
    /// Mixed-radix strides; the largest level varies slowest.
    pub strides: Vec<usize>,
    pub n_states: usize,
    pub log_weights: Vec<f64>,
    /// 2k rates per state in the order (l=0,-), (l=0,+), (l=1,-), ...
    pub rates: Vec<f64>,
}

pub fn build_chain(real: &DisorderRealization, p: &ModelParams) -> Result<LumpedChain> {
    real.ensure_nonempty()?;
    let states: u128 = real.level_counts.iter().map(|&a| a as u128 + 1).product();
    if states > MAX_STATES as u128 {
        return Err(Error::StateSpaceTooLarge { states, cap: MAX_STATES });
    }
    let n_states = states as usize;
    let k = real.k();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by_key(|&l| (real.level_counts[l], l));
    let mut strides = vec![0usize; k];
    let mut s = 1usize;
    for &l in &order {
        strides[l] = s;
        s *= real.level_counts[l] as usize + 1;
    }
    let mut chain = LumpedChain {
        real: real.clone(),
        p: *p,
        sizes: real.level_counts.clone(),
        strides,
        n_states,
        log_weights: vec![0.0; n_states],
        rates: vec![0.0; n_states * 2 * k],
    };
    let dynamics = LumpedDynamics::new(real, p);
    let bn = p.beta * real.n_f64();
    let strides = chain.strides.clone();
    let sizes = chain.sizes.clone();
    chain
        .rates
        .par_chunks_mut(2 * k)
        .zip(chain.log_weights.par_iter_mut())
        .enumerate()
        .for_each(|(idx, (rates, lw))| {
            let up: Vec<u64> = (0..k).map(|l| ((idx / strides[l]) % (sizes[l] as usize + 1)) as u64).collect();
            let entropy: f64 = up.iter().zip(&sizes).map(|(&j, &a)| ln_binomial(a, j)).sum();
            *lw = -bn * energy_counts(&up, real, p) + entropy;
            dynamics.rates_into(&up, rates);
        });
    Ok(chain)
}

impl LumpedChain {
    pub fn k(&self) -> usize {
        self.sizes.len()
    }

    pub fn bandwidth(&self) -> usize {
        self.strides.iter().cloned().max().unwrap_or(1)
    }

    pub fn index_of(&self, up: &[u64]) -> usize {
        up.iter().zip(&self.strides).map(|(&j, &s)| j as usize * s).sum()
    }

    pub fn state_at(&self, idx: usize) -> Vec<u64> {
        (0..self.k())
            .map(|l| ((idx / self.strides[l]) % (self.sizes[l] as usize + 1)) as u64)
            .collect()
    }

    #[inline]
    pub fn rate(&self, idx: usize, slot: usize) -> f64 {
        self.rates[idx * 2 * self.k() + slot]
    }

    /// Neighbor reached through rate slot `slot`, if it exists.
    #[inline]
    pub fn neighbor(&self, idx: usize, slot: usize) -> Option<usize> {
        let l = slot / 2;
        let j = (idx / self.strides[l]) % (self.sizes[l] as usize + 1);
        if slot % 2 == 0 {
            (j > 0).then(|| idx - self.strides[l])
        } else {
            (j < self.sizes[l] as usize).then(|| idx + self.strides[l])
        }
    }

    pub fn exit_rate(&self, idx: usize) -> f64 {
        (0..2 * self.k()).map(|s| self.rate(idx, s)).sum()
    }

    pub fn transition_count(&self) -> usize {
        (0..self.n_states)
            .map(|i| (0..2 * self.k()).filter(|&s| self.neighbor(i, s).is_some() && self.rate(i, s) > 0.0).count())
            .sum()
    }

    /// max over edges of |log(w_x r_xy) - log(w_y r_yx)|.
    pub fn detailed_balance_residual(&self) -> f64 {
        (0..self.n_states)
            .into_par_iter()
            .map(|x| {
                let mut worst: f64 = 0.0;
                for l in 0..self.k() {
                    let fwd = 2 * l + 1;
                    if let Some(y) = self.neighbor(x, fwd) {
                        let a = self.log_weights[x] + self.rate(x, fwd).ln();
                        let b = self.log_weights[y] + self.rate(y, 2 * l).ln();
                        // an underflowed rate makes the edge unverifiable
                        let d = if a.is_finite() && b.is_finite() { (a - b).abs() } else { f64::INFINITY };
                        worst = worst.max(d);
                    }
                }
                worst
            })
            .reduce(|| 0.0, f64::max)
    }

    /// max over states of |log(inflow) - log(outflow)| under the weights.
    pub fn global_balance_residual(&self) -> f64 {
        (0..self.n_states)
            .into_par_iter()
            .map(|y| {
                let inflow = log_sum_exp((0..2 * self.k()).filter_map(|s| {
                    let x = self.neighbor(y, s)?;
                    // the reverse slot flips the direction bit
                    Some(self.log_weights[x] + self.rate(x, s ^ 1).ln())
                }));
                let outflow = self.log_weights[y] + self.exit_rate(y).ln();
                let d = (inflow - outflow).abs();
                if d.is_nan() { f64::INFINITY } else { d }
            })
            .reduce(|| 0.0, f64::max)
    }

    /// -L restricted to rows outside `fixed`; fixed rows are identity rows and
    /// their columns are dropped from the free rows. Also returns the row sums,
    /// i.e. each free row's rate into the fixed set.
    fn restricted_generator(&self, fixed: &[bool]) -> (BandMatrix, Vec<f64>) {
        let mut m = BandMatrix::zeros(self.n_states, self.bandwidth());
        let mut excess = vec![0.0; self.n_states];
        for x in 0..self.n_states {
            if fixed[x] {
                m.set(x, x, 1.0);
                excess[x] = 1.0;
                continue;
            }
            m.set(x, x, self.exit_rate(x));
            for s in 0..2 * self.k() {
                if let Some(y) = self.neighbor(x, s) {
                    if fixed[y] {
                        excess[x] += self.rate(x, s);
                    } else {
                        m.add(x, y, -self.rate(x, s));
                    }
                }
            }
        }
        (m, excess)
    }

    fn apply_restricted(&self, fixed: &[bool], v: &[f64]) -> Vec<f64> {
        (0..self.n_states)
            .map(|x| {
                if fixed[x] {
                    return v[x];
                }
                let mut s = self.exit_rate(x) * v[x];
                for slot in 0..2 * self.k() {
                    if let Some(y) = self.neighbor(x, slot) {
                        if !fixed[y] {
                            s -= self.rate(x, slot) * v[y];
                        }
                    }
                }
                s
            })
            .collect()
    }

    /// Solves the restricted system for each nonnegative right-hand side;
    /// returns the solutions and the worst normwise relative residual. No
    /// refinement: a correction solved from a signed residual would reintroduce
    /// absolute errors into the small entries.
    fn solve_restricted(&self, fixed: &[bool], rhs: &[&[f64]]) -> Result<(Vec<Vec<f64>>, f64)> {
        let (m, excess) = self.restricted_generator(fixed);
        let lu = m.factorize_m_matrix(&excess)?;
        let norm_m = (0..self.n_states).map(|i| if fixed[i] { 1.0 } else { 2.0 * self.exit_rate(i) }).fold(0.0, f64::max);
        let mut worst: f64 = 0.0;
        let mut out = Vec::with_capacity(rhs.len());
        for b in rhs {
            let x = lu.solve(b);
            let ax = self.apply_restricted(fixed, &x);
            let res = ax.iter().zip(b.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let norm_x = x.iter().map(|v| v.abs()).fold(0.0, f64::max);
            let norm_b = b.iter().map(|v| v.abs()).fold(0.0, f64::max);
            worst = worst.max(res / (norm_m * norm_x + norm_b));
            out.push(x);
        }
        Ok((out, worst))
    }

    pub fn mean_hitting_times(&self, target: &[bool]) -> Result<Vec<f64>> {
        if !target.iter().any(|&t| t) {
            return Err(Error::InvalidInput("empty target set".into()));
        }
        let rhs: Vec<f64> = target.iter().map(|&t| if t { 0.0 } else { 1.0 }).collect();
        let (mut w, residual) = self.solve_restricted(target, &[&rhs])?;
        let w = w.pop().expect("one solution");
        if !(residual < 1e-8) {
            return Err(Error::Residual { residual });
        }
        if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Singular("target unreachable from some state".into()));
        }
        Ok(w)
    }

    pub fn target_mask<F: Fn(&[u64]) -> bool>(&self, pred: F) -> Vec<bool> {
        (0..self.n_states).map(|i| pred(&self.state_at(i))).collect()
    }

    pub fn write_edge_list<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "# i j rate log_weight_i log_weight_j")?;
        for x in 0..self.n_states {
            for s in 0..2 * self.k() {
                if let Some(y) = self.neighbor(x, s) {
                    let r = self.rate(x, s);
                    if r > 0.0 {
                        writeln!(out, "{x} {y} {r:e} {:e} {:e}", self.log_weights[x], self.log_weights[y])?;
                    }
                }
            }
        }
        Ok(())
    }
}

pub fn exact_mean_hitting_time(chain: &LumpedChain, start: usize, target: &[bool]) -> Result<f64> {
    if target[start] {
        return Err(Error::InvalidInput("start lies in the target".into()));
    }
    Ok(chain.mean_hitting_times(target)?[start])
}

#[derive(Debug, Clone, Copy)]
pub struct Capacity {
    /// log of the Dirichlet energy of the equilibrium potential.
    pub log_energy: f64,
    /// log of sum_{x in A} w(x) sum_y r(x,y) P_y(hit B before A).
    pub log_escape: f64,
    pub residual: f64,
}

impl Capacity {
    pub fn log_value(&self) -> f64 {
        self.log_energy
    }

    pub fn relative_discrepancy(&self) -> f64 {
        ((self.log_energy - self.log_escape).exp() - 1.0).abs()
    }
}

/// Unnormalized capacity between disjoint sets A and B.
///
/// The equilibrium potential is solved twice, as g = P(hit B before A) and as
/// h = 1 - g, from the same factorization. Each is accurate in relative terms
/// where it is small, so every edge difference is taken from whichever of the
/// two is smaller there; otherwise rounding near the deeper set is amplified
/// by its Gibbs weight.
pub fn exact_capacity(chain: &LumpedChain, a: &[bool], b: &[bool]) -> Result<Capacity> {
    if !a.iter().any(|&x| x) || !b.iter().any(|&x| x) {
        return Err(Error::InvalidInput("capacity sets must be nonempty".into()));
    }
    if a.iter().zip(b).any(|(&x, &y)| x && y) {
        return Err(Error::InvalidInput("capacity sets must be disjoint".into()));
    }
    let fixed: Vec<bool> = a.iter().zip(b).map(|(&x, &y)| x || y).collect();
    let boundary_rhs = |one: &[bool]| -> Vec<f64> {
        (0..chain.n_states)
            .map(|x| {
                if fixed[x] {
                    if one[x] { 1.0 } else { 0.0 }
                } else {
                    (0..2 * chain.k())
                        .filter_map(|s| chain.neighbor(x, s).filter(|&y| one[y]).map(|_| chain.rate(x, s)))
                        .sum()
                }
            })
            .collect()
    };
    let rhs_g = boundary_rhs(b);
    let rhs_h = boundary_rhs(a);
    let (mut sol, residual) = chain.solve_restricted(&fixed, &[&rhs_g, &rhs_h])?;
    if !(residual < 1e-8) {
        return Err(Error::Residual { residual });
    }
    let h = sol.pop().expect("two solutions");
    let g = sol.pop().expect("two solutions");
    let mut energy_terms = Vec::new();
    let mut escape_terms = Vec::new();
    for x in 0..chain.n_states {
        for s in 0..2 * chain.k() {
            let Some(y) = chain.neighbor(x, s) else { continue };
            let r = chain.rate(x, s);
            if r <= 0.0 {
                continue;
            }
            if s % 2 == 1 {
                let d = if g[x] + g[y] <= h[x] + h[y] { g[x] - g[y] } else { h[y] - h[x] };
                if d != 0.0 {
                    energy_terms.push(chain.log_weights[x] + r.ln() + 2.0 * d.abs().ln());
                }
            }
            if a[x] && g[y] > 0.0 {
                escape_terms.push(chain.log_weights[x] + r.ln() + g[y].ln());
            }
        }
    }
    Ok(Capacity { log_energy: log_sum_exp(energy_terms), log_escape: log_sum_exp(escape_terms), residual })
}

#[derive(Debug, Clone)]
pub struct ValleyDecomposition {
    /// State indices of the discrete local minima, ascending.
    pub minima: Vec<usize>,
    /// For each state, the position in `minima` of its attracting minimum.
    pub assignment: Vec<usize>,
    pub valley_log_weights: Vec<f64>,
}

impl ValleyDecomposition {
    pub fn valley_of(&self, state: usize) -> usize {
        self.assignment[state]
    }
}

/// Steepest-descent watershed on F_n: from each state move to the neighbor of
/// strictly lowest F_n, ties to the lowest level and then the down move.
pub fn valley_weights(chain: &LumpedChain) -> ValleyDecomposition {
    let lw = &chain.log_weights;
    let descent: Vec<usize> = (0..chain.n_states)
        .into_par_iter()
        .map(|x| {
            let mut best = x;
            for s in 0..2 * chain.k() {
                if let Some(y) = chain.neighbor(x, s) {
                    if lw[y] > lw[best] {
                        best = y;
                    }
                }
            }
            best
        })
        .collect();
    let minima: Vec<usize> = (0..chain.n_states).filter(|&x| descent[x] == x).collect();
    let mut root = vec![usize::MAX; chain.n_states];
    for &m in &minima {
        root[m] = m;
    }
    let mut path = Vec::new();
    for x in 0..chain.n_states {
        let mut y = x;
        while root[y] == usize::MAX {
            path.push(y);
            y = descent[y];
        }
        let r = root[y];
        for z in path.drain(..) {
            root[z] = r;
        }
    }
    let position = |m: usize| minima.binary_search(&m).expect("root is a minimum");
    let assignment: Vec<usize> = root.iter().map(|&r| position(r)).collect();
    let mut members: Vec<Vec<f64>> = vec![Vec::new(); minima.len()];
    for x in 0..chain.n_states {
        members[assignment[x]].push(lw[x]);
    }
    let valley_log_weights = members.into_iter().map(log_sum_exp).collect();
    ValleyDecomposition { minima, assignment, valley_log_weights }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_and_transitions() {
        let p = ModelParams::new(1.1, 0.1).unwrap();
        let real = DisorderRealization::from_counts(&[1.0], &[10]).unwrap();
        let chain = build_chain(&real, &p).unwrap();
        assert_eq!(chain.n_states, 11);
        assert_eq!(chain.transition_count(), 20);
        let real = DisorderRealization::from_counts(&[1.0, 2.0], &[6, 4]).unwrap();
        let chain = build_chain(&real, &p).unwrap();
        assert_eq!(chain.n_states, 35);
        assert!(chain.detailed_balance_residual() < 1e-12);
        for i in 0..chain.n_states {
            assert_eq!(chain.index_of(&chain.state_at(i)), i);
        }
        let big = DisorderRealization::from_counts(&[1.0, 2.0], &[2000, 2000]).unwrap();
        assert!(matches!(build_chain(&big, &p), Err(Error::StateSpaceTooLarge { .. })));
    }

    #[test]
    fn two_state_chain() {
        let p = ModelParams::new(0.9, 0.3).unwrap();
        let real = DisorderRealization::from_counts(&[1.0], &[1]).unwrap();
        let chain = build_chain(&real, &p).unwrap();
        let r = chain.rate(0, 1);
        let w = exact_mean_hitting_time(&chain, 0, &[false, true]).unwrap();
        assert!((w - 1.0 / r).abs() < 1e-14 / r);
        let cap = exact_capacity(&chain, &[true, false], &[false, true]).unwrap();
        let expected = chain.log_weights[0] + r.ln();
        assert!((cap.log_energy - expected).abs() < 1e-14);
        assert!((cap.log_escape - expected).abs() < 1e-14);
    }

    #[test]
    fn single_minimum_single_valley() {
        let p = ModelParams::new(0.5, 0.2).unwrap();
        let real = DisorderRealization::from_counts(&[1.0, 0.5], &[7, 5]).unwrap();
        let chain = build_chain(&real, &p).unwrap();
        let v = valley_weights(&chain);
        assert_eq!(v.minima.len(), 1);
        assert!(v.assignment.iter().all(|&a| a == 0));
        let total = log_sum_exp(chain.log_weights.iter().cloned());
        assert!((v.valley_log_weights[0] - total).abs() < 1e-12);
    }
}
