mod common;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use metastab::disorder::DisorderRealization;
use metastab::kramers::predict_mean_time;
use metastab::landscape::entropy::ln_binomial;
use metastab::landscape::free_energy::energy_counts;
use metastab::landscape::{finite_n_fixed_points, ModelParams};
use metastab::oracle::{build_chain, exact_capacity, exact_mean_hitting_time, valley_weights, LumpedChain};
use metastab::Error;

fn cw(n: u64) -> DisorderRealization {
    DisorderRealization::from_counts(&[1.0], &[n]).unwrap()
}

fn mask(chain: &LumpedChain, states: &[usize]) -> Vec<bool> {
    let mut m = vec![false; chain.n_states];
    for &s in states {
        m[s] = true;
    }
    m
}

/// Dense generator solve, independent of the banded route.
fn dense_hitting_times(chain: &LumpedChain, target: &[bool]) -> Vec<f64> {
    let n = chain.n_states;
    let mut l = DMatrix::<f64>::zeros(n, n);
    let mut rhs = DVector::<f64>::zeros(n);
    for x in 0..n {
        if target[x] {
            l[(x, x)] = 1.0;
            continue;
        }
        rhs[x] = 1.0;
        for s in 0..2 * chain.k() {
            if let Some(y) = chain.neighbor(x, s) {
                let r = chain.rate(x, s);
                l[(x, x)] += r;
                if !target[y] {
                    l[(x, y)] -= r;
                }
            }
        }
    }
    l.lu().solve(&rhs).unwrap().iter().cloned().collect()
}

#[test]
fn state_and_transition_counts() {
    let p = ModelParams::new(0.7, 0.1).unwrap();
    let chain = build_chain(&cw(10), &p).unwrap();
    assert_eq!(chain.n_states, 11);
    assert_eq!(chain.transition_count(), 20);

    let real = DisorderRealization::from_counts(&[1.0, 2.0], &[6, 4]).unwrap();
    let chain = build_chain(&real, &p).unwrap();
    assert_eq!(chain.n_states, 35);
    // 6*5 edges within level 0, 4*7 within level 1, both directions
    assert_eq!(chain.transition_count(), 2 * (30 + 28));
    assert_eq!(chain.bandwidth(), 5);
}

#[test]
fn every_state_indexes_back() {
    let real = DisorderRealization::from_counts(&[1.0, 2.0, 3.0], &[3, 5, 2]).unwrap();
    let chain = build_chain(&real, &ModelParams::new(0.4, 0.0).unwrap()).unwrap();
    assert_eq!(chain.n_states, 4 * 6 * 3);
    for i in 0..chain.n_states {
        assert_eq!(chain.index_of(&chain.state_at(i)), i);
    }
}

#[test]
fn log_weights_are_gibbs_times_multiplicity() {
    let real = DisorderRealization::from_counts(&[1.0, 2.0], &[6, 4]).unwrap();
    let p = ModelParams::new(0.8, 0.2).unwrap();
    let chain = build_chain(&real, &p).unwrap();
    for i in 0..chain.n_states {
        let up = chain.state_at(i);
        let expected = -0.8 * 10.0 * energy_counts(&up, &real, &p) + ln_binomial(6, up[0]) + ln_binomial(4, up[1]);
        assert!((chain.log_weights[i] - expected).abs() < 1e-12);
    }
    assert!(chain.detailed_balance_residual() < 1e-12);
    assert!(chain.global_balance_residual() < 1e-12);
}

#[test]
fn two_state_chain_hitting_time_and_capacity() {
    let p = ModelParams::new(0.9, 0.3).unwrap();
    let chain = build_chain(&cw(1), &p).unwrap();
    let r_up = chain.rate(0, 1);
    let r_down = chain.rate(1, 0);
    // uphill is up here: n E changes by -2h - 2/n < 0, so the rate is 1
    assert_eq!(r_up, 1.0);
    let t = exact_mean_hitting_time(&chain, 0, &mask(&chain, &[1])).unwrap();
    assert!((t - 1.0 / r_up).abs() < 1e-14);
    let t = exact_mean_hitting_time(&chain, 1, &mask(&chain, &[0])).unwrap();
    assert!((t - 1.0 / r_down).abs() < 1e-12 / r_down);

    let cap = exact_capacity(&chain, &mask(&chain, &[0]), &mask(&chain, &[1])).unwrap();
    let edge = chain.log_weights[0] + r_up.ln();
    assert!((cap.log_energy - edge).abs() < 1e-12);
    assert!((cap.log_escape - edge).abs() < 1e-12);
}

#[test]
fn start_in_target_rejected() {
    let chain = build_chain(&cw(4), &ModelParams::new(0.9, 0.3).unwrap()).unwrap();
    assert!(matches!(exact_mean_hitting_time(&chain, 2, &mask(&chain, &[2])), Err(Error::InvalidInput(_))));
    assert!(exact_capacity(&chain, &mask(&chain, &[1]), &mask(&chain, &[1, 3])).is_err());
}

#[test]
fn capacity_symmetric_and_forms_agree() {
    let real = DisorderRealization::from_counts(&[1.0, 2.0], &[30, 20]).unwrap();
    let p = ModelParams::new(0.9, 0.05).unwrap();
    let chain = build_chain(&real, &p).unwrap();
    let a = chain.target_mask(|s| s == [0, 0]);
    let b = chain.target_mask(|s| s == [30, 20]);
    let ab = exact_capacity(&chain, &a, &b).unwrap();
    let ba = exact_capacity(&chain, &b, &a).unwrap();
    assert!((ab.log_value() - ba.log_value()).abs() < 1e-10);
    assert!(ab.relative_discrepancy() < 1e-8 && ba.relative_discrepancy() < 1e-8);
}

#[test]
fn capacity_forms_agree_deep_in_metastable_regime() {
    let p = ModelParams::new(1.3, 0.04).unwrap();
    for n in [100u64, 400, 800] {
        let chain = build_chain(&cw(n), &p).unwrap();
        let q = finite_n_fixed_points(&cw(n), &p, 1e-12).unwrap();
        let a = mask(&chain, &[chain.index_of(&q.snapped[0])]);
        let b = mask(&chain, &[chain.index_of(&q.snapped[2])]);
        let cap = exact_capacity(&chain, &a, &b).unwrap();
        assert!(cap.relative_discrepancy() < 1e-8, "n={n}: {}", cap.relative_discrepancy());
    }
}

#[test]
fn banded_hitting_times_match_dense_solve() {
    let real = DisorderRealization::from_counts(&[1.0, 2.0, 0.5], &[5, 4, 3]).unwrap();
    let p = ModelParams::new(0.7, 0.1).unwrap();
    let chain = build_chain(&real, &p).unwrap();
    let target = chain.target_mask(|s| s == [5, 4, 3]);
    let banded = chain.mean_hitting_times(&target).unwrap();
    let dense = dense_hitting_times(&chain, &target);
    for (x, y) in banded.iter().zip(&dense) {
        assert!((x - y).abs() < 1e-10 * y.abs().max(1.0), "{x} vs {y}");
    }
}

#[test]
fn hitting_times_keep_relative_accuracy_when_ill_conditioned() {
    let real = DisorderRealization::from_counts(&[0.2, 2.9276254568732134], &[1, 4]).unwrap();
    let chain = build_chain(&real, &ModelParams::new(2.3136778425643474, 0.0).unwrap()).unwrap();
    let target = chain.target_mask(|s| s == [1, 4]);
    let t = chain.mean_hitting_times(&target).unwrap();
    // 50-digit reference solve of the same generator
    let reference = [
        16545219584741.355,
        16545219584738.863,
        16538577861458.89,
        16534248766415.316,
        8274052824053.62,
        8271166760690.952,
        10970818329.183588,
        6641723284.753587,
        4.4905935424489725,
    ];
    for (x, y) in t.iter().zip(&reference) {
        assert!((x - y).abs() < 1e-13 * y, "{x} vs {y}");
    }
    assert_eq!(t[9], 0.0);
}

/// E_m tau_B = sum_y w(y) h(y) / cap(m, B), with h the equilibrium potential of
/// ({m}, B); replacing the numerator by the valley weight of m is the
/// approximation that the asymptotics rest on.
#[test]
fn mean_time_valley_over_capacity() {
    let p = ModelParams::new(1.3, 0.04).unwrap();
    let real = cw(200);
    let chain = build_chain(&real, &p).unwrap();
    let q = finite_n_fixed_points(&real, &p, 1e-12).unwrap();
    let valleys = valley_weights(&chain);
    assert_eq!(valleys.minima.len(), 2);
    // the snapped continuum minimum sits in the valley of the discrete one
    let m = valleys.minima[valleys.valley_of(chain.index_of(&q.snapped[0]))];
    let deep = valleys.minima[valleys.valley_of(chain.index_of(&q.snapped[2]))];
    assert!(m != deep);
    let exact = exact_mean_hitting_time(&chain, m, &mask(&chain, &[deep])).unwrap();
    let cap = exact_capacity(&chain, &mask(&chain, &[m]), &mask(&chain, &[deep])).unwrap();
    let approx = (valleys.valley_log_weights[valleys.valley_of(m)] - cap.log_value()).exp();
    assert!((approx / exact - 1.0).abs() < 0.05, "{approx} vs {exact}");
}

#[test]
fn single_minimum_gives_single_valley() {
    let chain = build_chain(&cw(100), &ModelParams::new(0.5, 0.1).unwrap()).unwrap();
    let v = valley_weights(&chain);
    assert_eq!(v.minima.len(), 1);
    assert!(v.assignment.iter().all(|&a| a == 0));
}

#[test]
fn prediction_ratio_tends_to_one() {
    let p = ModelParams::new(1.3, 0.04).unwrap();
    let mut last = f64::INFINITY;
    for n in [50u64, 100, 200] {
        let real = cw(n);
        let q = finite_n_fixed_points(&real, &p, 1e-12).unwrap();
        let pred = predict_mean_time(&q, 0, &real, &p).unwrap();
        let chain = build_chain(&real, &p).unwrap();
        let target = mask(&chain, &[chain.index_of(&q.snapped[2])]);
        let exact = exact_mean_hitting_time(&chain, chain.index_of(&q.snapped[0]), &target).unwrap();
        let gap = (pred.mean_time / exact - 1.0).abs();
        assert!(gap < last, "n={n}: gap {gap} after {last}");
        last = gap;
    }
    assert!(last < 0.2);
}

#[test]
fn edge_list_lines() {
    let chain = build_chain(&cw(10), &ModelParams::new(0.7, 0.1).unwrap()).unwrap();
    let mut buf = Vec::new();
    chain.write_edge_list(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 21);
    assert!(lines[0].starts_with('#'));
    let fields: Vec<&str> = lines[1].split(' ').collect();
    assert_eq!(fields.len(), 5);
    let rate: f64 = fields[2].parse().unwrap();
    assert_eq!(rate, chain.rate(fields[0].parse().unwrap(), 1));
}

#[test]
fn oversized_state_space_rejected() {
    let real = DisorderRealization::from_counts(&[1.0, 2.0, 3.0], &[1000, 1000, 1000]).unwrap();
    let err = build_chain(&real, &ModelParams::new(0.5, 0.0).unwrap()).unwrap_err();
    assert!(matches!(err, Error::StateSpaceTooLarge { .. }));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn balance_holds_for_random_two_level_chains(
        a0 in 0.2f64..2.0, a1 in 0.2f64..2.0, c0 in 1u64..12, c1 in 1u64..12,
        beta in 0.05f64..1.0, h in 0.0f64..1.0,
    ) {
        prop_assume!((a0 - a1).abs() > 1e-6);
        let real = DisorderRealization::from_counts(&[a0, a1], &[c0, c1]).unwrap();
        let chain = build_chain(&real, &ModelParams::new(beta, h).unwrap()).unwrap();
        prop_assert!(chain.detailed_balance_residual() < 1e-10);
        // dense LU loses digits as the chain becomes metastable, so the
        // parameter box stays where it is well conditioned
        let target = chain.target_mask(|s| s == [c0, c1]);
        let banded = chain.mean_hitting_times(&target).unwrap();
        let dense = dense_hitting_times(&chain, &target);
        for (x, y) in banded.iter().zip(&dense) {
            prop_assert!((x - y).abs() < 1e-8 * y.abs().max(1.0));
        }
    }
}

