//! Checks of the non-degeneracy hypothesis for one metastable minimum.

use serde::Serialize;

use super::{LandscapeReport, ModelParams, PointKind, QuenchedLandscape};
use crate::disorder::DisorderRealization;
use crate::kramers::{hessian_eigenvalues, saddle_rates};

#[derive(Debug, Clone, Serialize)]
pub struct HypothesisItem {
    pub item: usize,
    pub passed: bool,
    pub detail: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct HypothesisDiagnostic {
    pub items: Vec<HypothesisItem>,
    pub gate_index: Option<usize>,
    pub lower_minima: Vec<usize>,
}

impl HypothesisDiagnostic {
    pub fn all_passed(&self) -> bool {
        self.items.iter().all(|i| i.passed)
    }

    pub fn first_failure(&self) -> Option<&HypothesisItem> {
        self.items.iter().find(|i| !i.passed)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub saddle_index: usize,
    pub barrier: f64,
    pub unique: bool,
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

/// Minima strictly below the given one in free energy.
pub fn lower_minima(report: &LandscapeReport, minimum_index: usize) -> Vec<usize> {
    let f = report.points[minimum_index].free_energy;
    report.minima().filter(|(_, c)| c.free_energy < f).map(|(i, _)| i).collect()
}

/// Highest saddle on the way along K from the minimum to the nearest lower
/// minimum, on whichever side gives the lower barrier.
pub fn locate_gate(report: &LandscapeReport, minimum_index: usize) -> Option<Gate> {
    let lower = lower_minima(report, minimum_index);
    let pts = &report.points;
    let walk = |dir: isize| -> Option<Gate> {
        let mut i = minimum_index as isize + dir;
        let mut best: Option<Gate> = None;
        while i >= 0 && (i as usize) < pts.len() {
            let idx = i as usize;
            let c = &pts[idx];
            match c.kind {
                PointKind::Saddle | PointKind::Degenerate => {
                    let f = c.free_energy;
                    best = match best {
                        None => Some(Gate { saddle_index: idx, barrier: f, unique: c.kind == PointKind::Saddle }),
                        Some(b) if close(f, b.barrier) => Some(Gate { unique: false, ..b }),
                        Some(b) if f > b.barrier => {
                            Some(Gate { saddle_index: idx, barrier: f, unique: c.kind == PointKind::Saddle })
                        }
                        Some(b) => Some(b),
                    };
                }
                PointKind::Minimum if lower.contains(&idx) => return best,
                PointKind::Minimum => {}
            }
            i += dir;
        }
        None
    };
    match (walk(-1), walk(1)) {
        (None, None) => None,
        (Some(g), None) | (None, Some(g)) => Some(g),
        (Some(l), Some(r)) => {
            if close(l.barrier, r.barrier) {
                Some(Gate { unique: false, ..l })
            } else if l.barrier < r.barrier {
                Some(l)
            } else {
                Some(r)
            }
        }
    }
}

pub fn check_hypothesis(
    real: &DisorderRealization,
    p: &ModelParams,
    landscape: &QuenchedLandscape,
    minimum_index: usize,
) -> HypothesisDiagnostic {
    let report = &landscape.report;
    let mut items = Vec::with_capacity(4);
    let is_min = report.points.get(minimum_index).map(|c| c.kind) == Some(PointKind::Minimum);
    if !is_min {
        items.push(HypothesisItem {
            item: 1,
            passed: false,
            detail: format!("point {minimum_index} is not a minimum"),
            values: vec![],
        });
        return HypothesisDiagnostic { items, gate_index: None, lower_minima: vec![] };
    }
    let lower = lower_minima(report, minimum_index);
    items.push(HypothesisItem {
        item: 1,
        passed: !lower.is_empty(),
        detail: if lower.is_empty() {
            "no lower minimum: M_n(m) is empty".into()
        } else {
            format!("{} lower minima", lower.len())
        },
        values: lower.iter().map(|&i| report.points[i].free_energy).collect(),
    });
    let gate = locate_gate(report, minimum_index);

    let w = &real.empirical_weights;
    let mut eigen = Vec::new();
    let mut eigen_ok = gate.is_some();
    let mut eigen_detail = if gate.is_some() { String::from("ok") } else { String::from("no gate saddle") };
    for idx in std::iter::once(minimum_index).chain(gate.as_ref().map(|g| g.saddle_index)) {
        match hessian_eigenvalues(&report.points[idx].m, w, &real.support, p) {
            Ok(evs) => {
                for ev in evs {
                    if !(ev.abs() > 1e-9) {
                        eigen_ok = false;
                        eigen_detail = format!("eigenvalue {ev:e} at point {idx}");
                    }
                    eigen.push(ev);
                }
            }
            Err(e) => {
                eigen_ok = false;
                eigen_detail = e.to_string();
            }
        }
    }
    items.push(HypothesisItem { item: 2, passed: eigen_ok, detail: eigen_detail, values: eigen });

    let unique = gate.as_ref().map(|g| g.unique).unwrap_or(false);
    items.push(HypothesisItem {
        item: 3,
        passed: unique,
        detail: match &gate {
            None => "no gate between the minimum and M_n(m)".into(),
            Some(g) if !g.unique => "gate is not a single non-degenerate saddle".into(),
            Some(g) => format!("gate saddle at point {}", g.saddle_index),
        },
        values: gate.iter().map(|g| g.barrier).collect(),
    });

    let mut ratios = Vec::new();
    let mut distinct = true;
    if let Some(g) = &gate {
        let t = &report.points[g.saddle_index].m;
        let r = saddle_rates(t, real, p);
        ratios = (0..t.k()).map(|l| r[l] / (real.level_counts[l] as f64 * t.chi(l))).collect();
        for i in 0..ratios.len() {
            for j in 0..i {
                if (ratios[i] - ratios[j]).abs() <= 1e-9 * ratios[i].abs().max(ratios[j].abs()) {
                    distinct = false;
                }
            }
        }
    } else {
        distinct = false;
    }
    items.push(HypothesisItem {
        item: 4,
        passed: distinct,
        detail: if distinct { "saddle ratios distinct".into() } else { "saddle ratios r_l/(|A_l|(1-t_l^2)) coincide".into() },
        values: ratios,
    });
    HypothesisDiagnostic { items, gate_index: gate.map(|g| g.saddle_index), lower_minima: lower }
}
