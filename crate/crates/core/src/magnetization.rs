//! Level magnetizations with 1 - m and 1 + m carried separately.
//!
//! Minima of strongly saturated landscapes have |m_l| within 1e-60 of 1, so
//! 1 - m^2 must be produced from the field or the integer counts directly.

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MagnetizationVector {
    m: Vec<f64>,
    one_minus: Vec<f64>,
    one_plus: Vec<f64>,
}

impl Serialize for MagnetizationVector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.m.serialize(s)
    }
}

impl MagnetizationVector {
    pub fn new(m: Vec<f64>) -> Result<Self> {
        if let Some(l) = m.iter().position(|x| !(x.abs() <= 1.0)) {
            return Err(Error::InvalidInput(format!("m[{l}] = {} outside [-1,1]", m[l])));
        }
        let one_minus = m.iter().map(|x| 1.0 - x).collect();
        let one_plus = m.iter().map(|x| 1.0 + x).collect();
        Ok(MagnetizationVector { m, one_minus, one_plus })
    }

    /// m_l = tanh(y_l).
    pub fn from_fields(y: &[f64]) -> Self {
        let m = y.iter().map(|y| y.tanh()).collect();
        let one_minus = y.iter().map(|y| 2.0 / (1.0 + (2.0 * y).exp())).collect();
        let one_plus = y.iter().map(|y| 2.0 / (1.0 + (-2.0 * y).exp())).collect();
        MagnetizationVector { m, one_minus, one_plus }
    }

    /// Grid point with j_l up spins out of |A_l|.
    pub fn from_counts(up: &[u64], sizes: &[u64]) -> Self {
        let mut m = Vec::with_capacity(up.len());
        let mut one_minus = Vec::with_capacity(up.len());
        let mut one_plus = Vec::with_capacity(up.len());
        for (&j, &a) in up.iter().zip(sizes) {
            let (j, a) = (j as f64, a as f64);
            m.push((2.0 * j - a) / a);
            one_minus.push(2.0 * (a - j) / a);
            one_plus.push(2.0 * j / a);
        }
        MagnetizationVector { m, one_minus, one_plus }
    }

    pub fn k(&self) -> usize {
        self.m.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.m
    }

    pub fn get(&self, l: usize) -> f64 {
        self.m[l]
    }

    pub fn one_minus(&self, l: usize) -> f64 {
        self.one_minus[l]
    }

    pub fn one_plus(&self, l: usize) -> f64 {
        self.one_plus[l]
    }

    /// 1 - m_l^2.
    pub fn chi(&self, l: usize) -> f64 {
        self.one_minus[l] * self.one_plus[l]
    }

    /// sum_l a_l w_l m_l.
    pub fn weighted(&self, support: &[f64], weights: &[f64]) -> f64 {
        self.m.iter().zip(support).zip(weights).map(|((m, a), w)| a * w * m).sum()
    }

    pub fn ensure_interior(&self) -> Result<()> {
        match (0..self.k()).find(|&l| self.chi(l) <= 0.0) {
            Some(level) => Err(Error::Saturated { level }),
            None => Ok(()),
        }
    }
}
