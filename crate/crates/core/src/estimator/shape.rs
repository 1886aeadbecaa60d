// Copyright 2026 The prodsketch Authors
// SPDX-License-Identifier: Apache-2.0

use crate::error::{Error, Result};

/// Target relative error and failure probability, both in (0, 1).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AccuracyParams {
    epsilon: f64,
    delta: f64,
}

impl AccuracyParams {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        let open_unit = |x: f64| x > 0.0 && x < 1.0;
        if !open_unit(epsilon) {
            return Err(Error::InvalidParams(format!("epsilon = {epsilon} is not in (0, 1)")));
        }
        if !open_unit(delta) {
            return Err(Error::InvalidParams(format!("delta = {delta} is not in (0, 1)")));
        }
        Ok(AccuracyParams { epsilon, delta })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
}

/// How the group size is chosen.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ShapeRule {
    /// `s1 = ceil(8 (3^k - 1) / eps^2)`: Chebyshev at 1/8 with `Var[Y] <= (3^k - 1) E[Y]^2`.
    #[default]
    Derived,
    /// `s1 = ceil(8 * 3^k / eps^2)`, which is the classical `72 / eps^2` at `k = 2`.
    PaperConstants,
}

/// `s1` estimators per group, `s2` groups.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BankShape {
    s1: usize,
    s2: usize,
}

impl BankShape {
    pub fn new(s1: usize, s2: usize) -> Result<Self> {
        if s1 == 0 || s2 == 0 {
            return Err(Error::InvalidConfig(format!("bank shape {s1}x{s2} has an empty side")));
        }
        if s1.checked_mul(s2).is_none() {
            return Err(Error::InvalidConfig(format!("bank shape {s1}x{s2} overflows")));
        }
        Ok(BankShape { s1, s2 })
    }

    pub fn s1(&self) -> usize {
        self.s1
    }

    pub fn s2(&self) -> usize {
        self.s2
    }

    pub fn instances(&self) -> usize {
        self.s1 * self.s2
    }
}

/// Ceiling that treats values within floating-point noise of an integer as
/// that integer, so `208 / 0.2^2` is 5200 and `2 ln(e^2)` is 4.
fn snapped_ceil(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.abs().max(1.0) {
        r
    } else {
        x.ceil()
    }
}

fn to_count(x: f64, what: &str) -> Result<usize> {
    if !x.is_finite() || x > (1u64 << 52) as f64 {
        return Err(Error::InvalidParams(format!("{what} = {x} is too large")));
    }
    Ok((x as usize).max(1))
}

pub fn derive_shape(params: &AccuracyParams, k: usize, rule: ShapeRule) -> Result<BankShape> {
    let k = i32::try_from(k).map_err(|_| Error::InvalidParams(format!("k = {k} is too large")))?;
    let three_k = 3f64.powi(k);
    let variance_factor = match rule {
        ShapeRule::Derived => three_k - 1.0,
        ShapeRule::PaperConstants => three_k,
    };
    let eps2 = params.epsilon * params.epsilon;
    let s1 = to_count(snapped_ceil(8.0 * variance_factor / eps2), "s1")?;
    let s2 = to_count(snapped_ceil(2.0 * (1.0 / params.delta).ln()), "s2")?;
    BankShape::new(s1, s2)
}
