// Copyright 2026 The prodsketch Authors
// SPDX-License-Identifier: Apache-2.0

//! Exact `E[Y]` and `Var[Y]` over every seed tuple of a small field.
//!
//! With `w`-bit fields each dimension has `2^(4w)` seeds, so a `k`-dimensional
//! estimator has `2^(4wk)` equally likely seed tuples. For each tuple the
//! oracle evaluates `S = sum_p V_p H(p)` in integer arithmetic, where the
//! vector is `v = V / scale`, and accumulates `S^2` and `S^4`. Moments are
//! formed with exact rationals at the end.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;

use super::table::FrequencyTable;
use crate::error::{Error, Result};
use crate::field_hash::{FieldSpec, SignHash, SignHashSeed};

/// Hard cap on enumerated seed tuples.
pub const ENUMERATION_BUDGET: u64 = 1 << 24;

/// Cap on the number of coordinates of a dense vector.
pub const DENSE_BUDGET: u64 = 1 << 24;

/// A vector over `[n]^k` stored as integers over a common positive
/// denominator. Coordinate `p` lives at `p_0 + n p_1 + n^2 p_2 + ...`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScaledVector {
    k: usize,
    n: u64,
    values: Vec<i128>,
    scale: BigInt,
}

fn dense_len(k: usize, n: u64) -> Result<usize> {
    u32::try_from(k)
        .ok()
        .and_then(|k| n.checked_pow(k))
        .filter(|&len| len <= DENSE_BUDGET)
        .map(|len| len as usize)
        .ok_or_else(|| Error::InvalidConfig(format!("[{n}]^{k} is too large for a dense vector")))
}

fn decode(mut flat: usize, n: u64, k: usize) -> Vec<u64> {
    (0..k)
        .map(|_| {
            let x = flat as u64 % n;
            flat /= n as usize;
            x
        })
        .collect()
}

fn to_i128(x: &BigInt) -> Result<i128> {
    x.to_i128().ok_or(Error::CounterOverflow)
}

impl ScaledVector {
    /// The independence vector of a stream, scaled by `m^k`.
    pub fn from_table(table: &FrequencyTable) -> Result<Self> {
        if table.m() == 0 {
            return Err(Error::EmptyStream);
        }
        let (k, n) = (table.k(), table.n());
        let len = dense_len(k, n)?;
        let values = (0..len)
            .map(|flat| to_i128(&table.scaled_deviation(&decode(flat, n, k))))
            .collect::<Result<_>>()?;
        Ok(ScaledVector { k, n, values, scale: num_traits::pow(BigInt::from(table.m()), k) })
    }

    /// Arbitrary rational vector in flat order.
    pub fn from_rationals(k: usize, n: u64, coords: &[BigRational]) -> Result<Self> {
        let len = dense_len(k, n)?;
        if coords.len() != len {
            return Err(Error::ArityMismatch { expected: len, got: coords.len() });
        }
        let scale = coords.iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let values = coords
            .iter()
            .map(|c| to_i128(&(c.numer() * (&scale / c.denom()))))
            .collect::<Result<_>>()?;
        Ok(ScaledVector { k, n, values, scale })
    }

    /// Integer vector in flat order.
    pub fn from_integers(k: usize, n: u64, coords: Vec<i128>) -> Result<Self> {
        let len = dense_len(k, n)?;
        if coords.len() != len {
            return Err(Error::ArityMismatch { expected: len, got: coords.len() });
        }
        Ok(ScaledVector { k, n, values: coords, scale: BigInt::one() })
    }

    /// All coordinates equal to one.
    pub fn uniform(k: usize, n: u64) -> Result<Self> {
        let len = dense_len(k, n)?;
        ScaledVector::from_integers(k, n, vec![1; len])
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn coord(&self, p: &[u64]) -> BigRational {
        let flat = p.iter().rev().fold(0u64, |acc, &x| acc * self.n + x) as usize;
        BigRational::new(self.values[flat].into(), self.scale.clone())
    }

    /// `sum_p v_p^2`.
    pub fn norm_squared(&self) -> BigRational {
        let sum: BigInt = self.values.iter().map(|&v| BigInt::from(v) * BigInt::from(v)).sum();
        BigRational::new(sum, &self.scale * &self.scale)
    }

    /// `Y = (sum_p v_p H(p))^2` for one choice of hashes, by direct summation
    /// over every coordinate.
    pub fn y_for_hashes(&self, hashes: &[SignHash]) -> Result<BigRational> {
        if hashes.len() != self.k {
            return Err(Error::ArityMismatch { expected: self.k, got: hashes.len() });
        }
        let mut sum = BigInt::zero();
        for (flat, &v) in self.values.iter().enumerate() {
            let p = decode(flat, self.n, self.k);
            let mut sign = 1i64;
            for (h, &x) in hashes.iter().zip(&p) {
                sign *= h.eval(x)?;
            }
            sum += BigInt::from(v) * sign;
        }
        let s = BigRational::new(sum, self.scale.clone());
        Ok(&s * &s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactMoments {
    pub expectation: BigRational,
    pub variance: BigRational,
    /// `variance / expectation^2`; `None` when the expectation is zero.
    pub ratio: Option<BigRational>,
    pub seed_tuples: u64,
}

/// Exact sum that spills from `u128` into a big integer on overflow.
#[derive(Clone, Debug, Default)]
struct WideSum {
    small: u128,
    big: BigUint,
}

impl WideSum {
    fn add_u128(&mut self, x: u128) {
        match self.small.checked_add(x) {
            Some(s) => self.small = s,
            None => {
                self.big += BigUint::from(self.small) + BigUint::from(x);
                self.small = 0;
            }
        }
    }

    fn add_square(&mut self, y: u128) {
        match y.checked_mul(y) {
            Some(sq) => self.add_u128(sq),
            None => self.big += BigUint::from(y) * BigUint::from(y),
        }
    }

    fn merge(mut self, other: WideSum) -> WideSum {
        self.big += other.big;
        self.add_u128(other.small);
        self
    }

    fn total(&self) -> BigInt {
        BigInt::from(&self.big + BigUint::from(self.small))
    }
}

#[derive(Clone, Debug, Default)]
struct MomentSums {
    sum_y: WideSum,
    sum_y2: WideSum,
}

impl MomentSums {
    fn push(&mut self, s: i128) {
        let y = s.unsigned_abs().checked_mul(s.unsigned_abs());
        match y {
            Some(y) => {
                self.sum_y.add_u128(y);
                self.sum_y2.add_square(y);
            }
            None => {
                let y = BigUint::from(s.unsigned_abs()).pow(2u32);
                self.sum_y2.big += &y * &y;
                self.sum_y.big += y;
            }
        }
    }

    fn merge(self, other: MomentSums) -> MomentSums {
        MomentSums { sum_y: self.sum_y.merge(other.sum_y), sum_y2: self.sum_y2.merge(other.sum_y2) }
    }
}

/// `out[j] = sum_x sign[x] * values[x + n j]`: contracts the lowest dimension.
fn contract(values: &[i128], signs: &[i8]) -> Result<Vec<i128>> {
    values
        .chunks(signs.len())
        .map(|row| {
            row.iter().zip(signs).try_fold(0i128, |acc, (&v, &s)| {
                if s > 0 {
                    acc.checked_add(v)
                } else {
                    acc.checked_sub(v)
                }
                .ok_or(Error::CounterOverflow)
            })
        })
        .collect()
}

fn enumerate(values: &[i128], families: &[Vec<i8>], remaining: usize, sums: &mut MomentSums) -> Result<()> {
    if remaining == 0 {
        debug_assert_eq!(values.len(), 1);
        sums.push(values[0]);
        return Ok(());
    }
    for signs in families {
        let reduced = contract(values, signs)?;
        enumerate(&reduced, families, remaining - 1, sums)?;
    }
    Ok(())
}

/// Number of seed tuples an exhaustive run over `spec` at dimension `k`
/// would visit.
pub fn seed_tuple_count(spec: &FieldSpec, k: usize) -> u128 {
    let per_dim = 4 * spec.width() as u128;
    if per_dim * k as u128 >= 127 {
        u128::MAX
    } else {
        1u128 << (per_dim * k as u128)
    }
}

/// Sign vectors over `[0, n)` for every seed of the family, in seed-index order.
fn sign_family(spec: &FieldSpec, n: u64) -> Result<Vec<Vec<i8>>> {
    let seeds = 1u64 << (4 * spec.width());
    (0..seeds)
        .map(|index| {
            let h = SignHash::new(*spec, SignHashSeed::from_index(spec, index))?;
            (0..n).map(|x| h.eval(x).map(|s| s as i8)).collect()
        })
        .collect()
}

pub fn exhaustive_moments(vector: &ScaledVector, spec: &FieldSpec) -> Result<ExactMoments> {
    if spec.width() < 64 && vector.n > 1u64 << spec.width() {
        return Err(Error::DomainTooLarge { n: vector.n, width: spec.width() });
    }
    let tuples = seed_tuple_count(spec, vector.k);
    if tuples > ENUMERATION_BUDGET as u128 {
        return Err(Error::EnumerationBudget { tuples, cap: ENUMERATION_BUDGET });
    }
    let families = sign_family(spec, vector.n)?;

    // Split on the first dimension's seed; the exact reduction makes the
    // result independent of how rayon partitions the work.
    let sums = families
        .par_iter()
        .map(|signs| {
            let mut sums = MomentSums::default();
            let reduced = contract(&vector.values, signs)?;
            enumerate(&reduced, &families, vector.k - 1, &mut sums)?;
            Ok::<_, Error>(sums)
        })
        .try_reduce(MomentSums::default, |a, b| Ok(a.merge(b)))?;

    let count = BigInt::from(tuples);
    let scale2 = &vector.scale * &vector.scale;
    let expectation = BigRational::new(sums.sum_y.total(), &count * &scale2);
    let second = BigRational::new(sums.sum_y2.total(), &count * &scale2 * &scale2);
    let variance = second - &expectation * &expectation;
    let ratio = (!expectation.is_zero()).then(|| &variance / (&expectation * &expectation));
    Ok(ExactMoments { expectation, variance, ratio, seed_tuples: tuples as u64 })
}

/// Moments of the independence estimator on a stream.
pub fn exhaustive_moments_for_stream(table: &FrequencyTable, spec: &FieldSpec) -> Result<ExactMoments> {
    exhaustive_moments(&ScaledVector::from_table(table)?, spec)
}
