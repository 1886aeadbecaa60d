// Copyright 2026 The prodsketch Authors
// SPDX-License-Identifier: Apache-2.0

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use crate::error::{Error, Result};

/// Exact joint and marginal counts of a tuple stream. The joint map is
/// sparse; the marginals are dense arrays of length `n`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FrequencyTable {
    k: usize,
    n: u64,
    joint: HashMap<Vec<u64>, u64>,
    marginals: Vec<Vec<u64>>,
    m: u64,
}

impl FrequencyTable {
    pub fn new(k: usize, n: u64) -> Result<Self> {
        if k == 0 || n == 0 {
            return Err(Error::InvalidConfig("frequency table needs k >= 1 and n >= 1".into()));
        }
        let len = usize::try_from(n).map_err(|_| Error::InvalidConfig(format!("n = {n} is too large")))?;
        Ok(FrequencyTable { k, n, joint: HashMap::new(), marginals: vec![vec![0; len]; k], m: 0 })
    }

    pub fn from_stream<'a, I>(k: usize, n: u64, stream: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [u64]>,
    {
        let mut table = FrequencyTable::new(k, n)?;
        for a in stream {
            table.insert(a)?;
        }
        Ok(table)
    }

    pub fn insert(&mut self, a: &[u64]) -> Result<()> {
        self.insert_count(a, 1)
    }

    pub fn insert_count(&mut self, a: &[u64], count: u64) -> Result<()> {
        if a.len() != self.k {
            return Err(Error::ArityMismatch { expected: self.k, got: a.len() });
        }
        if let Some(dim) = a.iter().position(|&x| x >= self.n) {
            return Err(Error::SymbolOutOfRange { dim, symbol: a[dim], n: self.n });
        }
        if count == 0 {
            return Ok(());
        }
        *self.joint.entry(a.to_vec()).or_insert(0) += count;
        for (marginal, &x) in self.marginals.iter_mut().zip(a) {
            marginal[x as usize] += count;
        }
        self.m += count;
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn distinct(&self) -> usize {
        self.joint.len()
    }

    pub fn joint_count(&self, a: &[u64]) -> u64 {
        self.joint.get(a).copied().unwrap_or(0)
    }

    pub fn joint(&self) -> impl Iterator<Item = (&[u64], u64)> {
        self.joint.iter().map(|(t, &c)| (&t[..], c))
    }

    pub fn marginal(&self, dim: usize) -> &[u64] {
        &self.marginals[dim]
    }

    /// `prod_i f_i(a_i)`.
    pub fn marginal_product(&self, a: &[u64]) -> BigInt {
        self.marginals
            .iter()
            .zip(a)
            .map(|(marginal, &x)| BigInt::from(marginal[x as usize]))
            .product()
    }

    /// `v_a * m^k = f(a) m^(k-1) - prod_i f_i(a_i)`.
    pub fn scaled_deviation(&self, a: &[u64]) -> BigInt {
        let m = BigInt::from(self.m);
        BigInt::from(self.joint_count(a)) * num_traits::pow(m, self.k - 1) - self.marginal_product(a)
    }
}

/// Squared distance between the empirical joint distribution and the product
/// of its marginals, exactly.
///
/// Scaled by `m^(2k)` the sum over all of `[n]^k` splits into the support of
/// the joint plus the tuples never seen; the latter only carry the product
/// term, whose full sum factorizes as `prod_i sum_x f_i(x)^2`. Only the
/// support is iterated.
pub fn exact_l2sq(table: &FrequencyTable) -> Result<BigRational> {
    if table.m == 0 {
        return Err(Error::EmptyStream);
    }
    let mut total: BigInt = table
        .marginals
        .iter()
        .map(|marginal| marginal.iter().map(|&f| BigInt::from(f) * BigInt::from(f)).sum::<BigInt>())
        .product();
    for (a, _) in table.joint() {
        let deviation = table.scaled_deviation(a);
        let product = table.marginal_product(a);
        total += &deviation * &deviation - &product * &product;
    }
    let scale = num_traits::pow(BigInt::from(table.m), 2 * table.k);
    Ok(BigRational::new(total, scale))
}

pub(crate) fn rational_sqrt_f64(x: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    if x.is_zero() {
        return 0.0;
    }
    x.to_f64().map(f64::sqrt).unwrap_or(f64::NAN)
}
