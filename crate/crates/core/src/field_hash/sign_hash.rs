// Copyright 2026 The prodsketch Authors
// SPDX-License-Identifier: Apache-2.0

use super::derive::derive_word;
use super::field::{FieldElement, FieldSpec};
use crate::error::{Error, Result};

/// Coefficients of `c3 x^3 + c2 x^2 + c1 x + c0`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct SignHashSeed {
    pub coeffs: [FieldElement; 4],
}

impl SignHashSeed {
    pub const fn new(c0: FieldElement, c1: FieldElement, c2: FieldElement, c3: FieldElement) -> Self {
        SignHashSeed { coeffs: [c0, c1, c2, c3] }
    }

    pub fn from_bits(bits: [u64; 4]) -> Self {
        SignHashSeed { coeffs: bits.map(FieldElement::new) }
    }

    /// The seed with index `index` in `0..2^(4w)`: coefficient `l` is the
    /// `l`-th `w`-bit digit of `index`. Used for exhaustive enumeration.
    pub fn from_index(spec: &FieldSpec, index: u64) -> Self {
        let w = spec.width();
        debug_assert!(4 * w <= 64);
        let mask = spec.mask();
        let digit = |l: u32| FieldElement::new((index >> (l * w)) & mask);
        SignHashSeed::new(digit(0), digit(1), digit(2), digit(3))
    }

    /// Seed for hash `slot` expanded from `key`; see [`super::derive`].
    pub fn derive(spec: &FieldSpec, key: u64, slot: u64) -> Self {
        let mask = spec.mask();
        let word = |l: u64| FieldElement::new(derive_word(key, 4 * slot + l) & mask);
        SignHashSeed::new(word(0), word(1), word(2), word(3))
    }
}

/// A member of the 4-wise independent family `[0, 2^w) -> {-1, +1}`:
/// the low bit of a degree-3 polynomial over GF(2^w), mapped `0 -> +1`,
/// `1 -> -1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SignHash {
    spec: FieldSpec,
    seed: SignHashSeed,
}

impl SignHash {
    pub fn new(spec: FieldSpec, seed: SignHashSeed) -> Result<Self> {
        for c in seed.coeffs {
            spec.element(c.value())?;
        }
        Ok(SignHash { spec, seed })
    }

    pub fn spec(&self) -> &FieldSpec {
        &self.spec
    }

    pub fn seed(&self) -> &SignHashSeed {
        &self.seed
    }

    /// Low bit of the polynomial at `x`; `x` must be a field element.
    #[inline]
    pub fn bit(&self, x: u64) -> u64 {
        let spec = &self.spec;
        let x = FieldElement::new(x);
        let [c0, c1, c2, c3] = self.seed.coeffs;
        let mut p = c3;
        p = spec.mul(p, x) + c2;
        p = spec.mul(p, x) + c1;
        p = spec.mul(p, x) + c0;
        p.value() & 1
    }

    /// `h(x)` as `+1` or `-1`.
    pub fn eval(&self, x: u64) -> Result<i64> {
        if x & !self.spec.mask() != 0 {
            return Err(Error::SymbolOutOfRange { dim: 0, symbol: x, n: self.spec.mask().wrapping_add(1) });
        }
        Ok(1 - 2 * self.bit(x) as i64)
    }
}

/// `k` hashes with seeds expanded from `master_seed` in counter mode.
pub fn make_independent_hashes(k: usize, master_seed: u64, spec: FieldSpec) -> Vec<SignHash> {
    (0..k as u64)
        .map(|slot| SignHash { spec, seed: SignHashSeed::derive(&spec, master_seed, slot) })
        .collect()
}
