// Copyright 2026 The prodsketch Authors
// SPDX-License-Identifier: Apache-2.0

//! A single product-domain AMS estimator.
//!
//! In independence mode the instance keeps `k + 2` integers for a stream of
//! tuples `a_1..a_m` over `[0, n)^k`:
//!
//! * `t1 = sum_c H(a_c)` where `H(p) = h_1(p_1) * ... * h_k(p_k)`,
//! * `s_i = sum_c h_i(a_c^i)` for each dimension,
//! * the item count `m`,
//!
//! and [`SketchInstance::finalize`] returns `(t1/m - prod_i s_i/m)^2`, whose
//! expectation over the hash seeds is the squared distance between the
//! empirical joint distribution and the product of its marginals.
//!
//! In turnstile mode the instance accumulates `sum_p v_p H(p)` for an arbitrary
//! vector `v` fed by point updates. The two modes cannot be mixed: the
//! independence statistic is degree `k` in the stream, not linear.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::field_hash::{make_independent_hashes, FieldSpec, SignHash};

/// Largest alphabet for which per-dimension sign tables are precomputed.
pub const SIGN_TABLE_MAX_DOMAIN: u64 = 1024;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SketchConfig {
    k: usize,
    n: u64,
    spec: FieldSpec,
}

impl SketchConfig {
    pub fn new(k: usize, n: u64, spec: FieldSpec) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        if n == 0 {
            return Err(Error::InvalidConfig("n must be at least 1".into()));
        }
        if spec.width() < 64 && n > 1u64 << spec.width() {
            return Err(Error::DomainTooLarge { n, width: spec.width() });
        }
        Ok(SketchConfig { k, n, spec })
    }

    /// `k` dimensions over `[0, n)` hashed in GF(2^64).
    pub fn gf64(k: usize, n: u64) -> Result<Self> {
        SketchConfig::new(k, n, FieldSpec::gf64())
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn spec(&self) -> &FieldSpec {
        &self.spec
    }

    pub fn check_tuple(&self, p: &[u64]) -> Result<()> {
        if p.len() != self.k {
            return Err(Error::ArityMismatch { expected: self.k, got: p.len() });
        }
        match p.iter().position(|&x| x >= self.n) {
            Some(dim) => Err(Error::SymbolOutOfRange { dim, symbol: p[dim], n: self.n }),
            None => Ok(()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    /// No updates yet; either mode may follow.
    Fresh,
    Independence,
    Turnstile,
}

impl Mode {
    pub fn code(self) -> u64 {
        match self {
            Mode::Fresh => 0,
            Mode::Independence => 1,
            Mode::Turnstile => 2,
        }
    }

    pub fn from_code(code: u64) -> Option<Self> {
        match code {
            0 => Some(Mode::Fresh),
            1 => Some(Mode::Independence),
            2 => Some(Mode::Turnstile),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Fresh => "fresh",
            Mode::Independence => "independence",
            Mode::Turnstile => "turnstile",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One dimension's hash with its signs over `[0, n)` cached as a bitset when
/// the alphabet is small.
#[derive(Clone, Debug, PartialEq)]
struct DimHash {
    hash: SignHash,
    table: Option<Box<[u64]>>,
}

impl DimHash {
    fn new(hash: SignHash, n: u64) -> Self {
        let table = (n <= SIGN_TABLE_MAX_DOMAIN).then(|| {
            let mut words = vec![0u64; n.div_ceil(64) as usize];
            for x in 0..n {
                words[(x >> 6) as usize] |= hash.bit(x) << (x & 63);
            }
            words.into_boxed_slice()
        });
        DimHash { hash, table }
    }

    #[inline]
    fn bit(&self, x: u64) -> u64 {
        match &self.table {
            Some(words) => (words[(x >> 6) as usize] >> (x & 63)) & 1,
            None => self.hash.bit(x),
        }
    }
}

#[inline]
fn sign(bit: u64) -> i64 {
    1 - 2 * bit as i64
}

#[derive(Clone, Debug, PartialEq)]
pub struct SketchInstance {
    config: SketchConfig,
    hashes: Vec<DimHash>,
    mode: Mode,
    m: i64,
    t1: i64,
    marginal_sums: Vec<i64>,
    acc: f64,
}

impl SketchInstance {
    pub fn new(config: SketchConfig, hashes: Vec<SignHash>) -> Result<Self> {
        if hashes.len() != config.k {
            return Err(Error::ConfigMismatch(format!(
                "{} hashes supplied for k = {}",
                hashes.len(),
                config.k
            )));
        }
        if let Some(h) = hashes.iter().find(|h| *h.spec() != config.spec) {
            return Err(Error::ConfigMismatch(format!(
                "hash over GF(2^{}) in a GF(2^{}) sketch",
                h.spec().width(),
                config.spec.width()
            )));
        }
        let hashes = hashes.into_iter().map(|h| DimHash::new(h, config.n)).collect();
        Ok(SketchInstance {
            config,
            hashes,
            mode: Mode::Fresh,
            m: 0,
            t1: 0,
            marginal_sums: vec![0; config.k],
            acc: 0.0,
        })
    }

    /// Instance whose `k` hashes are expanded from `key`.
    pub fn from_key(config: SketchConfig, key: u64) -> Self {
        let hashes = make_independent_hashes(config.k, key, config.spec);
        SketchInstance::new(config, hashes).expect("derived hashes match the config")
    }

    pub fn config(&self) -> &SketchConfig {
        &self.config
    }

    pub fn hashes(&self) -> impl Iterator<Item = &SignHash> {
        self.hashes.iter().map(|d| &d.hash)
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn m(&self) -> i64 {
        self.m
    }

    pub fn t1(&self) -> i64 {
        self.t1
    }

    pub fn marginal_sums(&self) -> &[i64] {
        &self.marginal_sums
    }

    pub fn accumulator(&self) -> f64 {
        self.acc
    }

    /// XOR of the per-dimension low bits: 0 for `H(p) = +1`, 1 for `-1`.
    #[inline]
    fn product_bit(&self, p: &[u64]) -> u64 {
        self.hashes.iter().zip(p).fold(0, |acc, (h, &x)| acc ^ h.bit(x))
    }

    pub fn product_hash(&self, p: &[u64]) -> Result<i64> {
        self.config.check_tuple(p)?;
        Ok(sign(self.product_bit(p)))
    }

    fn enter(&mut self, wanted: Mode) -> Result<()> {
        match self.mode {
            Mode::Fresh => {
                self.mode = wanted;
                Ok(())
            }
            found if found == wanted => Ok(()),
            found => Err(Error::ModeViolation { expected: wanted, found }),
        }
    }

    pub fn update_item(&mut self, a: &[u64]) -> Result<()> {
        self.update_item_weighted(a, 1)
    }

    /// `count` copies of `a`. Equivalent to calling [`Self::update_item`]
    /// `count` times.
    pub fn update_item_weighted(&mut self, a: &[u64], count: u64) -> Result<()> {
        self.config.check_tuple(a)?;
        self.enter(Mode::Independence)?;
        self.apply_weighted(a, count)
    }

    /// Counter update for a tuple already validated against the config.
    #[inline]
    pub(crate) fn apply_weighted(&mut self, a: &[u64], count: u64) -> Result<()> {
        let c = i64::try_from(count).map_err(|_| Error::CounterOverflow)?;
        let mut joint = 0u64;
        for ((h, &x), s) in self.hashes.iter().zip(a).zip(self.marginal_sums.iter_mut()) {
            let b = h.bit(x);
            joint ^= b;
            *s = s.checked_add(sign(b) * c).ok_or(Error::CounterOverflow)?;
        }
        self.t1 = self.t1.checked_add(sign(joint) * c).ok_or(Error::CounterOverflow)?;
        self.m = self.m.checked_add(c).ok_or(Error::CounterOverflow)?;
        Ok(())
    }

    pub(crate) fn mark_independence(&mut self) -> Result<()> {
        self.enter(Mode::Independence)
    }

    pub fn update_point(&mut self, p: &[u64], delta: f64) -> Result<()> {
        self.config.check_tuple(p)?;
        self.enter(Mode::Turnstile)?;
        if self.product_bit(p) == 0 {
            self.acc += delta;
        } else {
            self.acc -= delta;
        }
        Ok(())
    }

    /// `t1 * m^(k-1) - prod_i s_i`, the deviation scaled by `m^k`.
    pub fn scaled_deviation(&self) -> Result<BigInt> {
        self.require_stream()?;
        Ok(match self.small_deviation() {
            Some((u, _)) => BigInt::from(u),
            None => self.big_deviation(),
        })
    }

    fn require_stream(&self) -> Result<()> {
        match self.mode {
            Mode::Turnstile => Err(Error::ModeViolation { expected: Mode::Independence, found: Mode::Turnstile }),
            _ if self.m == 0 => Err(Error::EmptyStream),
            _ => Ok(()),
        }
    }

    /// `(U, m^k)` when both fit in 128 bits.
    fn small_deviation(&self) -> Option<(i128, i128)> {
        let m = self.m as i128;
        let mut scale = 1i128;
        for _ in 1..self.config.k {
            scale = scale.checked_mul(m)?;
        }
        let joint = (self.t1 as i128).checked_mul(scale)?;
        let product = self.marginal_sums.iter().try_fold(1i128, |acc, &s| acc.checked_mul(s as i128))?;
        let u = joint.checked_sub(product)?;
        Some((u, scale.checked_mul(m)?))
    }

    fn big_deviation(&self) -> BigInt {
        let m = BigInt::from(self.m);
        let scale = num_traits::pow(m, self.config.k - 1);
        let product: BigInt = self.marginal_sums.iter().map(|&s| BigInt::from(s)).product();
        BigInt::from(self.t1) * scale - product
    }

    /// `Y = (t1/m - prod_i s_i/m)^2`.
    pub fn finalize(&self) -> Result<f64> {
        self.require_stream()?;
        if let Some((u, scale)) = self.small_deviation() {
            if u == 0 {
                return Ok(0.0);
            }
            let r = u as f64 / scale as f64;
            return Ok(r * r);
        }
        let r = self.exact_ratio().to_f64().unwrap_or(f64::INFINITY);
        Ok(r * r)
    }

    fn exact_ratio(&self) -> BigRational {
        let scale = num_traits::pow(BigInt::from(self.m), self.config.k);
        BigRational::new(self.big_deviation(), scale)
    }

    /// `Y` as an exact rational.
    pub fn finalize_exact(&self) -> Result<BigRational> {
        self.require_stream()?;
        let r = self.exact_ratio();
        Ok(&r * &r)
    }

    /// `(sum_p v_p H(p))^2` for the accumulated turnstile vector.
    pub fn finalize_turnstile(&self) -> Result<f64> {
        match self.mode {
            Mode::Independence => Err(Error::ModeViolation { expected: Mode::Turnstile, found: Mode::Independence }),
            _ => Ok(self.acc * self.acc),
        }
    }

    fn same_hashes(&self, other: &SketchInstance) -> bool {
        self.config == other.config && self.hashes.iter().zip(&other.hashes).all(|(a, b)| a.hash == b.hash)
    }

    /// Adds `other`'s counters into `self`. A fresh operand is the identity.
    pub fn merge(&mut self, other: &SketchInstance) -> Result<()> {
        if !self.same_hashes(other) {
            return Err(Error::ConfigMismatch("merging sketches with different configs or seeds".into()));
        }
        match (self.mode, other.mode) {
            (_, Mode::Fresh) => return Ok(()),
            (Mode::Fresh, _) => self.mode = other.mode,
            (a, b) if a != b => return Err(Error::ModeViolation { expected: a, found: b }),
            _ => {}
        }
        let add = |a: i64, b: i64| a.checked_add(b).ok_or(Error::CounterOverflow);
        self.m = add(self.m, other.m)?;
        self.t1 = add(self.t1, other.t1)?;
        for (s, &o) in self.marginal_sums.iter_mut().zip(&other.marginal_sums) {
            *s = add(*s, o)?;
        }
        self.acc += other.acc;
        Ok(())
    }

    /// Overwrites the counters; used when restoring a snapshot.
    pub(crate) fn restore(&mut self, mode: Mode, m: i64, t1: i64, marginal_sums: &[i64], acc: f64) {
        self.mode = mode;
        self.m = m;
        self.t1 = t1;
        self.marginal_sums.copy_from_slice(marginal_sums);
        self.acc = acc;
    }

    pub fn is_exactly_zero(&self) -> Result<bool> {
        Ok(self.scaled_deviation()?.is_zero())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field_hash::SignHashSeed;

    fn gf4() -> FieldSpec {
        FieldSpec::new(2).unwrap()
    }

    /// Seed index whose hash has the requested signs on [0, 4).
    fn seed_with_signs(signs: [i64; 4]) -> SignHash {
        let spec = gf4();
        (0..256)
            .map(|i| SignHash::new(spec, SignHashSeed::from_index(&spec, i)).unwrap())
            .find(|h| (0..4).all(|x| h.eval(x).unwrap() == signs[x as usize]))
            .unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(SketchConfig::new(0, 4, gf4()).is_err());
        assert!(SketchConfig::new(2, 0, gf4()).is_err());
        assert!(matches!(SketchConfig::new(2, 5, gf4()), Err(Error::DomainTooLarge { .. })));
        assert!(SketchConfig::new(2, 4, gf4()).is_ok());
        assert!(SketchConfig::gf64(3, u64::MAX).is_ok());
    }

    #[test]
    fn product_hash_k1_is_h1() {
        let config = SketchConfig::gf64(1, 100).unwrap();
        let s = SketchInstance::from_key(config, 7);
        let h = s.hashes().next().unwrap();
        for x in 0..100 {
            assert_eq!(s.product_hash(&[x]).unwrap(), h.eval(x).unwrap());
        }
    }

    #[test]
    fn product_hash_from_fixed_seeds() {
        let h1 = seed_with_signs([1, 1, -1, -1]);
        let h2 = seed_with_signs([1, -1, 1, -1]);
        assert_eq!(h1.eval(1).unwrap(), 1);
        assert_eq!(h2.eval(3).unwrap(), -1);
        let config = SketchConfig::new(2, 4, gf4()).unwrap();
        let s = SketchInstance::new(config, vec![h1, h2]).unwrap();
        assert_eq!(s.product_hash(&[1, 3]).unwrap(), -1);
    }

    #[test]
    fn tuple_validation() {
        let config = SketchConfig::new(2, 4, gf4()).unwrap();
        let mut s = SketchInstance::from_key(config, 1);
        assert!(matches!(s.update_item(&[1]), Err(Error::ArityMismatch { expected: 2, got: 1 })));
        assert!(matches!(s.update_item(&[1, 4]), Err(Error::SymbolOutOfRange { dim: 1, symbol: 4, n: 4 })));
        assert!(matches!(s.product_hash(&[0, 0, 0]), Err(Error::ArityMismatch { .. })));
        assert_eq!(s.m(), 0);
        assert_eq!(s.mode(), Mode::Fresh);
    }

    #[test]
    fn empty_stream_cannot_finalize() {
        let s = SketchInstance::from_key(SketchConfig::gf64(2, 4).unwrap(), 1);
        assert!(matches!(s.finalize(), Err(Error::EmptyStream)));
    }

    #[test]
    fn single_and_repeated_items_give_zero() {
        let config = SketchConfig::gf64(3, 10).unwrap();
        for key in 0..50 {
            let mut s = SketchInstance::from_key(config, key);
            s.update_item(&[3, 1, 4]).unwrap();
            assert_eq!(s.finalize().unwrap(), 0.0);
            for _ in 0..9 {
                s.update_item(&[3, 1, 4]).unwrap();
            }
            assert_eq!(s.m(), 10);
            assert_eq!(s.finalize().unwrap(), 0.0);
        }
    }

    #[test]
    fn diagonal_pair_hand_example() {
        // h1(0) = h2(0) = +1, h1(1) = h2(1) = -1.
        let h = seed_with_signs([1, -1, 1, 1]);
        let config = SketchConfig::new(2, 2, gf4()).unwrap();
        let mut s = SketchInstance::new(config, vec![h, h]).unwrap();
        s.update_item(&[0, 0]).unwrap();
        s.update_item(&[1, 1]).unwrap();
        assert_eq!((s.t1(), s.marginal_sums()), (2, &[0, 0][..]));
        assert_eq!(s.finalize().unwrap(), 1.0);
        assert_eq!(s.finalize_exact().unwrap(), BigRational::from_integer(1.into()));
    }

    #[test]
    fn full_enumeration_identity() {
        // t1 * m^(k-1) == prod s_i whenever every tuple appears once.
        for (n, k) in [(2u64, 2usize), (3, 2), (2, 3), (3, 3)] {
            let config = SketchConfig::gf64(k, n).unwrap();
            for key in 0..20 {
                let mut s = SketchInstance::from_key(config, key);
                let total = n.pow(k as u32);
                for idx in 0..total {
                    let mut rest = idx;
                    let tuple: Vec<u64> = (0..k)
                        .map(|_| {
                            let x = rest % n;
                            rest /= n;
                            x
                        })
                        .collect();
                    s.update_item(&tuple).unwrap();
                }
                let m = s.m() as i128;
                let lhs = s.t1() as i128 * m.pow(k as u32 - 1);
                let rhs: i128 = s.marginal_sums().iter().map(|&x| x as i128).product();
                assert_eq!(lhs, rhs, "n={n} k={k} key={key}");
                assert_eq!(s.finalize().unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn modes_do_not_mix() {
        let config = SketchConfig::gf64(2, 4).unwrap();
        let mut s = SketchInstance::from_key(config, 3);
        s.update_item(&[0, 1]).unwrap();
        assert!(matches!(s.update_point(&[0, 1], 1.0), Err(Error::ModeViolation { .. })));
        assert!(s.finalize_turnstile().is_err());

        let mut t = SketchInstance::from_key(config, 3);
        t.update_point(&[0, 1], 2.5).unwrap();
        assert!(matches!(t.update_item(&[0, 1]), Err(Error::ModeViolation { .. })));
        assert!(matches!(t.finalize(), Err(Error::ModeViolation { .. })));
        assert!(s.clone().merge(&t).is_err());
    }

    #[test]
    fn turnstile_cancellation_and_empty() {
        let config = SketchConfig::gf64(2, 8).unwrap();
        let mut s = SketchInstance::from_key(config, 11);
        assert_eq!(s.finalize_turnstile().unwrap(), 0.0);
        s.update_point(&[1, 2], 0.75).unwrap();
        let before = s.accumulator();
        s.update_point(&[5, 6], 3.0).unwrap();
        s.update_point(&[5, 6], -3.0).unwrap();
        assert_eq!(s.accumulator(), before);
    }

    #[test]
    fn turnstile_uniform_vector_factorizes() {
        let config = SketchConfig::new(2, 4, gf4()).unwrap();
        for key in 0..64 {
            let mut s = SketchInstance::from_key(config, key);
            for x in 0..4 {
                for y in 0..4 {
                    s.update_point(&[x, y], 1.0).unwrap();
                }
            }
            let direct: i64 = s
                .hashes()
                .map(|h| (0..4).map(|x| h.eval(x).unwrap()).sum::<i64>())
                .product();
            assert_eq!(s.accumulator(), direct as f64);
        }
    }

    #[test]
    fn weighted_update_matches_repetition() {
        let config = SketchConfig::gf64(3, 5).unwrap();
        let mut a = SketchInstance::from_key(config, 99);
        let mut b = a.clone();
        for _ in 0..7 {
            a.update_item(&[1, 2, 3]).unwrap();
        }
        b.update_item_weighted(&[1, 2, 3], 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn uncached_domain_matches_direct_evaluation() {
        let config = SketchConfig::gf64(2, SIGN_TABLE_MAX_DOMAIN + 10).unwrap();
        let s = SketchInstance::from_key(config, 5);
        let hs: Vec<_> = s.hashes().copied().collect();
        for x in [0, 1, SIGN_TABLE_MAX_DOMAIN, SIGN_TABLE_MAX_DOMAIN + 9] {
            let expect = hs[0].eval(x).unwrap() * hs[1].eval(3).unwrap();
            assert_eq!(s.product_hash(&[x, 3]).unwrap(), expect);
        }
    }

    #[test]
    fn merge_with_fresh_is_identity() {
        let config = SketchConfig::gf64(2, 4).unwrap();
        let mut a = SketchInstance::from_key(config, 1);
        a.update_item(&[1, 2]).unwrap();
        a.update_item(&[3, 2]).unwrap();
        let snapshot = a.clone();
        a.merge(&SketchInstance::from_key(config, 1)).unwrap();
        assert_eq!(a, snapshot);
        let mut fresh = SketchInstance::from_key(config, 1);
        fresh.merge(&snapshot).unwrap();
        assert_eq!(fresh, snapshot);
    }

    #[test]
    fn merge_rejects_other_seeds() {
        let config = SketchConfig::gf64(2, 4).unwrap();
        let mut a = SketchInstance::from_key(config, 1);
        let b = SketchInstance::from_key(config, 2);
        assert!(matches!(a.merge(&b), Err(Error::ConfigMismatch(_))));
        let c = SketchInstance::from_key(SketchConfig::gf64(2, 5).unwrap(), 1);
        assert!(a.merge(&c).is_err());
    }

    #[test]
    fn big_integer_fallback_agrees() {
        // k = 9 with m ~ 2^20 overflows the i128 product path.
        let config = SketchConfig::gf64(9, 2).unwrap();
        let mut s = SketchInstance::from_key(config, 17);
        s.update_item_weighted(&[0; 9], 1 << 20).unwrap();
        s.update_item_weighted(&[1, 0, 1, 0, 1, 0, 1, 0, 1], 3).unwrap();
        assert!(s.small_deviation().is_none());
        let exact = s.finalize_exact().unwrap().to_f64().unwrap();
        let y = s.finalize().unwrap();
        assert!((y - exact).abs() <= 1e-12 * exact.max(1e-300));
    }
}
