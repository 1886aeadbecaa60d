// Copyright 2026 The prodsketch Authors
// SPDX-License-Identifier: Apache-2.0

//! Seeded synthetic tuple streams with a dependence knob.
//!
//! Each item is, with probability `lambda`, the diagonal tuple `(x, .., x)`
//! for a uniform `x`, and otherwise `k` independent uniform symbols. The
//! random source is ChaCha8 seeded with `rng_seed` via `seed_from_u64`;
//! per item the generator draws one Bernoulli(`lambda`) and then either one
//! or `k` uniform symbols in `[0, n)`, in dimension order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Written into stream file headers.
pub const GENERATOR_ID: &str = "chacha8-diagonal-mixture-v1";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GenSpec {
    pub n: u64,
    pub k: usize,
    pub m: u64,
    pub lambda: f64,
    pub rng_seed: u64,
}

impl GenSpec {
    pub fn new(n: u64, k: usize, m: u64, lambda: f64, rng_seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::InvalidParams(format!("lambda = {lambda} is not in [0, 1]")));
        }
        if n == 0 || k == 0 || m == 0 {
            return Err(Error::InvalidParams("n, k and m must all be at least 1".into()));
        }
        Ok(GenSpec { n, k, m, lambda, rng_seed })
    }
}

pub struct StreamGenerator {
    spec: GenSpec,
    rng: ChaCha8Rng,
    remaining: u64,
}

impl StreamGenerator {
    pub fn new(spec: GenSpec) -> Self {
        StreamGenerator { spec, rng: ChaCha8Rng::seed_from_u64(spec.rng_seed), remaining: spec.m }
    }
}

impl Iterator for StreamGenerator {
    type Item = Vec<u64>;

    fn next(&mut self) -> Option<Vec<u64>> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let GenSpec { n, k, lambda, .. } = self.spec;
        if self.rng.random_bool(lambda) {
            let x = self.rng.random_range(0..n);
            Some(vec![x; k])
        } else {
            Some((0..k).map(|_| self.rng.random_range(0..n)).collect())
        }
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let r = usize::try_from(self.remaining).unwrap_or(usize::MAX);
        (r, Some(r))
    }
}

pub fn generate(spec: GenSpec) -> StreamGenerator {
    StreamGenerator::new(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_one_is_diagonal() {
        let spec = GenSpec::new(8, 3, 2000, 1.0, 4).unwrap();
        assert!(generate(spec).all(|t| t.iter().all(|&x| x == t[0])));
    }

    #[test]
    fn deterministic_and_in_range() {
        let spec = GenSpec::new(5, 4, 1000, 0.0, 77).unwrap();
        let a: Vec<_> = generate(spec).collect();
        let b: Vec<_> = generate(spec).collect();
        assert_eq!(a, b);
        assert_eq!(a.len(), 1000);
        assert!(a.iter().all(|t| t.len() == 4 && t.iter().all(|&x| x < 5)));
        let c: Vec<_> = generate(GenSpec { rng_seed: 78, ..spec }).collect();
        assert_ne!(a, c);
    }

    #[test]
    fn invalid_lambda() {
        assert!(GenSpec::new(4, 2, 10, 1.5, 0).is_err());
        assert!(GenSpec::new(4, 2, 10, -0.1, 0).is_err());
        assert!(GenSpec::new(4, 2, 10, f64::NAN, 0).is_err());
        assert!(GenSpec::new(4, 2, 0, 0.5, 0).is_err());
    }

    #[test]
    fn mixture_hits_diagonal_more_often() {
        let spec = GenSpec::new(8, 3, 20_000, 0.5, 9).unwrap();
        let diagonal = generate(spec).filter(|t| t.iter().all(|&x| x == t[0])).count();
        // 0.5 + 0.5/64 of items are diagonal.
        assert!((9_500..11_000).contains(&diagonal), "{diagonal}");
    }
}
