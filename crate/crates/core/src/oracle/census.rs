// Copyright 2026 The prodsketch Authors
// SPDX-License-Identifier: Apache-2.0

use super::moments::{seed_tuple_count, ENUMERATION_BUDGET};
use crate::error::{Error, Result};
use crate::field_hash::{FieldSpec, SignHash, SignHashSeed};

/// How many seeds of the family realise each sign pattern on a set of points.
///
/// Pattern bit `j` is set when `h(points[j]) = -1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignCensus {
    pub points: Vec<u64>,
    pub counts: Vec<u64>,
}

impl SignCensus {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Count for a pattern given as signs in point order.
    pub fn count(&self, signs: &[i64]) -> u64 {
        let pattern = signs.iter().enumerate().fold(0usize, |acc, (j, &s)| acc | ((s < 0) as usize) << j);
        self.counts[pattern]
    }

    pub fn is_uniform(&self) -> bool {
        self.counts.windows(2).all(|w| w[0] == w[1])
    }
}

/// Enumerates all `2^(4w)` seeds and tallies the sign pattern on `points`
/// (one to four distinct field elements).
pub fn seed_uniformity_census(spec: &FieldSpec, points: &[u64]) -> Result<SignCensus> {
    if points.is_empty() || points.len() > 4 {
        return Err(Error::InvalidConfig(format!("census needs 1 to 4 points, got {}", points.len())));
    }
    for (i, &p) in points.iter().enumerate() {
        spec.element(p)?;
        if points[..i].contains(&p) {
            return Err(Error::NonDistinctPoints);
        }
    }
    let tuples = seed_tuple_count(spec, 1);
    if tuples > ENUMERATION_BUDGET as u128 {
        return Err(Error::EnumerationBudget { tuples, cap: ENUMERATION_BUDGET });
    }
    let seeds = tuples as u64;
    let mut counts = vec![0u64; 1 << points.len()];
    for index in 0..seeds {
        let h = SignHash::new(*spec, SignHashSeed::from_index(spec, index))?;
        let pattern = points.iter().enumerate().fold(0usize, |acc, (j, &x)| acc | (h.bit(x) as usize) << j);
        counts[pattern] += 1;
    }
    Ok(SignCensus { points: points.to_vec(), counts })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gf4_four_points() {
        let spec = FieldSpec::new(2).unwrap();
        let census = seed_uniformity_census(&spec, &[0, 1, 2, 3]).unwrap();
        assert_eq!(census.counts, vec![16; 16]);
        assert_eq!(census.total(), 256);
        assert_eq!(census.count(&[1, -1, -1, 1]), 16);
    }

    #[test]
    fn pairs_and_singletons() {
        let spec = FieldSpec::new(2).unwrap();
        for pair in [[0, 1], [0, 3], [2, 1], [3, 2]] {
            assert_eq!(seed_uniformity_census(&spec, &pair).unwrap().counts, vec![64; 4]);
        }
        for x in 0..4 {
            assert_eq!(seed_uniformity_census(&spec, &[x]).unwrap().counts, vec![128; 2]);
        }
    }

    #[test]
    fn gf2_and_gf16() {
        let gf2 = FieldSpec::new(1).unwrap();
        assert_eq!(seed_uniformity_census(&gf2, &[0, 1]).unwrap().counts, vec![4; 4]);
        let gf16 = FieldSpec::new(4).unwrap();
        let census = seed_uniformity_census(&gf16, &[1, 5, 9, 14]).unwrap();
        assert!(census.is_uniform());
        assert_eq!(census.total(), 65536);
    }

    #[test]
    fn bad_points() {
        let spec = FieldSpec::new(2).unwrap();
        assert!(matches!(seed_uniformity_census(&spec, &[0, 1, 1, 2]), Err(Error::NonDistinctPoints)));
        assert!(seed_uniformity_census(&spec, &[0, 4]).is_err());
        assert!(seed_uniformity_census(&spec, &[]).is_err());
        assert!(seed_uniformity_census(&spec, &[0, 1, 2, 3, 0]).is_err());
        let gf256 = FieldSpec::new(8).unwrap();
        assert!(matches!(seed_uniformity_census(&gf256, &[0, 1]), Err(Error::EnumerationBudget { .. })));
    }
}
