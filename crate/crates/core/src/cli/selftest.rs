// Copyright 2026 The prodsketch Authors
// SPDX-License-Identifier: Apache-2.0

//! Exhaustive self-test battery run by `prodsketch selftest`.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::estimator::{BankShape, EstimatorBank};
use crate::field_hash::{FieldElement, FieldSpec, SignHash, SignHashSeed};
use crate::oracle::{
    exact_l2sq, exhaustive_moments, exhaustive_moments_for_stream, seed_uniformity_census, FrequencyTable,
    ScaledVector,
};
use crate::product_sketch::{SketchConfig, SketchInstance};
use crate::streamgen::{generate, GenSpec};

#[derive(Clone, Copy, Debug, Default)]
pub struct SelftestOptions {
    /// Skip the `k = 3` enumerations.
    pub quick: bool,
    /// Replace the GF(16) modulus with the reducible x^4 + 1.
    pub corrupt_field: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub expected: String,
    pub actual: String,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{status}  {:<40} expected: {}  actual: {}", self.name, self.expected, self.actual)
    }
}

#[derive(Clone, Debug, Default)]
pub struct SelftestReport {
    pub checks: Vec<Check>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn push(&mut self, name: impl Into<String>, passed: bool, expected: impl Into<String>, actual: impl Into<String>) {
        self.checks.push(Check { name: name.into(), passed, expected: expected.into(), actual: actual.into() });
    }
}

/// Exact `variance / expectation^2` for the all-ones vector on `[4]^k` over
/// GF(4), pinned from exhaustive enumeration.
pub fn uniform_tightness_ratio(k: usize) -> Option<BigRational> {
    let r = |n: i64, d: i64| BigRational::new(n.into(), d.into());
    match k {
        1 => Some(r(3, 2)),
        2 => Some(r(21, 4)),
        3 => Some(r(117, 8)),
        _ => None,
    }
}

/// The ten desk-scale streams used by the moment checks: stream `i` has
/// `2 + i % 7` tuples drawn with `lambda = 0.3` and `rng_seed = 1000 + i`.
pub fn fixture_streams(k: usize, n: u64) -> Vec<Vec<Vec<u64>>> {
    (0..10u64)
        .map(|i| {
            let spec = GenSpec::new(n, k, 2 + i % 7, 0.3, 1000 + i).expect("valid fixture spec");
            generate(spec).collect()
        })
        .collect()
}

fn table_of(stream: &[Vec<u64>], k: usize, n: u64) -> Result<FrequencyTable> {
    FrequencyTable::from_stream(k, n, stream.iter().map(|a| &a[..]))
}

/// Exhaustively checks the field axioms; returns the first violation.
pub fn check_field_axioms(spec: &FieldSpec) -> std::result::Result<(), String> {
    let elems: Vec<FieldElement> = spec.elements().collect();
    for &a in &elems {
        if spec.mul(a, FieldElement::ONE) != a {
            return Err(format!("1 * {a} != {a}"));
        }
        if a != FieldElement::ZERO && spec.mul(a, spec.inverse(a)) != FieldElement::ONE {
            return Err(format!("{a} has no inverse"));
        }
        for &b in &elems {
            let ab = spec.mul(a, b);
            if ab != spec.mul(b, a) {
                return Err(format!("{a} * {b} is not commutative"));
            }
            for &c in &elems {
                if spec.mul(ab, c) != spec.mul(a, spec.mul(b, c)) {
                    return Err(format!("({a} * {b}) * {c} is not associative"));
                }
                if spec.mul(a, b + c) != ab + spec.mul(a, c) {
                    return Err(format!("{a} * ({b} + {c}) does not distribute"));
                }
            }
        }
    }
    Ok(())
}

fn field_checks(report: &mut SelftestReport, opts: &SelftestOptions) -> Result<()> {
    for w in [1, 2, 4, 8] {
        let spec = if opts.corrupt_field && w == 4 { FieldSpec::with_reduction(4, 0x1)? } else { FieldSpec::new(w)? };
        let outcome = check_field_axioms(&spec);
        let actual = match &outcome {
            Ok(()) => "all axioms hold".to_string(),
            Err(e) => e.clone(),
        };
        report.push(format!("field-axioms w={w}"), outcome.is_ok(), "all axioms hold", actual);
    }
    Ok(())
}

fn census_checks(report: &mut SelftestReport) -> Result<()> {
    let spec = FieldSpec::new(2)?;
    let census = seed_uniformity_census(&spec, &[0, 1, 2, 3])?;
    let ok = census.counts.len() == 16 && census.counts.iter().all(|&c| c == 16);
    report.push("hash-census w=2 points 0,1,2,3", ok, "16 seeds for each of 16 patterns", format!("{:?}", census.counts));
    Ok(())
}

fn moment_checks(report: &mut SelftestReport, opts: &SelftestOptions) -> Result<()> {
    let gf4 = FieldSpec::new(2)?;
    let streams = fixture_streams(2, 4);
    let mut exact_matches = 0;
    let mut bound_holds = 0;
    let mut worst = BigRational::zero();
    for stream in &streams {
        let table = table_of(stream, 2, 4)?;
        let moments = exhaustive_moments_for_stream(&table, &gf4)?;
        if moments.expectation == exact_l2sq(&table)? {
            exact_matches += 1;
        }
        if moments.variance <= BigRational::from_integer(8.into()) * &moments.expectation * &moments.expectation {
            bound_holds += 1;
        }
        if let Some(r) = moments.ratio {
            worst = worst.max(r);
        }
    }
    report.push(
        "exact-expectation k=2 n=4 w=2",
        exact_matches == streams.len(),
        format!("{}/{} streams", streams.len(), streams.len()),
        format!("{exact_matches}/{} streams", streams.len()),
    );
    report.push(
        "variance<=8E^2 k=2 n=4 w=2",
        bound_holds == streams.len(),
        format!("{}/{} streams", streams.len(), streams.len()),
        format!("{bound_holds}/{} streams, max Var/E^2 = {worst}", streams.len()),
    );

    if !opts.quick {
        let gf2 = FieldSpec::new(1)?;
        let streams = fixture_streams(3, 2);
        let mut holds = 0;
        let mut matches = 0;
        for stream in &streams {
            let table = table_of(stream, 3, 2)?;
            let moments = exhaustive_moments_for_stream(&table, &gf2)?;
            matches += (moments.expectation == exact_l2sq(&table)?) as usize;
            holds += (moments.variance
                <= BigRational::from_integer(26.into()) * &moments.expectation * &moments.expectation)
                as usize;
        }
        report.push(
            "exact-expectation k=3 n=2 w=1",
            matches == streams.len(),
            format!("{}/{} streams", streams.len(), streams.len()),
            format!("{matches}/{} streams", streams.len()),
        );
        report.push(
            "variance<=26E^2 k=3 n=2 w=1",
            holds == streams.len(),
            format!("{}/{} streams", streams.len(), streams.len()),
            format!("{holds}/{} streams", streams.len()),
        );
    }

    let ks: &[usize] = if opts.quick { &[1, 2] } else { &[1, 2, 3] };
    for &k in ks {
        let moments = exhaustive_moments(&ScaledVector::uniform(k, 4)?, &gf4)?;
        let ratio = moments.ratio.clone().unwrap_or_default();
        let floor = BigRational::new(BigInt::from(3u32.pow(k as u32)), 2.into());
        let pinned = uniform_tightness_ratio(k).expect("pinned for k <= 3");
        report.push(
            format!("tightness uniform k={k} n=4 w=2"),
            ratio >= floor && ratio == pinned,
            format!("Var/E^2 = {pinned} >= {floor}"),
            format!("Var/E^2 = {ratio}"),
        );
    }
    Ok(())
}

fn agreement_checks(report: &mut SelftestReport) -> Result<()> {
    let gf4 = FieldSpec::new(2)?;
    let config = SketchConfig::new(2, 4, gf4)?;
    let stream = &fixture_streams(2, 4)[6];
    let table = table_of(stream, 2, 4)?;
    let vector = ScaledVector::from_table(&table)?;
    let mut mismatches = 0u64;
    let mut total = 0u64;
    for i in 0..256 {
        let h1 = SignHash::new(gf4, SignHashSeed::from_index(&gf4, i))?;
        for j in 0..256 {
            let h2 = SignHash::new(gf4, SignHashSeed::from_index(&gf4, j))?;
            let mut sketch = SketchInstance::new(config, vec![h1, h2])?;
            for a in stream {
                sketch.update_item(a)?;
            }
            if sketch.finalize_exact()? != vector.y_for_hashes(&[h1, h2])? {
                mismatches += 1;
            }
            total += 1;
        }
    }
    report.push(
        "sketch-vs-oracle Y per seed pair",
        mismatches == 0,
        format!("0 mismatches over {total} seed pairs"),
        format!("{mismatches} mismatches"),
    );
    Ok(())
}

fn structural_checks(report: &mut SelftestReport) -> Result<()> {
    let config = SketchConfig::gf64(3, 8)?;
    let shape = BankShape::new(4, 3)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5e1f_7e57);
    let mut failures = 0;
    for trial in 0..100u64 {
        let len = rng.random_range(1..=100usize);
        let stream: Vec<Vec<u64>> = (0..len).map(|_| (0..3).map(|_| rng.random_range(0..8)).collect()).collect();
        let cut = rng.random_range(0..=len);
        let mut whole = EstimatorBank::with_shape(config, shape, trial);
        let mut left = whole.clone();
        let mut right = whole.clone();
        for a in &stream {
            whole.ingest(a)?;
        }
        for a in &stream[..cut] {
            left.ingest(a)?;
        }
        for a in &stream[cut..] {
            right.ingest(a)?;
        }
        left.merge(&right)?;
        failures += (left != whole) as usize;
    }
    report.push("merge-replay 100 random splits", failures == 0, "0 counter mismatches", format!("{failures} mismatches"));

    let mut nonzero = 0;
    for seed in 0..10u64 {
        let config = SketchConfig::gf64(3, 3)?;
        let mut single = EstimatorBank::with_shape(config, shape, seed);
        single.ingest(&[2, 0, 1])?;
        let mut constant = EstimatorBank::with_shape(config, shape, seed);
        for _ in 0..37 {
            constant.ingest(&[1, 1, 2])?;
        }
        let mut full = EstimatorBank::with_shape(config, shape, seed);
        for i in 0..27u64 {
            full.ingest(&[i % 3, (i / 3) % 3, i / 9])?;
        }
        for bank in [&single, &constant, &full] {
            nonzero += (bank.estimate()?.l2_squared != 0.0) as usize;
        }
    }
    report.push("exact-zero streams", nonzero == 0, "estimate 0 for all 30 banks", format!("{nonzero} nonzero"));
    Ok(())
}

pub fn run_selftest(opts: &SelftestOptions) -> Result<SelftestReport> {
    let mut report = SelftestReport::default();
    field_checks(&mut report, opts)?;
    census_checks(&mut report)?;
    moment_checks(&mut report, opts)?;
    agreement_checks(&mut report)?;
    structural_checks(&mut report)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corrupted_field_fails_axioms() {
        let bad = FieldSpec::with_reduction(4, 0x1).unwrap();
        assert!(check_field_axioms(&bad).is_err());
        assert!(check_field_axioms(&FieldSpec::new(4).unwrap()).is_ok());
    }

    #[test]
    fn fixtures_are_small() {
        for s in fixture_streams(2, 4) {
            assert!((2..=8).contains(&s.len()));
        }
    }

    #[test]
    fn quick_selftest_passes() {
        let report = run_selftest(&SelftestOptions { quick: true, corrupt_field: false }).unwrap();
        for c in &report.checks {
            assert!(c.passed, "{c}");
        }
        assert!(!report.checks.iter().any(|c| c.name.contains("k=3")));
    }

    #[test]
    fn negative_control() {
        let report = run_selftest(&SelftestOptions { quick: true, corrupt_field: true }).unwrap();
        assert!(!report.passed());
        let failed: Vec<_> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        assert_eq!(failed, vec!["field-axioms w=4"]);
    }
}
