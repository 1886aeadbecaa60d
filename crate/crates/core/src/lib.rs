// Copyright 2026 The prodsketch Authors
// SPDX-License-Identifier: Apache-2.0

//! Single-pass estimation of k-wise dependence in tuple streams.
//!
//! A stream of tuples over `[0, n)^k` defines an empirical joint
//! distribution and `k` marginals. [`estimator::EstimatorBank`] estimates the
//! squared l2 distance between the joint and the product of the marginals to
//! within `1 ± epsilon` with probability `1 - delta`, using products of
//! 4-wise independent sign hashes ([`field_hash`]) in
//! `O(3^k epsilon^-2 log(1/delta))` counters. [`oracle`] computes the same
//! quantity exactly, along with the estimator's exact moments on small
//! fields.

pub mod cli;
pub mod error;
pub mod estimator;
pub mod field_hash;
pub mod oracle;
pub mod product_sketch;
pub mod streamgen;

pub use error::{Error, Result};
pub use estimator::{derive_shape, AccuracyParams, BankShape, Estimate, EstimatorBank, ShapeRule};
pub use field_hash::{FieldElement, FieldSpec, SignHash, SignHashSeed};
pub use oracle::{exact_l2sq, FrequencyTable};
pub use product_sketch::{Mode, SketchConfig, SketchInstance};
