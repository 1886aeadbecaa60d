// Copyright 2026 The prodsketch Authors
// SPDX-License-Identifier: Apache-2.0

//! Binary-field arithmetic and the 4-wise independent sign hash family.

pub mod derive;
mod field;
mod sign_hash;

pub use field::{field_mul, FieldElement, FieldSpec};
pub use sign_hash::{make_independent_hashes, SignHash, SignHashSeed};
