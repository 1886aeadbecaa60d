// Copyright 2026 The prodsketch Authors
// SPDX-License-Identifier: Apache-2.0

//! Exact ground truth for small instances: frequency tables, the exact
//! squared independence distance, exhaustive seed enumeration of the
//! estimator's moments, and the hash family census.

mod census;
mod moments;
mod table;

pub use census::{seed_uniformity_census, SignCensus};
pub use moments::{
    exhaustive_moments, exhaustive_moments_for_stream, seed_tuple_count, ExactMoments, ScaledVector, DENSE_BUDGET,
    ENUMERATION_BUDGET,
};
pub use table::{exact_l2sq, FrequencyTable};

pub(crate) use table::rational_sqrt_f64;
