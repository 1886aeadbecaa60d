// Copyright 2026 The prodsketch Authors
// SPDX-License-Identifier: Apache-2.0

//! Counter-mode seed expansion.
//!
//! `derive_word(key, c)` is output number `c + 1` of a SplitMix64 generator
//! seeded with `key`, computed directly from the counter:
//!
//! ```text
//! z = key + (c + 1) * 0x9e3779b97f4a7c15          (wrapping)
//! z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9
//! z = (z ^ (z >> 27)) * 0x94d049bb133111eb
//! z ^ (z >> 31)
//! ```
//!
//! Coefficient `l` (0..4) of hash `i` derived from a key is
//! `derive_word(key, 4 * i + l)` truncated to the low `w` bits. Estimator
//! instance `(group, index)` of a bank uses the key
//! `derive_word(derive_word(master_seed, group), index)`.

const GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[inline]
pub fn derive_word(key: u64, counter: u64) -> u64 {
    mix64(key.wrapping_add(counter.wrapping_add(1).wrapping_mul(GAMMA)))
}

/// Key for the estimator at `(group, index)` of a bank.
#[inline]
pub fn instance_key(master_seed: u64, group: u64, index: u64) -> u64 {
    derive_word(derive_word(master_seed, group), index)
}
