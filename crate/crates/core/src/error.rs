// Copyright 2026 The prodsketch Authors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

use crate::product_sketch::Mode;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported field width {0}; expected one of 1, 2, 4, 8, 16, 32, 64")]
    InvalidWidth(u32),

    #[error("field element {value:#x} does not fit in GF(2^{width})")]
    ElementOutOfRange { value: u64, width: u32 },

    #[error("alphabet size {n} exceeds field size 2^{width}")]
    DomainTooLarge { n: u64, width: u32 },

    #[error("symbol {symbol} in dimension {dim} is outside [0, {n})")]
    SymbolOutOfRange { dim: usize, symbol: u64, n: u64 },

    #[error("expected a {expected}-tuple, got {got} components")]
    ArityMismatch { expected: usize, got: usize },

    #[error("sketch is in {found} mode, operation requires {expected} mode")]
    ModeViolation { expected: Mode, found: Mode },

    #[error("cannot finalize an empty stream (m = 0)")]
    EmptyStream,

    #[error("configuration mismatch: {0}")]
    ConfigMismatch(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid accuracy parameters: {0}")]
    InvalidParams(String),

    #[error("counter overflow")]
    CounterOverflow,

    #[error("enumeration of {tuples} seed tuples exceeds the budget of {cap}")]
    EnumerationBudget { tuples: u128, cap: u64 },

    #[error("census points must be distinct")]
    NonDistinctPoints,

    #[error("malformed snapshot: {0}")]
    Snapshot(String),

    #[error("line {line}: {message}")]
    Format { line: u64, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
