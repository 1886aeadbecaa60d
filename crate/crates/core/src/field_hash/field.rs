// Copyright 2026 The prodsketch Authors
// SPDX-License-Identifier: Apache-2.0

//! Arithmetic in the binary extension fields GF(2^w).
//!
//! Elements are stored in the low `w` bits of a `u64`, bit `i` being the
//! coefficient of `x^i`. Addition is XOR; multiplication is the carry-less
//! product reduced modulo a fixed irreducible polynomial per width:
//!
//! | w  | reduction polynomial              | low-order mask |
//! |----|-----------------------------------|----------------|
//! | 1  | x + 1                             | `0x1`          |
//! | 2  | x^2 + x + 1                       | `0x3`          |
//! | 4  | x^4 + x + 1                       | `0x3`          |
//! | 8  | x^8 + x^4 + x^3 + x + 1           | `0x1b`         |
//! | 16 | x^16 + x^5 + x^3 + x + 1          | `0x2b`         |
//! | 32 | x^32 + x^7 + x^3 + x^2 + 1        | `0x8d`         |
//! | 64 | x^64 + x^4 + x^3 + x + 1          | `0x1b`         |
//!
//! The mask omits the leading `x^w` term. These polynomials are part of the
//! snapshot format: a snapshot only records `w`, so changing an entry here
//! silently changes every hash function derived from a stored seed.

use std::fmt;
use std::ops::{Add, AddAssign};

use crate::error::{Error, Result};

/// Supported widths paired with the low-order terms of their modulus.
const STANDARD_REDUCTIONS: [(u32, u64); 7] = [
    (1, 0x1),
    (2, 0x3),
    (4, 0x3),
    (8, 0x1b),
    (16, 0x2b),
    (32, 0x8d),
    (64, 0x1b),
];

/// An element of GF(2^w). The width is carried by the [`FieldSpec`] it is
/// used with.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FieldElement(u64);

impl FieldElement {
    pub const ZERO: FieldElement = FieldElement(0);
    pub const ONE: FieldElement = FieldElement(1);

    #[inline]
    pub const fn new(bits: u64) -> Self {
        FieldElement(bits)
    }

    #[inline]
    pub const fn value(self) -> u64 {
        self.0
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#x}", self.0)
    }
}

#[allow(clippy::suspicious_arithmetic_impl)]
impl Add for FieldElement {
    type Output = FieldElement;

    #[inline]
    fn add(self, rhs: Self) -> Self {
        FieldElement(self.0 ^ rhs.0)
    }
}

#[allow(clippy::suspicious_op_assign_impl)]
impl AddAssign for FieldElement {
    #[inline]
    fn add_assign(&mut self, rhs: Self) {
        self.0 ^= rhs.0;
    }
}

/// Width and modulus of a binary extension field.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FieldSpec {
    width: u32,
    reduction: u64,
}

impl FieldSpec {
    /// The field GF(2^width) with its standard reduction polynomial.
    pub fn new(width: u32) -> Result<Self> {
        STANDARD_REDUCTIONS
            .iter()
            .find(|(w, _)| *w == width)
            .map(|&(width, reduction)| FieldSpec { width, reduction })
            .ok_or(Error::InvalidWidth(width))
    }

    /// A field description with an explicit modulus. The polynomial is not
    /// checked for irreducibility; this exists so tests and the self-test
    /// negative control can build deliberately broken fields.
    pub fn with_reduction(width: u32, reduction: u64) -> Result<Self> {
        let standard = FieldSpec::new(width)?;
        if reduction & !standard.mask() != 0 || (width == 64 && reduction == 0) {
            return Err(Error::InvalidConfig(format!(
                "reduction mask {reduction:#x} does not fit below x^{width}"
            )));
        }
        Ok(FieldSpec { width, reduction })
    }

    pub fn gf64() -> Self {
        FieldSpec { width: 64, reduction: 0x1b }
    }

    #[inline]
    pub fn width(&self) -> u32 {
        self.width
    }

    /// Low-order terms of the modulus (the `x^w` term is implicit).
    #[inline]
    pub fn reduction(&self) -> u64 {
        self.reduction
    }

    pub fn is_standard(&self) -> bool {
        FieldSpec::new(self.width).map(|s| s == *self).unwrap_or(false)
    }

    #[inline]
    pub fn mask(&self) -> u64 {
        if self.width == 64 {
            u64::MAX
        } else {
            (1u64 << self.width) - 1
        }
    }

    /// Number of field elements, 2^w.
    #[inline]
    pub fn order(&self) -> u128 {
        1u128 << self.width
    }

    #[inline]
    pub fn contains(&self, a: FieldElement) -> bool {
        a.0 & !self.mask() == 0
    }

    pub fn element(&self, bits: u64) -> Result<FieldElement> {
        let a = FieldElement(bits);
        if self.contains(a) {
            Ok(a)
        } else {
            Err(Error::ElementOutOfRange { value: bits, width: self.width })
        }
    }

    /// Iterates over every element; intended for small widths.
    pub fn elements(&self) -> impl Iterator<Item = FieldElement> {
        let mask = self.mask();
        (0..=mask).map(FieldElement)
    }

    #[inline]
    pub fn mul(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        debug_assert!(self.contains(a) && self.contains(b));
        FieldElement(reduce(clmul(a.0, b.0), self.width, self.reduction))
    }

    pub fn pow(&self, base: FieldElement, mut exp: u64) -> FieldElement {
        let mut acc = FieldElement::ONE;
        let mut sq = base;
        while exp != 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, sq);
            }
            sq = self.mul(sq, sq);
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse via a^(2^w - 2). Zero maps to zero. Only a true
    /// inverse when the modulus is irreducible.
    pub fn inverse(&self, a: FieldElement) -> FieldElement {
        let exp = if self.width == 64 { u64::MAX - 1 } else { (1u64 << self.width) - 2 };
        self.pow(a, exp)
    }
}

/// `field_mul` in free-function form.
#[inline]
pub fn field_mul(a: FieldElement, b: FieldElement, spec: &FieldSpec) -> FieldElement {
    spec.mul(a, b)
}

/// Reduces a carry-less product of two `width`-bit values.
#[inline]
fn reduce(product: u128, width: u32, reduction: u64) -> u64 {
    let mask: u128 = if width == 64 { u64::MAX as u128 } else { (1u128 << width) - 1 };
    let mut lo = product & mask;
    let mut hi = product >> width;
    // deg(reduction) < width, so each fold strictly lowers the degree of `hi`.
    while hi != 0 {
        let folded = clmul(hi as u64, reduction);
        lo ^= folded & mask;
        hi = folded >> width;
    }
    lo as u64
}

/// Carry-less 64x64 -> 128 bit product.
#[inline]
pub(crate) fn clmul(a: u64, b: u64) -> u128 {
    #[cfg(target_arch = "x86_64")]
    {
        if std::arch::is_x86_feature_detected!("pclmulqdq") {
            // SAFETY: the feature was just detected at runtime.
            return unsafe { clmul_pclmul(a, b) };
        }
    }
    clmul_portable(a, b)
}

#[inline]
pub(crate) fn clmul_portable(a: u64, b: u64) -> u128 {
    let a = a as u128;
    let mut acc = 0u128;
    let mut b = b;
    while b != 0 {
        let i = b.trailing_zeros();
        acc ^= a << i;
        b &= b - 1;
    }
    acc
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "pclmulqdq", enable = "sse2")]
unsafe fn clmul_pclmul(a: u64, b: u64) -> u128 {
    use std::arch::x86_64::{_mm_clmulepi64_si128, _mm_cvtsi128_si64, _mm_cvtsi64_si128, _mm_srli_si128};
    let p = _mm_clmulepi64_si128::<0x00>(_mm_cvtsi64_si128(a as i64), _mm_cvtsi64_si128(b as i64));
    let lo = _mm_cvtsi128_si64(p) as u64;
    let hi = _mm_cvtsi128_si64(_mm_srli_si128::<8>(p)) as u64;
    (hi as u128) << 64 | lo as u128
}
