// Copyright 2026 The prodsketch Authors
// SPDX-License-Identifier: Apache-2.0

//! Binary bank snapshots.
//!
//! All fields are little-endian 64-bit words:
//!
//! ```text
//! magic        b"PSKSNAP\0"
//! version      1
//! k, n, w      sketch config (w selects the standard reduction polynomial)
//! s1, s2       bank shape
//! master_seed
//! mode         0 fresh, 1 independence, 2 turnstile
//! instances    s1 * s2 records in row-major (group, index) order
//! ```
//!
//! A record is `m, t1, s_1 .. s_k` as signed integers (`k + 2` words) in
//! fresh and independence mode, or the accumulator's IEEE-754 bit pattern
//! (one word) in turnstile mode. Hash seeds are not stored; they are
//! re-derived from the master seed.

use std::io::{Read, Write};

use super::{BankShape, EstimatorBank};
use crate::error::{Error, Result};
use crate::field_hash::FieldSpec;
use crate::product_sketch::{Mode, SketchConfig};

pub const MAGIC: [u8; 8] = *b"PSKSNAP\0";
pub const VERSION: u64 = 1;

pub fn write_snapshot<W: Write>(bank: &EstimatorBank, mut out: W) -> Result<()> {
    let config = bank.config();
    if !config.spec().is_standard() {
        return Err(Error::Snapshot("only standard reduction polynomials can be stored".into()));
    }
    out.write_all(&MAGIC)?;
    let header = [
        VERSION,
        config.k() as u64,
        config.n(),
        config.spec().width() as u64,
        bank.shape().s1() as u64,
        bank.shape().s2() as u64,
        bank.master_seed(),
        bank.mode().code(),
    ];
    for word in header {
        out.write_all(&word.to_le_bytes())?;
    }
    for s in bank.instances() {
        match bank.mode() {
            Mode::Turnstile => out.write_all(&s.accumulator().to_bits().to_le_bytes())?,
            _ => {
                out.write_all(&s.m().to_le_bytes())?;
                out.write_all(&s.t1().to_le_bytes())?;
                for v in s.marginal_sums() {
                    out.write_all(&v.to_le_bytes())?;
                }
            }
        }
    }
    Ok(())
}

pub fn to_bytes(bank: &EstimatorBank) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_snapshot(bank, &mut buf)?;
    Ok(buf)
}

fn read_word<R: Read>(input: &mut R) -> Result<u64> {
    let mut buf = [0u8; 8];
    input.read_exact(&mut buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Snapshot("truncated snapshot".into()),
        _ => Error::Io(e),
    })?;
    Ok(u64::from_le_bytes(buf))
}

pub fn read_snapshot<R: Read>(mut input: R) -> Result<EstimatorBank> {
    let mut magic = [0u8; 8];
    input
        .read_exact(&mut magic)
        .map_err(|_| Error::Snapshot("missing magic".into()))?;
    if magic != MAGIC {
        return Err(Error::Snapshot("bad magic".into()));
    }
    let version = read_word(&mut input)?;
    if version != VERSION {
        return Err(Error::Snapshot(format!("unsupported version {version}")));
    }
    let k = read_word(&mut input)? as usize;
    let n = read_word(&mut input)?;
    let width = u32::try_from(read_word(&mut input)?).map_err(|_| Error::Snapshot("bad width".into()))?;
    let s1 = read_word(&mut input)? as usize;
    let s2 = read_word(&mut input)? as usize;
    let master_seed = read_word(&mut input)?;
    let mode_code = read_word(&mut input)?;
    let mode = Mode::from_code(mode_code).ok_or_else(|| Error::Snapshot(format!("unknown mode {mode_code}")))?;

    let config = SketchConfig::new(k, n, FieldSpec::new(width)?)?;
    let shape = BankShape::new(s1, s2)?;
    let mut bank = EstimatorBank::with_shape(config, shape, master_seed);
    let mut sums = vec![0i64; k];
    for s in bank.instances_mut() {
        match mode {
            Mode::Turnstile => {
                let acc = f64::from_bits(read_word(&mut input)?);
                s.restore(mode, 0, 0, &vec![0; k], acc);
            }
            _ => {
                let m = read_word(&mut input)? as i64;
                let t1 = read_word(&mut input)? as i64;
                for v in sums.iter_mut() {
                    *v = read_word(&mut input)? as i64;
                }
                if mode == Mode::Fresh && (m != 0 || t1 != 0 || sums.iter().any(|&v| v != 0)) {
                    return Err(Error::Snapshot("fresh instance with nonzero counters".into()));
                }
                s.restore(mode, m, t1, &sums, 0.0);
            }
        }
    }
    let mut rest = [0u8; 1];
    if input.read(&mut rest)? != 0 {
        return Err(Error::Snapshot("trailing bytes".into()));
    }
    Ok(bank)
}

pub fn from_bytes(bytes: &[u8]) -> Result<EstimatorBank> {
    read_snapshot(bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bank() -> EstimatorBank {
        let config = SketchConfig::gf64(3, 16).unwrap();
        let mut bank = EstimatorBank::with_shape(config, BankShape::new(3, 2).unwrap(), 0xabcdef);
        for a in [[1, 2, 3], [4, 5, 6], [1, 2, 3], [15, 0, 7]] {
            bank.ingest(&a).unwrap();
        }
        bank
    }

    #[test]
    fn header_layout() {
        let bytes = to_bytes(&bank()).unwrap();
        assert_eq!(&bytes[..8], b"PSKSNAP\0");
        let word = |i: usize| u64::from_le_bytes(bytes[8 + 8 * i..16 + 8 * i].try_into().unwrap());
        assert_eq!(
            (0..8).map(word).collect::<Vec<_>>(),
            vec![1, 3, 16, 64, 3, 2, 0xabcdef, 1]
        );
        // First record: m = 4.
        assert_eq!(word(8), 4);
        assert_eq!(bytes.len(), 8 + 8 * 8 + 6 * 5 * 8);
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let original = bank();
        let bytes = to_bytes(&original).unwrap();
        let restored = from_bytes(&bytes).unwrap();
        assert_eq!(restored.instances(), original.instances());
        assert_eq!(to_bytes(&restored).unwrap(), bytes);
        assert_eq!(restored.estimate().unwrap(), original.estimate().unwrap());
    }

    #[test]
    fn turnstile_round_trip() {
        let config = SketchConfig::gf64(2, 4).unwrap();
        let mut bank = EstimatorBank::with_shape(config, BankShape::new(2, 2).unwrap(), 5);
        bank.update_point(&[1, 3], 0.1).unwrap();
        bank.update_point(&[2, 0], -7.25).unwrap();
        let bytes = to_bytes(&bank).unwrap();
        assert_eq!(bytes.len(), 72 + 4 * 8);
        let restored = from_bytes(&bytes).unwrap();
        assert_eq!(restored.instances(), bank.instances());
    }

    #[test]
    fn corrupt_snapshots_are_rejected() {
        let bytes = to_bytes(&bank()).unwrap();
        assert!(matches!(from_bytes(&bytes[..bytes.len() - 1]), Err(Error::Snapshot(_))));
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(from_bytes(&extra).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(from_bytes(&bad).is_err());
        let mut bad_mode = bytes;
        bad_mode[8 + 7 * 8] = 9;
        assert!(from_bytes(&bad_mode).is_err());
    }
}
