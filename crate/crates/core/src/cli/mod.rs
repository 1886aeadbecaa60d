// Copyright 2026 The prodsketch Authors
// SPDX-License-Identifier: Apache-2.0

//! Command implementations behind the `prodsketch` binary. Each command
//! takes its parsed options plus explicit I/O handles so it can be driven
//! from tests without a process boundary.

pub mod format;
pub mod selftest;

use std::fs::File;
use std::io::{BufRead, BufWriter, Write};
use std::path::PathBuf;
use std::time::Instant;

use serde::Serialize;

use crate::error::Error;
use crate::estimator::{snapshot, AccuracyParams, EstimatorBank, ShapeRule};
use crate::field_hash::FieldSpec;
use crate::oracle::{exact_l2sq, rational_sqrt_f64, FrequencyTable};
use crate::product_sketch::SketchConfig;
use crate::streamgen::{generate, GenSpec};
use format::{write_gen_header, write_tuple, StreamHeader, StreamReader};

pub const REPORT_VERSION: u32 = 1;

/// Process exit codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitKind {
    Usage = 1,
    Data = 2,
    SelftestFailed = 3,
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ExitKind,
    pub error: Error,
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.error.fmt(f)
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(error: Error) -> Self {
        let kind = match error {
            Error::InvalidWidth(_)
            | Error::DomainTooLarge { .. }
            | Error::InvalidConfig(_)
            | Error::InvalidParams(_)
            | Error::ConfigMismatch(_) => ExitKind::Usage,
            _ => ExitKind::Data,
        };
        CliError { kind, error }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError { kind: ExitKind::Data, error: Error::Io(e) }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

fn usage(message: impl Into<String>) -> CliError {
    CliError { kind: ExitKind::Usage, error: Error::InvalidConfig(message.into()) }
}

/// Resolves `k`/`n` from flags, falling back to the stream header, and
/// records disagreements as warnings.
fn resolve_dims(
    k: Option<usize>,
    n: Option<u64>,
    header: &StreamHeader,
    warnings: &mut Vec<String>,
) -> CliResult<(usize, u64)> {
    let hk = header.k()?;
    let hn = header.n()?;
    if let (Some(f), Some(h)) = (k, hk) {
        if f != h {
            warnings.push(format!("--k {f} differs from header k={h}"));
        }
    }
    if let (Some(f), Some(h)) = (n, hn) {
        if f != h {
            warnings.push(format!("--n {f} differs from header n={h}"));
        }
    }
    let k = k.or(hk).ok_or_else(|| usage("--k is required when the input has no k header"))?;
    let n = n.or(hn).ok_or_else(|| usage("--n is required when the input has no n header"))?;
    Ok((k, n))
}

fn check_m(header: &StreamHeader, m: u64, warnings: &mut Vec<String>) -> CliResult<()> {
    if let Some(hm) = header.m()? {
        if hm != m {
            warnings.push(format!("header m={hm} but {m} tuples were read"));
        }
    }
    Ok(())
}

fn line_error(line: u64, error: Error) -> CliError {
    let message = error.to_string();
    CliError { kind: ExitKind::Data, error: Error::Format { line, message } }
}

#[derive(Clone, Debug)]
pub struct EstimateOptions {
    pub k: Option<usize>,
    pub n: Option<u64>,
    pub epsilon: f64,
    pub delta: f64,
    pub seed: u64,
    pub width: u32,
    pub paper_constants: bool,
    pub snapshot_out: Option<PathBuf>,
    /// Tuples buffered per batch update.
    pub batch: usize,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        EstimateOptions {
            k: None,
            n: None,
            epsilon: 0.2,
            delta: 0.1,
            seed: 0,
            width: 64,
            paper_constants: false,
            snapshot_out: None,
            batch: 1 << 16,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub report_version: u32,
    pub command: &'static str,
    pub estimate_l2_squared: f64,
    pub estimate_l2: f64,
    pub k: usize,
    pub n: u64,
    pub m: u64,
    pub s1: usize,
    pub s2: usize,
    pub master_seed: u64,
    pub elapsed_ms: u64,
    /// Shape rule: `derived` or `paper-constants`.
    pub mode: &'static str,
    pub warnings: Vec<String>,
}

pub fn cmd_estimate<R: BufRead>(opts: &EstimateOptions, input: R) -> CliResult<RunReport> {
    let start = Instant::now();
    let params = AccuracyParams::new(opts.epsilon, opts.delta)?;
    let rule = if opts.paper_constants { ShapeRule::PaperConstants } else { ShapeRule::Derived };
    let mut reader = StreamReader::new(input);
    let header = reader.read_header()?.clone();
    let mut warnings = Vec::new();
    let (k, n) = resolve_dims(opts.k, opts.n, &header, &mut warnings)?;
    let config = SketchConfig::new(k, n, FieldSpec::new(opts.width)?)?;
    let mut bank = EstimatorBank::new(config, params, rule, opts.seed)?;

    let batch_len = opts.batch.max(1);
    let mut batch: Vec<u64> = Vec::with_capacity(batch_len * k);
    let mut tuple = Vec::with_capacity(k);
    let mut m = 0u64;
    let flush = |bank: &mut EstimatorBank, batch: &mut Vec<u64>| -> CliResult<()> {
        bank.ingest_batch(batch.chunks_exact(k))?;
        batch.clear();
        Ok(())
    };
    while reader.next_tuple(&mut tuple)? {
        config.check_tuple(&tuple).map_err(|e| line_error(reader.line(), e))?;
        batch.extend_from_slice(&tuple);
        m += 1;
        if batch.len() == batch_len * k {
            flush(&mut bank, &mut batch)?;
        }
    }
    flush(&mut bank, &mut batch)?;
    check_m(&header, m, &mut warnings)?;

    let estimate = bank.estimate()?;
    if let Some(path) = &opts.snapshot_out {
        let mut out = BufWriter::new(File::create(path)?);
        snapshot::write_snapshot(&bank, &mut out)?;
        out.flush()?;
    }
    Ok(RunReport {
        report_version: REPORT_VERSION,
        command: "estimate",
        estimate_l2_squared: estimate.l2_squared,
        estimate_l2: estimate.l2,
        k,
        n,
        m,
        s1: bank.shape().s1(),
        s2: bank.shape().s2(),
        master_seed: opts.seed,
        elapsed_ms: start.elapsed().as_millis() as u64,
        mode: if opts.paper_constants { "paper-constants" } else { "derived" },
        warnings,
    })
}

#[derive(Clone, Debug)]
pub struct ExactOptions {
    pub k: Option<usize>,
    pub n: Option<u64>,
    /// Refuse inputs whose table would exceed this many entries
    /// (distinct tuples plus `k * n` marginal slots).
    pub max_entries: u64,
}

impl Default for ExactOptions {
    fn default() -> Self {
        ExactOptions { k: None, n: None, max_entries: 1 << 24 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExactReport {
    pub report_version: u32,
    pub command: &'static str,
    pub l2_squared_fraction: String,
    pub l2_squared: f64,
    pub l2: f64,
    pub k: usize,
    pub n: u64,
    pub m: u64,
    pub distinct: usize,
    pub warnings: Vec<String>,
}

pub fn cmd_exact<R: BufRead>(opts: &ExactOptions, input: R) -> CliResult<ExactReport> {
    let mut reader = StreamReader::new(input);
    let header = reader.read_header()?.clone();
    let mut warnings = Vec::new();
    let (k, n) = resolve_dims(opts.k, opts.n, &header, &mut warnings)?;
    let budget_error = || CliError {
        kind: ExitKind::Data,
        error: Error::InvalidConfig(format!("frequency table exceeds the budget of {} entries", opts.max_entries)),
    };
    if (k as u64).checked_mul(n).is_none_or(|slots| slots > opts.max_entries) {
        return Err(budget_error());
    }
    let mut table = FrequencyTable::new(k, n)?;
    let mut tuple = Vec::with_capacity(k);
    while reader.next_tuple(&mut tuple)? {
        table.insert(&tuple).map_err(|e| line_error(reader.line(), e))?;
        if table.distinct() as u64 + k as u64 * n > opts.max_entries {
            return Err(budget_error());
        }
    }
    check_m(&header, table.m(), &mut warnings)?;
    let exact = exact_l2sq(&table)?;
    let l2_squared = num_traits::ToPrimitive::to_f64(&exact).unwrap_or(f64::NAN);
    Ok(ExactReport {
        report_version: REPORT_VERSION,
        command: "exact",
        l2_squared_fraction: exact.to_string(),
        l2_squared,
        l2: rational_sqrt_f64(&exact),
        k,
        n,
        m: table.m(),
        distinct: table.distinct(),
        warnings,
    })
}

/// Writes a generated stream to `out` and returns the header text.
pub fn cmd_gen<W: Write>(spec: &GenSpec, out: W) -> CliResult<String> {
    let mut out = BufWriter::new(out);
    write_gen_header(&mut out, spec)?;
    for tuple in generate(*spec) {
        write_tuple(&mut out, &tuple)?;
    }
    out.flush()?;
    Ok(format::gen_header_text(spec))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn estimate(text: &str, k: usize, n: u64) -> CliResult<RunReport> {
        let opts = EstimateOptions { k: Some(k), n: Some(n), epsilon: 0.5, delta: 0.2, seed: 3, ..Default::default() };
        cmd_estimate(&opts, text.as_bytes())
    }

    #[test]
    fn single_line_estimates_zero() {
        let r = estimate("0,0,0\n", 3, 4).unwrap();
        assert_eq!((r.estimate_l2_squared, r.estimate_l2, r.m), (0.0, 0.0, 1));
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn identical_lines_estimate_zero() {
        let text = "2,1\n".repeat(500);
        assert_eq!(estimate(&text, 2, 4).unwrap().estimate_l2_squared, 0.0);
    }

    #[test]
    fn data_errors() {
        let e = estimate("0,0\n0,9\n", 2, 4).unwrap_err();
        assert_eq!(e.kind, ExitKind::Data);
        assert!(matches!(e.error, Error::Format { line: 2, .. }), "{e}");
        let e = estimate("0,0\n0,1,2\n", 2, 4).unwrap_err();
        assert!(matches!(e.error, Error::Format { line: 2, .. }));
        let e = estimate("0,0\nzz\n", 2, 4).unwrap_err();
        assert!(matches!(e.error, Error::Format { line: 2, .. }));
        assert_eq!(estimate("", 2, 4).unwrap_err().kind, ExitKind::Data);
    }

    #[test]
    fn usage_errors() {
        let opts = EstimateOptions { k: Some(2), n: Some(4), epsilon: 1.5, ..Default::default() };
        assert_eq!(cmd_estimate(&opts, "0,0\n".as_bytes()).unwrap_err().kind, ExitKind::Usage);
        let opts = EstimateOptions::default();
        assert_eq!(cmd_estimate(&opts, "0,0\n".as_bytes()).unwrap_err().kind, ExitKind::Usage);
    }

    #[test]
    fn dimensions_from_header_and_warnings() {
        let opts = EstimateOptions { epsilon: 0.5, delta: 0.2, ..Default::default() };
        let r = cmd_estimate(&opts, "# k=2\n# n=4\n# m=2\n0,1\n1,0\n".as_bytes()).unwrap();
        assert_eq!((r.k, r.n, r.m), (2, 4, 2));
        assert!(r.warnings.is_empty());
        let r = cmd_estimate(&opts, "# k=2\n# n=4\n# m=5\n0,1\n".as_bytes()).unwrap();
        assert_eq!(r.warnings.len(), 1);
    }

    #[test]
    fn exact_hand_example() {
        let opts = ExactOptions { k: Some(2), n: Some(2), ..Default::default() };
        let r = cmd_exact(&opts, "0,0\n1,1\n".as_bytes()).unwrap();
        assert_eq!(r.l2_squared_fraction, "1/4");
        assert_eq!(r.l2_squared, 0.25);
        assert_eq!(r.l2, 0.5);
        let r = cmd_exact(&opts, "1,0\n".as_bytes()).unwrap();
        assert_eq!(r.l2_squared_fraction, "0");
        let r = cmd_exact(&opts, "0,0\n0,1\n1,0\n1,1\n".as_bytes()).unwrap();
        assert_eq!(r.l2_squared, 0.0);
    }

    #[test]
    fn exact_budget_refusal() {
        let opts = ExactOptions { k: Some(2), n: Some(100), max_entries: 203 };
        let text = "0,0\n1,1\n2,2\n3,3\n";
        let e = cmd_exact(&opts, text.as_bytes()).unwrap_err();
        assert_eq!(e.kind, ExitKind::Data);
        let opts = ExactOptions { k: Some(2), n: Some(1 << 40), max_entries: 1 << 24 };
        assert!(cmd_exact(&opts, text.as_bytes()).is_err());
    }

    #[test]
    fn gen_is_reproducible_and_consistent() {
        let spec = GenSpec::new(8, 3, 500, 1.0, 12).unwrap();
        let mut a = Vec::new();
        let mut b = Vec::new();
        let header = cmd_gen(&spec, &mut a).unwrap();
        cmd_gen(&spec, &mut b).unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        assert!(text.starts_with(&header));
        for line in text.lines().filter(|l| !l.starts_with('#')) {
            let xs: Vec<&str> = line.split(',').collect();
            assert!(xs.iter().all(|x| *x == xs[0]));
        }
        let opts = EstimateOptions { epsilon: 0.5, delta: 0.2, ..Default::default() };
        let r = cmd_estimate(&opts, text.as_bytes()).unwrap();
        assert!(r.warnings.is_empty(), "{:?}", r.warnings);
        assert_eq!(r.m, 500);
    }

    #[test]
    fn snapshot_is_written() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bank.snap");
        let opts = EstimateOptions {
            k: Some(2),
            n: Some(4),
            epsilon: 0.5,
            delta: 0.2,
            seed: 8,
            snapshot_out: Some(path.clone()),
            ..Default::default()
        };
        let r = cmd_estimate(&opts, "0,1\n1,1\n3,2\n".as_bytes()).unwrap();
        let bank = snapshot::read_snapshot(std::fs::File::open(&path).unwrap()).unwrap();
        assert_eq!(bank.m(), 3);
        assert_eq!(bank.estimate().unwrap().l2_squared, r.estimate_l2_squared);
    }
}
