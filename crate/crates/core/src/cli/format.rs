// Copyright 2026 The prodsketch Authors
// SPDX-License-Identifier: Apache-2.0

//! Text stream format.
//!
//! ```text
//! # generator=chacha8-diagonal-mixture-v1
//! # n=8
//! # k=3
//! 0,5,5
//! 7,7,7
//! ```
//!
//! Lines starting with `#` before the first tuple may carry `key=value`
//! metadata; other `#` lines and blank lines are ignored. Each body line is
//! `k` comma-separated 0-based decimal symbols. Line numbers in errors are
//! 1-based.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::streamgen::{GenSpec, GENERATOR_ID};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StreamHeader {
    entries: Vec<(String, String)>,
}

impl StreamHeader {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().rev().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.get(key)
            .map(|v| {
                v.parse().map_err(|_| Error::Format { line: 0, message: format!("header {key}={v} is not a number") })
            })
            .transpose()
    }

    pub fn n(&self) -> Result<Option<u64>> {
        self.parsed("n")
    }

    pub fn k(&self) -> Result<Option<usize>> {
        self.parsed("k")
    }

    pub fn m(&self) -> Result<Option<u64>> {
        self.parsed("m")
    }

    fn push_line(&mut self, body: &str) {
        if let Some((key, value)) = body.split_once('=') {
            let key = key.trim();
            if !key.is_empty() && key.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_') {
                self.entries.push((key.to_string(), value.trim().to_string()));
            }
        }
    }
}

/// Streaming reader; reads each line exactly once and never seeks.
pub struct StreamReader<R> {
    input: R,
    line: u64,
    buf: String,
    header: StreamHeader,
    pending: bool,
    in_body: bool,
}

impl<R: BufRead> StreamReader<R> {
    pub fn new(input: R) -> Self {
        StreamReader { input, line: 0, buf: String::new(), header: StreamHeader::default(), pending: false, in_body: false }
    }

    /// Line number of the most recently read line.
    pub fn line(&self) -> u64 {
        self.line
    }

    fn fill(&mut self) -> Result<bool> {
        self.buf.clear();
        if self.input.read_line(&mut self.buf)? == 0 {
            return Ok(false);
        }
        self.line += 1;
        Ok(true)
    }

    /// Consumes header lines up to the first tuple.
    pub fn read_header(&mut self) -> Result<&StreamHeader> {
        while !self.in_body && !self.pending {
            if !self.fill()? {
                break;
            }
            let text = self.buf.trim();
            if let Some(rest) = text.strip_prefix('#') {
                self.header.push_line(rest.trim());
            } else if !text.is_empty() {
                self.pending = true;
            }
        }
        Ok(&self.header)
    }

    pub fn header(&self) -> &StreamHeader {
        &self.header
    }

    /// Parses the next tuple into `out`. Returns `false` at end of input.
    pub fn next_tuple(&mut self, out: &mut Vec<u64>) -> Result<bool> {
        self.read_header()?;
        loop {
            if self.pending {
                self.pending = false;
                self.in_body = true;
            } else if !self.fill()? {
                return Ok(false);
            }
            let text = self.buf.trim();
            if text.is_empty() || text.starts_with('#') {
                continue;
            }
            out.clear();
            for field in text.split(',') {
                let field = field.trim();
                let symbol = field.parse::<u64>().map_err(|_| Error::Format {
                    line: self.line,
                    message: format!("expected a non-negative integer, found {field:?}"),
                })?;
                out.push(symbol);
            }
            return Ok(true);
        }
    }
}

pub fn write_gen_header<W: Write>(out: &mut W, spec: &GenSpec) -> std::io::Result<()> {
    write!(out, "{}", gen_header_text(spec))
}

pub fn gen_header_text(spec: &GenSpec) -> String {
    format!(
        "# generator={GENERATOR_ID}\n# n={}\n# k={}\n# m={}\n# lambda={}\n# rng_seed={}\n",
        spec.n, spec.k, spec.m, spec.lambda, spec.rng_seed
    )
}

pub fn write_tuple<W: Write>(out: &mut W, tuple: &[u64]) -> std::io::Result<()> {
    let mut first = true;
    for x in tuple {
        if !first {
            out.write_all(b",")?;
        }
        first = false;
        write!(out, "{x}")?;
    }
    out.write_all(b"\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read_all(text: &str) -> Result<(StreamHeader, Vec<Vec<u64>>)> {
        let mut reader = StreamReader::new(text.as_bytes());
        let mut out = Vec::new();
        let mut tuple = Vec::new();
        while reader.next_tuple(&mut tuple)? {
            out.push(tuple.clone());
        }
        Ok((reader.header().clone(), out))
    }

    #[test]
    fn header_and_body() {
        let (header, body) = read_all("# n=8\n# k=2\n# just a comment\n\n1,2\n 3 , 4 \n# late=ignored\n5,6").unwrap();
        assert_eq!(header.n().unwrap(), Some(8));
        assert_eq!(header.k().unwrap(), Some(2));
        assert_eq!(header.get("late"), None);
        assert_eq!(body, vec![vec![1, 2], vec![3, 4], vec![5, 6]]);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let err = read_all("# k=2\n1,2\n3,x\n").unwrap_err();
        assert!(matches!(err, Error::Format { line: 3, .. }), "{err}");
        assert!(matches!(read_all("1,-2\n"), Err(Error::Format { line: 1, .. })));
        assert!(matches!(read_all("1,,2\n"), Err(Error::Format { line: 1, .. })));
    }

    #[test]
    fn empty_input() {
        let (header, body) = read_all("").unwrap();
        assert!(header.is_empty() && body.is_empty());
    }

    #[test]
    fn writer_round_trip() {
        let spec = GenSpec::new(8, 3, 2, 0.5, 11).unwrap();
        let mut buf = Vec::new();
        write_gen_header(&mut buf, &spec).unwrap();
        write_tuple(&mut buf, &[0, 5, 7]).unwrap();
        write_tuple(&mut buf, &[1, 1, 1]).unwrap();
        let (header, body) = read_all(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(header.get("generator"), Some(GENERATOR_ID));
        assert_eq!(header.m().unwrap(), Some(2));
        assert_eq!(body, vec![vec![0, 5, 7], vec![1, 1, 1]]);
    }
}
