// Copyright 2026 The prodsketch Authors
// SPDX-License-Identifier: Apache-2.0

//! Median-of-means over a grid of independent product sketches.
//!
//! A bank holds `s2` groups of `s1` [`SketchInstance`]s. Instance
//! `(group, index)` draws its hashes from
//! [`instance_key`](crate::field_hash::derive::instance_key), so growing `s1`
//! or `s2` never changes the seeds of existing instances. The estimate is the
//! lower median of the `s2` group means.

mod shape;
pub mod snapshot;

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field_hash::derive::instance_key;
use crate::product_sketch::{Mode, SketchConfig, SketchInstance};

pub use shape::{derive_shape, AccuracyParams, BankShape, ShapeRule};

/// Instance counts below this are updated on the calling thread.
const PARALLEL_MIN_INSTANCES: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub l2_squared: f64,
    pub l2: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct StateSize {
    /// 64-bit counters: `m`, `t1` and the `k` marginal sums per instance.
    pub counters: u64,
    /// Field elements of hash seed material.
    pub seeds: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimatorBank {
    config: SketchConfig,
    shape: BankShape,
    params: Option<AccuracyParams>,
    master_seed: u64,
    instances: Vec<SketchInstance>,
}

impl EstimatorBank {
    pub fn new(config: SketchConfig, params: AccuracyParams, rule: ShapeRule, master_seed: u64) -> Result<Self> {
        let shape = derive_shape(&params, config.k(), rule)?;
        let mut bank = EstimatorBank::with_shape(config, shape, master_seed);
        bank.params = Some(params);
        Ok(bank)
    }

    pub fn with_shape(config: SketchConfig, shape: BankShape, master_seed: u64) -> Self {
        let s1 = shape.s1();
        let build = |flat: usize| {
            let (group, index) = (flat / s1, flat % s1);
            SketchInstance::from_key(config, instance_key(master_seed, group as u64, index as u64))
        };
        let instances = if shape.instances() >= PARALLEL_MIN_INSTANCES {
            (0..shape.instances()).into_par_iter().map(build).collect()
        } else {
            (0..shape.instances()).map(build).collect()
        };
        EstimatorBank { config, shape, params: None, master_seed, instances }
    }

    pub fn config(&self) -> &SketchConfig {
        &self.config
    }

    pub fn shape(&self) -> &BankShape {
        &self.shape
    }

    pub fn params(&self) -> Option<&AccuracyParams> {
        self.params.as_ref()
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn mode(&self) -> Mode {
        self.instances[0].mode()
    }

    /// Items ingested so far.
    pub fn m(&self) -> i64 {
        self.instances[0].m()
    }

    pub fn instance(&self, group: usize, index: usize) -> &SketchInstance {
        assert!(group < self.shape.s2() && index < self.shape.s1());
        &self.instances[group * self.shape.s1() + index]
    }

    /// Instances in row-major `(group, index)` order.
    pub fn instances(&self) -> &[SketchInstance] {
        &self.instances
    }

    pub(crate) fn instances_mut(&mut self) -> &mut [SketchInstance] {
        &mut self.instances
    }

    fn enter_independence(&mut self) -> Result<()> {
        if self.mode() == Mode::Turnstile {
            return Err(Error::ModeViolation { expected: Mode::Independence, found: Mode::Turnstile });
        }
        self.instances.iter_mut().try_for_each(SketchInstance::mark_independence)
    }

    pub fn ingest(&mut self, a: &[u64]) -> Result<()> {
        self.config.check_tuple(a)?;
        self.enter_independence()?;
        self.instances.iter_mut().try_for_each(|s| s.apply_weighted(a, 1))
    }

    /// Ingests a block of tuples. Duplicate tuples are counted first and each
    /// distinct tuple is applied once with its multiplicity, which leaves the
    /// integer counters identical to item-by-item ingestion. Either every
    /// tuple is ingested or, on a validation error, none is.
    pub fn ingest_batch<'a, I>(&mut self, items: I) -> Result<()>
    where
        I: IntoIterator<Item = &'a [u64]>,
    {
        let mut counts: HashMap<Box<[u64]>, u64> = HashMap::new();
        for a in items {
            self.config.check_tuple(a)?;
            match counts.get_mut(a) {
                Some(c) => *c += 1,
                None => {
                    counts.insert(a.into(), 1);
                }
            }
        }
        self.ingest_counts(counts.iter().map(|(t, &c)| (&t[..], c)))
    }

    /// Applies `(tuple, multiplicity)` pairs.
    pub fn ingest_counts<'a, I>(&mut self, counts: I) -> Result<()>
    where
        I: IntoIterator<Item = (&'a [u64], u64)>,
    {
        let counts: Vec<(&[u64], u64)> = counts.into_iter().collect();
        if counts.is_empty() {
            return Ok(());
        }
        for (a, _) in &counts {
            self.config.check_tuple(a)?;
        }
        self.enter_independence()?;
        let apply = |s: &mut SketchInstance| counts.iter().try_for_each(|&(a, c)| s.apply_weighted(a, c));
        if self.instances.len() >= PARALLEL_MIN_INSTANCES {
            self.instances.par_iter_mut().try_for_each(apply)
        } else {
            self.instances.iter_mut().try_for_each(apply)
        }
    }

    pub fn update_point(&mut self, p: &[u64], delta: f64) -> Result<()> {
        self.instances.iter_mut().try_for_each(|s| s.update_point(p, delta))
    }

    fn instance_values(&self) -> Result<Vec<f64>> {
        match self.mode() {
            Mode::Fresh => Err(Error::EmptyStream),
            Mode::Independence => self.instances.iter().map(SketchInstance::finalize).collect(),
            Mode::Turnstile => self.instances.iter().map(SketchInstance::finalize_turnstile).collect(),
        }
    }

    /// Mean of `Y` within each group, in group order.
    pub fn group_means(&self) -> Result<Vec<f64>> {
        let values = self.instance_values()?;
        let s1 = self.shape.s1();
        Ok(values.chunks(s1).map(|g| g.iter().sum::<f64>() / s1 as f64).collect())
    }

    pub fn estimate(&self) -> Result<Estimate> {
        let mut means = self.group_means()?;
        means.sort_by(f64::total_cmp);
        let l2_squared = means[(means.len() - 1) / 2];
        Ok(Estimate { l2_squared, l2: l2_squared.sqrt() })
    }

    fn check_compatible(&self, other: &EstimatorBank) -> Result<()> {
        if self.config != other.config {
            return Err(Error::ConfigMismatch("banks have different sketch configs".into()));
        }
        if self.shape != other.shape {
            return Err(Error::ConfigMismatch("banks have different shapes".into()));
        }
        if self.master_seed != other.master_seed {
            return Err(Error::ConfigMismatch("banks have different master seeds".into()));
        }
        Ok(())
    }

    /// Adds `other`'s counters instance by instance; the result is the bank
    /// of the concatenated streams.
    pub fn merge(&mut self, other: &EstimatorBank) -> Result<()> {
        self.check_compatible(other)?;
        let mut merged = self.instances.clone();
        merged.iter_mut().zip(&other.instances).try_for_each(|(a, b)| a.merge(b))?;
        self.instances = merged;
        Ok(())
    }

    pub fn state_size(&self) -> StateSize {
        let n = self.shape.instances() as u64;
        let k = self.config.k() as u64;
        StateSize { counters: n * (k + 1), seeds: n * k * 4 }
    }
}

/// Functional form of [`EstimatorBank::merge`].
pub fn merge_banks(a: &EstimatorBank, b: &EstimatorBank) -> Result<EstimatorBank> {
    let mut out = a.clone();
    out.merge(b)?;
    Ok(out)
}
