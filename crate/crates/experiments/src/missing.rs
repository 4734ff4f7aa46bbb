//! Missing-data models for (vertex, feature, time) grids.
//!
//! A grid with `F` features and `T` time steps is stored as an
//! `n x (F·T)` signal whose column `f·T + t` holds feature `f` at time `t`.

use ggsp_core::ObservationMask;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};
use serde::{Deserialize, Serialize};

use crate::error::{ExperimentError, Result};

/// Missing-data family selected in a config; the amount is supplied by the
/// hidden-fraction sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MissingModel {
    /// Runs of `1 + Geometric(q)` consecutive time steps on selected lanes.
    Consecutive {
        #[serde(default = "default_q")]
        q: f64,
    },
    /// Independent cells.
    Uniform,
}

fn default_q() -> f64 {
    1.0 / 12.0
}

impl Default for MissingModel {
    fn default() -> Self {
        MissingModel::Consecutive { q: default_q() }
    }
}

impl MissingModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            MissingModel::Consecutive { q } => MissingSpec::Consecutive { q, lanes: 0 }.validate(),
            MissingModel::Uniform => Ok(()),
        }
    }
}

/// Fully specified missing-data draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MissingSpec {
    /// Hide one run on each of `lanes` distinct (vertex, feature) lanes. The
    /// run starts at a uniform time step, has length `1 + Geometric(q)` and
    /// is clipped at the end of the day.
    Consecutive { q: f64, lanes: usize },
    /// Hide each cell independently with probability `rate`.
    Uniform { rate: f64 },
}

impl MissingSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            MissingSpec::Consecutive { q, .. } if !(q > 0.0 && q <= 1.0) => {
                Err(ExperimentError::InvalidSpec(format!("geometric parameter q = {q} outside (0, 1]")))
            }
            MissingSpec::Uniform { rate } if !(0.0..1.0).contains(&rate) => {
                Err(ExperimentError::InvalidSpec(format!("missing rate {rate} outside [0, 1)")))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LaneShape {
    pub vertices: usize,
    pub features: usize,
    pub times: usize,
}

impl LaneShape {
    pub fn columns(&self) -> usize {
        self.features * self.times
    }

    pub fn column(&self, feature: usize, time: usize) -> usize {
        feature * self.times + time
    }

    pub fn cells(&self) -> usize {
        self.vertices * self.columns()
    }

    pub fn lanes(&self) -> usize {
        self.vertices * self.features
    }
}

pub fn make_missing_mask<R: Rng + ?Sized>(spec: &MissingSpec, shape: LaneShape, rng: &mut R) -> Result<ObservationMask> {
    spec.validate()?;
    let mut mask = ObservationMask::all_observed(shape.vertices, shape.columns());
    match *spec {
        MissingSpec::Consecutive { q, lanes } => {
            if lanes > shape.lanes() {
                return Err(ExperimentError::InvalidSpec(format!(
                    "{lanes} lanes requested but the grid has {}",
                    shape.lanes()
                )));
            }
            if shape.times == 0 {
                return Ok(mask);
            }
            let geo = Geometric::new(q).map_err(|e| ExperimentError::InvalidSpec(e.to_string()))?;
            for lane in sample(rng, shape.lanes(), lanes) {
                let (v, f) = (lane / shape.features, lane % shape.features);
                let start = rng.random_range(0..shape.times);
                let len = (1 + geo.sample(rng)).min((shape.times - start) as u64) as usize;
                for t in start..start + len {
                    mask.set(v, shape.column(f, t), false);
                }
            }
        }
        MissingSpec::Uniform { rate } => {
            for v in 0..shape.vertices {
                for c in 0..shape.columns() {
                    if rng.random::<f64>() < rate {
                        mask.set(v, c, false);
                    }
                }
            }
        }
    }
    Ok(mask)
}

pub fn make_missing_mask_seeded(spec: &MissingSpec, shape: LaneShape, seed: u64) -> Result<ObservationMask> {
    make_missing_mask(spec, shape, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Mean length of a `1 + Geometric(q)` run started uniformly in `0..times`
/// and clipped at the end: `(1/T) Σ_{R=1..T} Σ_{j<R} (1-q)^j`.
pub fn expected_run_length(q: f64, times: usize) -> f64 {
    if times == 0 {
        return 0.0;
    }
    let total: f64 = (1..=times)
        .map(|r| (0..r).map(|j| (1.0 - q).powi(j as i32)).sum::<f64>())
        .sum();
    total / times as f64
}

/// Lanes per day giving an expected hidden fraction of about `fraction`,
/// capped at the number of lanes.
pub fn lanes_for_fraction(fraction: f64, q: f64, shape: LaneShape) -> usize {
    let run = expected_run_length(q, shape.times);
    if run <= 0.0 {
        return 0;
    }
    let lanes = (fraction * shape.cells() as f64 / run).round() as usize;
    lanes.min(shape.lanes())
}
