//! Experiment drivers comparing joint graph/feature processing (`GRP`)
//! against time-vertex (`TV`), per-feature graph (`GSP`) and per-vertex
//! time-series (`TS`) baselines.
//!
//! Three experiment families are provided: Wiener denoising, completion of
//! missing (vertex, feature, hour) cells, and recovery of continuous-time
//! signals from scattered samples. Each run is fully determined by its
//! config and seed and produces an [`Outcome`] that can be written as
//! `report.json`, `curves.csv` and `em.json`.
//!
//! ```no_run
//! use ggsp_experiments::{config::{ExperimentConfig, ExperimentKind}, run_experiment};
//!
//! let cfg = ExperimentConfig { repetitions: Some(2), ..Default::default() };
//! let outcome = run_experiment(ExperimentKind::Denoise, &cfg, 7).unwrap();
//! outcome.write(std::path::Path::new("out")).unwrap();
//! ```

pub mod complete;
pub mod config;
pub mod continuous;
pub mod denoise;
pub mod error;
pub mod ingest;
pub mod metrics;
pub mod missing;
pub mod report;
pub mod synthetic;

mod setup;

use std::time::Instant;

use config::{ExperimentConfig, ExperimentKind};
pub use error::{ExperimentError, Result};
pub use report::Outcome;

/// Validates `cfg` for `kind` and runs the experiment.
pub fn run_experiment(kind: ExperimentKind, cfg: &ExperimentConfig, seed: u64) -> Result<Outcome> {
    cfg.validate(kind)?;
    let started = Instant::now();
    let mut outcome = match kind {
        ExperimentKind::Denoise => denoise::run(cfg, seed)?,
        ExperimentKind::Complete => complete::run(cfg, seed)?,
        ExperimentKind::Continuous => continuous::run(cfg, seed)?,
    };
    outcome.report.runtime_seconds = started.elapsed().as_secs_f64();
    Ok(outcome)
}
