//! Spectral estimation from samples and recovery of continuous-time signals
//! from irregular noisy samples.

mod dictionary;
mod em;
mod periodogram;

pub use dictionary::{
    coefficient_count, design_matrix, equispaced_grid, recover_continuous, vertex_trig_design, BasisSpec,
    SamplePlan, TrigVariant,
};
pub use em::{posterior, variational_em, EmOptions, EmResult, Posterior, RegressionProblem};
pub use periodogram::{gsp_periodogram_per_feature, hilbert_covariance, jpsd_periodogram, learn_hilbert_basis};
