//! Statistical signal processing for graph random processes whose vertex
//! signals live in a (finite or truncated) Hilbert space.
//!
//! A generalized graph signal on `n` vertices with `d` Hilbert coordinates is
//! stored as an `n x d` grid ([`GeneralizedSignal`]). The joint shift operator
//! `A_G ⊗ A_H` has eigenvectors `φ_k ⊗ ψ_τ`, which define the joint Fourier
//! transform ([`spectral::jft`]). A process whose covariance commutes with the
//! joint shift is jointly wide-sense stationary and is fully described by its
//! joint power spectral density ([`Jpsd`]).
//!
//! Modules:
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`graph`] | graphs, Laplacians, products, k-NN and correlation builders |
//! | [`spectral`] | eigenbases, joint Fourier transform, convolution and shift |
//! | [`model`] | JPSD models, sampling, moment estimation, stationarity checks |
//! | [`wiener`] | denoising and completion Wiener filters, MSE, LCE oracle |
//! | [`estimation`] | periodograms, learned bases, trig dictionaries, variational EM |
//! | [`io`] | plain-text formats for graphs, bases, samples and filters |
//!
//! All numerical code is generic over [`Scalar`] (`f32` or `f64`); the
//! `*64` aliases below fix the scalar to `f64`, which is what the experiment
//! drivers use.
//!
//! ```
//! use ggsp_core::{graph::Graph, spectral::{eigendecompose, JointBasis, jft}, SpectralBasis};
//! use ggsp_core::GeneralizedSignal;
//!
//! let g = Graph::<f64>::new(2, [(0, 1, 1.0)]).unwrap();
//! let phi = eigendecompose(&g.laplacian(), 1e-8).unwrap();
//! let basis = JointBasis::new(phi, SpectralBasis::identity(3));
//! let x = GeneralizedSignal::from_fn(2, 3, |v, t| (v + t) as f64);
//! let coeffs = jft(&x, &basis).unwrap();
//! assert!((coeffs.norm() - x.values().norm()).abs() < 1e-12);
//! ```

pub mod error;
pub mod estimation;
pub mod graph;
pub mod io;
pub mod linalg;
pub mod model;
pub mod scalar;
pub mod spectral;
pub mod wiener;

pub use error::{Error, Result};
pub use graph::{Graph, GraphMatrices};
pub use model::{CovarianceOperator, GrpModel, Jpsd};
pub use scalar::Scalar;
pub use spectral::{GeneralizedSignal, JointBasis, SpectralBasis};
pub use wiener::{CompletionFilter, DenoiseFilter, ObservationMask, PartialSignal};

pub type Graph64 = Graph<f64>;
pub type Graph32 = Graph<f32>;
pub type SpectralBasis64 = SpectralBasis<f64>;
pub type SpectralBasis32 = SpectralBasis<f32>;
pub type JointBasis64 = JointBasis<f64>;
pub type JointBasis32 = JointBasis<f32>;
pub type Signal64 = GeneralizedSignal<f64>;
pub type Signal32 = GeneralizedSignal<f32>;
pub type Jpsd64 = Jpsd<f64>;
pub type Jpsd32 = Jpsd<f32>;
pub type GrpModel64 = GrpModel<f64>;
pub type Covariance64 = CovarianceOperator<f64>;
pub type DenoiseFilter64 = DenoiseFilter<f64>;
pub type CompletionFilter64 = CompletionFilter<f64>;
