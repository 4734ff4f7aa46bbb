//! Synthetic data mirroring the three experiment families: JWSS
//! Euclidean-vertex samples, (vertex, feature, hour) days, and continuous
//! time signals built from graph modes times sinusoids.

use ggsp_core::estimation::SamplePlan;
use ggsp_core::graph::knn_graph;
use ggsp_core::linalg::kron;
use ggsp_core::spectral::{eigendecompose, fourier_basis_cycle};
use ggsp_core::{Graph, GrpModel, JointBasis, Jpsd, SpectralBasis};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Context, ExperimentError, Result};

/// Spectral weight of graph frequency `λ` in the synthetic models: low graph
/// frequencies carry more power.
pub fn graph_gain(lambda: f64) -> f64 {
    1.0 / (1.0 + lambda.max(0.0))
}

/// `C[i][j] = ρ^|i-j|`.
pub fn toeplitz_correlation(d: usize, rho: f64) -> DMatrix<f64> {
    DMatrix::from_fn(d, d, |i, j| rho.powi(i.abs_diff(j) as i32))
}

/// Covariance over `T` cyclic time steps whose harmonic of frequency `f`
/// has power `1 / (1 + (f / scale)²)`.
pub fn cyclic_time_covariance(times: usize, scale: f64) -> Result<DMatrix<f64>> {
    let basis = fourier_basis_cycle::<f64>(times).context("time basis")?;
    let u = basis.eigenvectors();
    let mut scaled = u.clone();
    for j in 0..times {
        // columns: constant, (cos, sin) pairs, alternating
        let freq = j.div_ceil(2);
        let f = freq as f64 / scale;
        scaled.column_mut(j).scale_mut(1.0 / (1.0 + f * f));
    }
    Ok(scaled * u.transpose())
}

/// Covariance of one day laid out as `f·T + t`: features correlated by
/// [`toeplitz_correlation`], hours by [`cyclic_time_covariance`].
pub fn day_covariance(features: usize, hours: usize, rho: f64, time_scale: f64) -> Result<DMatrix<f64>> {
    Ok(kron(&toeplitz_correlation(features, rho), &cyclic_time_covariance(hours, time_scale)?))
}

/// JWSS model with covariance `Σ_k graph_gain(λ_k) φ_k φ_kᵀ ⊗ C_H`. The
/// Hilbert basis is the eigenbasis of `C_H` and the JPSD is separable.
pub fn separable_model(graph_basis: SpectralBasis<f64>, hilbert_cov: &DMatrix<f64>) -> Result<GrpModel<f64>> {
    // Repeated Hilbert eigenvalues are harmless here, so no gap warning.
    let hilbert = eigendecompose(hilbert_cov, 0.0).context("Hilbert covariance")?;
    let jpsd = Jpsd::new(DMatrix::from_fn(graph_basis.dim(), hilbert.dim(), |k, j| {
        graph_gain(graph_basis.eigenvalues()[k]) * hilbert.eigenvalues()[j].max(0.0)
    }))
    .context("synthetic JPSD")?;
    GrpModel::zero_mean(JointBasis::new(graph_basis, hilbert), jpsd).context("synthetic model")
}

pub fn random_points<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<Vec<f64>> {
    (0..n).map(|_| vec![rng.random::<f64>(), rng.random::<f64>()]).collect()
}

pub fn laplacian_basis(graph: &Graph<f64>) -> Result<SpectralBasis<f64>> {
    eigendecompose(&graph.laplacian(), ggsp_core::spectral::DEFAULT_GAP_TOL).context("graph Laplacian")
}

#[derive(Debug, Clone)]
pub struct EuclideanVertexSpec {
    pub vertices: usize,
    pub features: usize,
    pub k: usize,
    /// Lag-one feature correlation is drawn uniformly from this range.
    pub correlation: [f64; 2],
}

#[derive(Debug, Clone)]
pub struct EuclideanVertexData {
    pub coords: Vec<Vec<f64>>,
    pub graph: Graph<f64>,
    pub rho: f64,
    pub model: GrpModel<f64>,
}

/// Random planar sensor layout, its k-NN graph, and a JWSS model whose
/// feature covariance is `ρ^|i-j|` with random `ρ`.
pub fn euclidean_vertex<R: Rng + ?Sized>(spec: &EuclideanVertexSpec, rng: &mut R) -> Result<EuclideanVertexData> {
    if spec.vertices <= spec.k || spec.features == 0 {
        return Err(ExperimentError::Config(format!(
            "euclidean-vertex data needs more than k = {} vertices and at least one feature",
            spec.k
        )));
    }
    let coords = random_points(spec.vertices, rng);
    let graph = knn_graph(&coords, spec.k).context("k-NN graph")?;
    let (rho, model) = correlated_features(laplacian_basis(&graph)?, spec.features, spec.correlation, rng)?;
    Ok(EuclideanVertexData {
        coords,
        graph,
        rho,
        model,
    })
}

/// Separable model on `graph_basis` with feature covariance `ρ^|i-j|`, `ρ`
/// drawn uniformly from `correlation`.
pub fn correlated_features<R: Rng + ?Sized>(
    graph_basis: SpectralBasis<f64>,
    features: usize,
    correlation: [f64; 2],
    rng: &mut R,
) -> Result<(f64, GrpModel<f64>)> {
    let rho = uniform_in(correlation, rng);
    Ok((rho, separable_model(graph_basis, &toeplitz_correlation(features, rho))?))
}

pub fn uniform_in<R: Rng + ?Sized>([lo, hi]: [f64; 2], rng: &mut R) -> f64 {
    if hi > lo {
        rng.random_range(lo..=hi)
    } else {
        lo
    }
}

pub fn draw_betas<R: Rng + ?Sized>(count: usize, range: [f64; 2], rng: &mut R) -> Vec<f64> {
    (0..count).map(|_| uniform_in(range, rng)).collect()
}

/// `X(t) = Σ_{k,l} d_kl φ_k sin(β_l t)` with independent
/// `d_kl ~ N(0, σ²_kl)`.
#[derive(Debug, Clone)]
pub struct ContinuousModel {
    graph_basis: SpectralBasis<f64>,
    beta: Vec<f64>,
    variances: DMatrix<f64>,
}

impl ContinuousModel {
    /// Default smoothness profile `σ²_kl = exp(-λ_k) / l²` (`l` from 1).
    pub fn new(graph_basis: SpectralBasis<f64>, beta: Vec<f64>) -> Self {
        let variances = DMatrix::from_fn(graph_basis.dim(), beta.len(), |k, l| {
            (-graph_basis.eigenvalues()[k]).exp() / ((l + 1) * (l + 1)) as f64
        });
        Self {
            graph_basis,
            beta,
            variances,
        }
    }

    pub fn with_variances(graph_basis: SpectralBasis<f64>, beta: Vec<f64>, variances: DMatrix<f64>) -> Result<Self> {
        if variances.shape() != (graph_basis.dim(), beta.len()) || variances.iter().any(|v| v.is_nan() || *v < 0.0) {
            return Err(ExperimentError::Config("variances must be a nonnegative n x L grid".into()));
        }
        Ok(Self {
            graph_basis,
            beta,
            variances,
        })
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn graph_basis(&self) -> &SpectralBasis<f64> {
        &self.graph_basis
    }

    /// One draw of the coefficient grid `d` (`n x L`).
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.variances.nrows(), self.variances.ncols());
        for k in 0..d.nrows() {
            for l in 0..d.ncols() {
                let g: f64 = StandardNormal.sample(rng);
                d[(k, l)] = self.variances[(k, l)].sqrt() * g;
            }
        }
        d
    }

    /// Per-vertex sinusoid amplitudes `Φ d` (`n x L`).
    fn amplitudes(&self, coef: &DMatrix<f64>) -> DMatrix<f64> {
        self.graph_basis.eigenvectors() * coef
    }

    fn value(&self, amp: &DMatrix<f64>, v: usize, t: f64) -> f64 {
        self.beta.iter().enumerate().map(|(l, b)| amp[(v, l)] * (b * t).sin()).sum()
    }

    /// Values at every vertex and query time, `n x times.len()`.
    pub fn evaluate_grid(&self, coef: &DMatrix<f64>, times: &[f64]) -> DMatrix<f64> {
        let amp = self.amplitudes(coef);
        DMatrix::from_fn(amp.nrows(), times.len(), |v, i| self.value(&amp, v, times[i]))
    }

    /// Values at the plan's points, in design-matrix row order.
    pub fn evaluate_plan(&self, coef: &DMatrix<f64>, plan: &SamplePlan<f64>) -> DVector<f64> {
        let amp = self.amplitudes(coef);
        DVector::from_iterator(plan.total(), plan.rows().map(|(v, t)| self.value(&amp, v, t)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ggsp_core::model::{check_jwss, estimate_moments, sample_grp_with};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn euclidean_vertex_model_is_jointly_stationary() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let spec = EuclideanVertexSpec {
            vertices: 12,
            features: 3,
            k: 3,
            correlation: [0.6, 0.9],
        };
        let data = euclidean_vertex(&spec, &mut rng).unwrap();
        assert!((0.6..=0.9).contains(&data.rho));
        let c = data.model.covariance();
        assert!(check_jwss(&c, data.model.basis(), 1e-8).unwrap().stationary);
        // per-vertex feature block is a multiple of the Toeplitz matrix
        let block = c.vertex_block(0);
        let t = toeplitz_correlation(3, data.rho);
        let ratio = block[(0, 0)] / t[(0, 0)];
        assert!((&block - t * ratio).amax() < 1e-10);

        let xs = sample_grp_with(&data.model, 4000, &mut rng);
        let m = estimate_moments(&xs).unwrap();
        let rel = (m.cov.matrix() - c.matrix()).norm() / c.matrix().norm();
        assert!(rel < 0.1, "{rel}");
    }

    #[test]
    fn day_covariance_layout() {
        let c = day_covariance(2, 4, 0.5, 2.0).unwrap();
        assert_eq!(c.shape(), (8, 8));
        let time = cyclic_time_covariance(4, 2.0).unwrap();
        // cross-feature block at lag one is ρ times the time covariance
        let cross = c.view((0, 4), (4, 4));
        assert!((cross - &time * 0.5).amax() < 1e-12);
        // circulant: invariant under a cyclic shift of hours
        for i in 0..4 {
            for j in 0..4 {
                assert!((time[(i, j)] - time[((i + 1) % 4, (j + 1) % 4)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn continuous_model_values() {
        let g = Graph::new(3, [(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        let basis = laplacian_basis(&g).unwrap();
        let zero = ContinuousModel::with_variances(basis.clone(), vec![1.0, 2.0], DMatrix::zeros(3, 2)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let d = zero.draw(&mut rng);
        assert_eq!(zero.evaluate_grid(&d, &[0.1, 1.0, -2.0]), DMatrix::zeros(3, 3));

        let model = ContinuousModel::new(basis.clone(), vec![2.0]);
        let mut d = DMatrix::zeros(3, 1);
        d[(0, 0)] = 1.5;
        let vals = model.evaluate_grid(&d, &[0.3]);
        for v in 0..3 {
            let expect = 1.5 * basis.eigenvectors()[(v, 0)] * (0.6f64).sin();
            assert!((vals[(v, 0)] - expect).abs() < 1e-12);
        }
        let plan = SamplePlan::new(vec![vec![0.3], vec![], vec![0.3, -1.0]]).unwrap();
        let at = model.evaluate_plan(&d, &plan);
        assert_eq!(at.len(), 3);
        assert!((at[0] - vals[(0, 0)]).abs() < 1e-15);
        assert!((at[1] - vals[(2, 0)]).abs() < 1e-15);
        assert!((model.variances[(0, 0)] - 1.0).abs() < 1e-12);
    }
}
