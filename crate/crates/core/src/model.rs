//! Jointly stationary process models: covariance synthesis, Gaussian
//! sampling, moment estimation and stationarity diagnostics.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::{kron, max_abs, max_asymmetry};
use crate::spectral::{ijft, GeneralizedSignal, JointBasis};
use crate::{Error, Result, Scalar};

/// Joint power spectral density `p(k, τ)` on the `n x d` coefficient grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Jpsd<T: Scalar> {
    values: DMatrix<T>,
}

impl<T: Scalar> Jpsd<T> {
    pub fn new(values: DMatrix<T>) -> Result<Self> {
        for k in 0..values.nrows() {
            for t in 0..values.ncols() {
                let v = values[(k, t)];
                if !v.is_finite() || v < T::zero() {
                    return Err(Error::NegativePsd(k, t));
                }
            }
        }
        Ok(Self { values })
    }

    pub fn constant(n: usize, d: usize, c: T) -> Result<Self> {
        Self::new(DMatrix::from_element(n, d, c))
    }

    pub fn zeros(n: usize, d: usize) -> Self {
        Self {
            values: DMatrix::zeros(n, d),
        }
    }

    pub fn values(&self) -> &DMatrix<T> {
        &self.values
    }

    pub fn into_values(self) -> DMatrix<T> {
        self.values
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn d(&self) -> usize {
        self.values.ncols()
    }

    pub fn total(&self) -> T {
        self.values.sum()
    }

    /// `max(self - other, 0)` entrywise, e.g. to strip a known noise floor.
    pub fn saturating_sub(&self, other: &Jpsd<T>) -> Result<Jpsd<T>> {
        if self.values.shape() != other.values.shape() {
            return Err(Error::shape(format!("{:?}", self.values.shape()), format!("{:?}", other.values.shape())));
        }
        Ok(Jpsd {
            values: self.values.zip_map(&other.values, |a, b| (a - b).max(T::zero())),
        })
    }
}

/// Dense covariance on row-major vectorized `n x d` signals.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceOperator<T: Scalar> {
    matrix: DMatrix<T>,
    n: usize,
    d: usize,
}

impl<T: Scalar> CovarianceOperator<T> {
    /// Checks shape and symmetry (relative `1e-10`). Positive
    /// semidefiniteness is not verified here.
    pub fn new(matrix: DMatrix<T>, n: usize, d: usize) -> Result<Self> {
        let nd = n * d;
        if matrix.shape() != (nd, nd) {
            return Err(Error::shape(format!("{nd}x{nd} covariance"), format!("{:?}", matrix.shape())));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput("covariance".into()));
        }
        let asym = max_asymmetry(&matrix);
        if asym > T::lit(1e-10) * T::one().max(max_abs(&matrix)) {
            return Err(Error::NotSymmetric(asym.as_f64()));
        }
        Ok(Self { matrix, n, d })
    }

    pub fn zeros(n: usize, d: usize) -> Self {
        Self {
            matrix: DMatrix::zeros(n * d, n * d),
            n,
            d,
        }
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<T> {
        self.matrix
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Cross block `K(s, t)`: `n x n` with entries `C[v·d+s, w·d+t]`.
    pub fn cross_block(&self, s: usize, t: usize) -> DMatrix<T> {
        let d = self.d;
        DMatrix::from_fn(self.n, self.n, |v, w| self.matrix[(v * d + s, w * d + t)])
    }

    /// Vertex-domain block `K(t, t)` at Hilbert coordinate `t`.
    pub fn time_block(&self, t: usize) -> DMatrix<T> {
        self.cross_block(t, t)
    }

    /// Hilbert-domain auto-covariance `K_m` of vertex `m` (`d x d`).
    pub fn vertex_block(&self, m: usize) -> DMatrix<T> {
        let d = self.d;
        self.matrix.view((m * d, m * d), (d, d)).clone_owned()
    }

    pub fn trace(&self) -> T {
        self.matrix.trace()
    }

    /// Covariance `T C Tᵀ` of a linearly transformed process.
    pub fn transform(&self, op: &DMatrix<T>) -> Result<Self> {
        if op.shape() != self.matrix.shape() {
            return Err(Error::shape(format!("{:?}", self.matrix.shape()), format!("{:?}", op.shape())));
        }
        let m = op * &self.matrix * op.transpose();
        Ok(Self {
            matrix: (&m + m.transpose()) * T::lit(0.5),
            n: self.n,
            d: self.d,
        })
    }
}

/// `C = Σ p(k,τ) (φ_k ⊗ ψ_τ)(φ_k ⊗ ψ_τ)ᵀ`.
pub fn covariance_from_jpsd<T: Scalar>(jpsd: &Jpsd<T>, b: &JointBasis<T>) -> Result<CovarianceOperator<T>> {
    b.check_grid(jpsd.values.shape(), "JPSD")?;
    let u = b.dense_matrix();
    let d = b.d();
    let mut scaled = u.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col.scale_mut(jpsd.values[(j / d, j % d)]);
    }
    let c = scaled * u.transpose();
    Ok(CovarianceOperator {
        matrix: (&c + c.transpose()) * T::lit(0.5),
        n: b.n(),
        d,
    })
}

/// Gaussian jointly stationary process: basis, spectral density and mean.
#[derive(Debug, Clone, PartialEq)]
pub struct GrpModel<T: Scalar> {
    basis: JointBasis<T>,
    jpsd: Jpsd<T>,
    mean: GeneralizedSignal<T>,
}

impl<T: Scalar> GrpModel<T> {
    pub fn new(basis: JointBasis<T>, jpsd: Jpsd<T>, mean: GeneralizedSignal<T>) -> Result<Self> {
        basis.check_grid(jpsd.values.shape(), "JPSD")?;
        basis.check_grid(mean.values().shape(), "mean")?;
        Ok(Self { basis, jpsd, mean })
    }

    pub fn zero_mean(basis: JointBasis<T>, jpsd: Jpsd<T>) -> Result<Self> {
        let mean = GeneralizedSignal::zeros(basis.n(), basis.d());
        Self::new(basis, jpsd, mean)
    }

    pub fn basis(&self) -> &JointBasis<T> {
        &self.basis
    }

    pub fn jpsd(&self) -> &Jpsd<T> {
        &self.jpsd
    }

    pub fn mean(&self) -> &GeneralizedSignal<T> {
        &self.mean
    }

    pub fn covariance(&self) -> CovarianceOperator<T> {
        covariance_from_jpsd(&self.jpsd, &self.basis).expect("model dimensions validated at construction")
    }
}

/// Draws `m` samples `mean + ijft(Z)` with independent
/// `Z(k,τ) ~ N(0, p(k,τ))`, drawn in row-major coefficient order.
pub fn sample_grp<T: Scalar>(model: &GrpModel<T>, m: usize, seed: u64) -> Vec<GeneralizedSignal<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_grp_with(model, m, &mut rng)
}

pub fn sample_grp_with<T: Scalar, R: rand::Rng + ?Sized>(
    model: &GrpModel<T>,
    m: usize,
    rng: &mut R,
) -> Vec<GeneralizedSignal<T>> {
    let (n, d) = (model.basis.n(), model.basis.d());
    let sd = model.jpsd.values.map(|p| p.sqrt());
    (0..m)
        .map(|_| {
            let mut z = DMatrix::zeros(n, d);
            for k in 0..n {
                for t in 0..d {
                    let g: f64 = StandardNormal.sample(rng);
                    z[(k, t)] = sd[(k, t)] * T::lit(g);
                }
            }
            let x = ijft(&z, &model.basis).expect("model dimensions validated at construction");
            GeneralizedSignal::new(x.into_values() + model.mean.values()).expect("finite sample")
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationarityReport<T> {
    pub stationary: bool,
    /// Normalized commutator norm (worst block for the vertex and Hilbert
    /// checks).
    pub norm: T,
}

fn commutator_norm<T: Scalar>(c: &DMatrix<T>, s: &DMatrix<T>) -> T {
    let comm = c * s - s * c;
    comm.norm() / T::one().max(c.norm() * s.norm())
}

/// Joint check: `‖CS - SC‖_F / max(1, ‖C‖_F ‖S‖_F)` with `S = A_G ⊗ A_H`.
pub fn check_jwss<T: Scalar>(c: &CovarianceOperator<T>, b: &JointBasis<T>, tol: T) -> Result<StationarityReport<T>> {
    if (c.n, c.d) != (b.n(), b.d()) {
        return Err(Error::shape(format!("{}x{} grid", b.n(), b.d()), format!("{}x{}", c.n, c.d)));
    }
    let s = kron(&b.graph().matrix(), &b.hilbert().matrix());
    let norm = commutator_norm(&c.matrix, &s);
    Ok(StationarityReport {
        stationary: norm <= tol,
        norm,
    })
}

/// Vertex-domain check: every `K(t, t)` must commute with `A_G`.
pub fn check_vwss<T: Scalar>(c: &CovarianceOperator<T>, a_g: &DMatrix<T>, tol: T) -> Result<StationarityReport<T>> {
    if a_g.shape() != (c.n, c.n) {
        return Err(Error::shape(format!("{0}x{0} graph operator", c.n), format!("{:?}", a_g.shape())));
    }
    let norm = (0..c.d)
        .map(|t| commutator_norm(&c.time_block(t), a_g))
        .fold(T::zero(), |a, v| a.max(v));
    Ok(StationarityReport {
        stationary: norm <= tol,
        norm,
    })
}

/// Hilbert-domain check: every vertex block `K_m` must commute with `A_H`.
pub fn check_hwss<T: Scalar>(c: &CovarianceOperator<T>, a_h: &DMatrix<T>, tol: T) -> Result<StationarityReport<T>> {
    if a_h.shape() != (c.d, c.d) {
        return Err(Error::shape(format!("{0}x{0} Hilbert operator", c.d), format!("{:?}", a_h.shape())));
    }
    let norm = (0..c.n)
        .map(|m| commutator_norm(&c.vertex_block(m), a_h))
        .fold(T::zero(), |a, v| a.max(v));
    Ok(StationarityReport {
        stationary: norm <= tol,
        norm,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Moments<T: Scalar> {
    pub mean: GeneralizedSignal<T>,
    pub cov: CovarianceOperator<T>,
}

/// Sample mean and `1/m`-normalized sample covariance.
pub fn estimate_moments<T: Scalar>(samples: &[GeneralizedSignal<T>]) -> Result<Moments<T>> {
    if samples.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: samples.len(),
        });
    }
    let (n, d) = (samples[0].n(), samples[0].d());
    if let Some(bad) = samples.iter().find(|s| (s.n(), s.d()) != (n, d)) {
        return Err(Error::shape(format!("{n}x{d} samples"), format!("{}x{}", bad.n(), bad.d())));
    }
    let m = T::from_count(samples.len());
    let mut mean = DVector::zeros(n * d);
    for s in samples {
        mean += s.vectorize();
    }
    mean.unscale_mut(m);
    let mut cov = DMatrix::zeros(n * d, n * d);
    for s in samples {
        let c = s.vectorize() - &mean;
        cov.ger(T::one(), &c, &c, T::one());
    }
    cov.unscale_mut(m);
    Ok(Moments {
        mean: GeneralizedSignal::from_vectorized(&mean, n, d)?,
        cov: CovarianceOperator {
            matrix: (&cov + cov.transpose()) * T::lit(0.5),
            n,
            d,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use crate::linalg::{max_abs_diff, relative_frobenius};
    use crate::spectral::{eigendecompose, fourier_basis_cycle, jft, SpectralBasis};
    use proptest::prelude::*;

    fn basis() -> JointBasis<f64> {
        let g = Graph::new(4, [(0, 1, 1.0), (1, 2, 2.0), (2, 3, 0.5), (0, 3, 1.5), (0, 2, 0.7)]).unwrap();
        JointBasis::new(
            eigendecompose(&g.laplacian(), 1e-8).unwrap(),
            fourier_basis_cycle(3).unwrap(),
        )
    }

    fn jpsd() -> Jpsd<f64> {
        Jpsd::new(DMatrix::from_fn(4, 3, |k, t| 0.2 + ((k * 3 + t * 5) % 7) as f64)).unwrap()
    }

    #[test]
    fn jpsd_rejects_negative() {
        assert_eq!(Jpsd::new(DMatrix::from_row_slice(1, 2, &[1.0, -0.1])), Err(Error::NegativePsd(0, 1)));
        assert_eq!(Jpsd::new(DMatrix::from_row_slice(1, 1, &[f64::NAN])), Err(Error::NegativePsd(0, 0)));
    }

    #[test]
    fn covariance_special_cases() {
        let b = basis();
        let c = covariance_from_jpsd(&Jpsd::constant(4, 3, 2.5).unwrap(), &b).unwrap();
        assert!(max_abs_diff(c.matrix(), &(DMatrix::identity(12, 12) * 2.5)) < 1e-12);

        let mut ind = DMatrix::zeros(4, 3);
        ind[(0, 0)] = 1.0;
        let c = covariance_from_jpsd(&Jpsd::new(ind).unwrap(), &b).unwrap();
        let v = b.joint_vector(0, 0);
        assert!(max_abs_diff(c.matrix(), &(&v * v.transpose())) < 1e-12);

        let p = jpsd();
        let c = covariance_from_jpsd(&p, &b).unwrap();
        let mut eig: Vec<f64> = c.matrix().clone().symmetric_eigenvalues().iter().copied().collect();
        let mut want: Vec<f64> = p.values().iter().copied().collect();
        eig.sort_by(f64::total_cmp);
        want.sort_by(f64::total_cmp);
        for (a, b) in eig.iter().zip(&want) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!(covariance_from_jpsd(&Jpsd::zeros(3, 3), &b).is_err());
    }

    #[test]
    fn zero_psd_samples_equal_mean() {
        let b = basis();
        let mean = GeneralizedSignal::from_fn(4, 3, |v, t| (v * t) as f64);
        let model = GrpModel::new(b, Jpsd::zeros(4, 3), mean.clone()).unwrap();
        for s in sample_grp(&model, 5, 9) {
            assert_eq!(s, mean);
        }
    }

    #[test]
    fn sampling_is_deterministic_and_consistent() {
        let model = GrpModel::zero_mean(basis(), jpsd()).unwrap();
        let a = sample_grp(&model, 10_000, 17);
        assert_eq!(a[..3], sample_grp(&model, 3, 17)[..]);
        let mut p_hat = DMatrix::zeros(4, 3);
        let mut energy = 0.0;
        for s in &a {
            p_hat += jft(s, model.basis()).unwrap().map(|c| c * c);
            energy += s.values().norm_squared();
        }
        p_hat /= a.len() as f64;
        energy /= a.len() as f64;
        let p = model.jpsd().values();
        assert!(relative_frobenius(&p_hat, p) < 0.05);
        let tr = model.covariance().trace();
        assert!((energy - tr).abs() / tr < 0.05);

        let est = estimate_moments(&a).unwrap();
        assert!(relative_frobenius(est.cov.matrix(), model.covariance().matrix()) < 0.05);

        // mode coefficients are empirically uncorrelated
        let coeffs: Vec<DVector<f64>> = a
            .iter()
            .map(|s| {
                let c = jft(s, model.basis()).unwrap();
                DVector::from_fn(12, |i, _| c[(i / 3, i % 3)] / p[(i / 3, i % 3)].sqrt())
            })
            .collect();
        let mut corr = DMatrix::zeros(12, 12);
        for c in &coeffs {
            corr += c * c.transpose();
        }
        corr /= coeffs.len() as f64;
        let bound = 4.0 / (coeffs.len() as f64).sqrt();
        for i in 0..12 {
            for j in 0..12 {
                if i != j {
                    assert!(corr[(i, j)].abs() < bound);
                }
            }
        }
    }

    #[test]
    fn transformed_covariance_matches_monte_carlo() {
        let model = GrpModel::zero_mean(basis(), jpsd()).unwrap();
        let op = DMatrix::from_fn(12, 12, |i, j| if i == j { 1.0 } else if j == (i + 1) % 12 { -0.5 } else { 0.0 });
        let samples: Vec<_> = sample_grp(&model, 20_000, 5)
            .into_iter()
            .map(|s| GeneralizedSignal::from_vectorized(&(&op * s.vectorize()), 4, 3).unwrap())
            .collect();
        let est = estimate_moments(&samples).unwrap();
        let want = model.covariance().transform(&op).unwrap();
        assert!(relative_frobenius(est.cov.matrix(), want.matrix()) < 0.05);
    }

    #[test]
    fn moments_small_cases() {
        let x = GeneralizedSignal::from_fn(2, 2, |v, t| (v * 2 + t) as f64 + 1.0);
        let neg = GeneralizedSignal::new(-x.values()).unwrap();
        let m = estimate_moments(&[x.clone(), neg]).unwrap();
        assert_eq!(m.mean, GeneralizedSignal::zeros(2, 2));
        let v = x.vectorize();
        assert!(max_abs_diff(m.cov.matrix(), &(&v * v.transpose())) < 1e-12);
        let same = estimate_moments(&[x.clone(), x.clone(), x.clone()]).unwrap();
        assert_eq!(same.cov.matrix(), &DMatrix::zeros(4, 4));
        assert_eq!(estimate_moments(&[x]), Err(Error::TooFewSamples { needed: 2, got: 1 }));
    }

    #[test]
    fn stationarity_examples() {
        let b = basis();
        let eye = CovarianceOperator::new(DMatrix::identity(12, 12), 4, 3).unwrap();
        let r = check_jwss(&eye, &b, 1e-8).unwrap();
        assert!(r.stationary && r.norm == 0.0);

        let c = covariance_from_jpsd(&jpsd(), &b).unwrap();
        assert!(check_jwss(&c, &b, 1e-10).unwrap().stationary);

        let v = DVector::from_fn(12, |i, _| if i < 2 { 1.0 } else { 0.0 });
        let bump = CovarianceOperator::new(&v * v.transpose(), 4, 3).unwrap();
        assert!(!check_jwss(&bump, &b, 1e-8).unwrap().stationary);

        // vertex blocks equal to A_G are stationary
        let ag = b.graph().matrix();
        let blocks = kron(&ag, &DMatrix::identity(3, 3));
        let cov = CovarianceOperator::new(blocks, 4, 3).unwrap();
        assert!(check_vwss(&cov, &ag, 1e-10).unwrap().stationary);
        let mut broken = cov.matrix().clone();
        broken[(0, 3)] += 1.0;
        broken[(3, 0)] += 1.0;
        let broken = CovarianceOperator::new(broken, 4, 3).unwrap();
        assert!(!check_vwss(&broken, &ag, 1e-8).unwrap().stationary);

        let ah = b.hilbert().matrix();
        assert!(check_hwss(&c, &ah, 1e-10).unwrap().stationary);
        let mut off = c.matrix().clone();
        off[(0, 1)] += 0.5;
        off[(1, 0)] += 0.5;
        let off = CovarianceOperator::new(off, 4, 3).unwrap();
        assert!(!check_hwss(&off, &ah, 1e-8).unwrap().stationary);

        let scalar = CovarianceOperator::new(DMatrix::from_fn(4, 4, |i, j| (i + j) as f64), 4, 1).unwrap();
        assert!(check_hwss(&scalar, &DMatrix::from_element(1, 1, 3.0), 1e-12).unwrap().stationary);
        assert!(check_vwss(&c, &DMatrix::identity(3, 3), 1e-8).is_err());
    }

    proptest! {
        #[test]
        fn jpsd_covariances_are_stationary_everywhere(vals in proptest::collection::vec(0.0f64..10.0, 12)) {
            let b = basis();
            let p = Jpsd::new(DMatrix::from_vec(4, 3, vals)).unwrap();
            let c = covariance_from_jpsd(&p, &b).unwrap();
            prop_assert!(check_jwss(&c, &b, 1e-8).unwrap().stationary);
            prop_assert!(check_vwss(&c, &b.graph().matrix(), 1e-8).unwrap().stationary);
            prop_assert!(check_hwss(&c, &b.hilbert().matrix(), 1e-8).unwrap().stationary);
            let tr = c.trace();
            let blocks: f64 = (0..3).map(|t| c.time_block(t).trace()).sum();
            prop_assert!((tr - p.total()).abs() <= 1e-10 * p.total().max(1.0));
            prop_assert!((tr - blocks).abs() <= 1e-10 * p.total().max(1.0));
        }

        #[test]
        fn identity_hilbert_reduces_to_blocks(vals in proptest::collection::vec(0.0f64..5.0, 8)) {
            let g = Graph::new(4, [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)]).unwrap();
            let b = JointBasis::new(eigendecompose(&g.laplacian(), 1e-8).unwrap(), SpectralBasis::identity(2));
            let p = Jpsd::new(DMatrix::from_vec(4, 2, vals)).unwrap();
            let c = covariance_from_jpsd(&p, &b).unwrap();
            // features decouple: cross blocks vanish
            prop_assert!(c.cross_block(0, 1).amax() < 1e-12);
        }
    }
}
