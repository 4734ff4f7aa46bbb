//! Eigenbases with a fixed sign convention, the joint basis `φ_k ⊗ ψ_τ`
//! and the transforms built on it.
//!
//! Coefficient grids mirror signal grids: an `n x d` matrix whose row `k`
//! is a graph frequency and whose column `τ` is a Hilbert frequency.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::linalg::{kron, max_abs, max_asymmetry, unvec_row_major, vec_row_major};
use crate::{Error, Result, Scalar};

/// Default relative eigenvalue gap below which a basis is flagged degenerate.
pub const DEFAULT_GAP_TOL: f64 = 1e-8;

/// Relative tolerance used to decide that two entries tie for largest
/// magnitude in the sign convention.
const SIGN_TIE_TOL: f64 = 1e-8;

/// Sorted eigenvalues with orthonormal eigenvectors (one per column).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralBasis<T: Scalar> {
    eigenvalues: DVector<T>,
    eigenvectors: DMatrix<T>,
    degenerate: bool,
}

impl<T: Scalar> SpectralBasis<T> {
    /// Standard basis with all eigenvalues 1 (the shift is the identity).
    pub fn identity(d: usize) -> Self {
        Self {
            eigenvalues: DVector::from_element(d, T::one()),
            eigenvectors: DMatrix::identity(d, d),
            degenerate: d > 1,
        }
    }

    /// Assembles a basis from precomputed parts. Eigenvalues must be sorted
    /// ascending and the columns orthonormal to `1e-8`. The degenerate flag is
    /// recomputed with [`DEFAULT_GAP_TOL`].
    pub fn from_parts(eigenvalues: DVector<T>, eigenvectors: DMatrix<T>) -> Result<Self> {
        let m = eigenvalues.len();
        if eigenvectors.shape() != (m, m) {
            return Err(Error::shape(format!("{m}x{m} eigenvectors"), format!("{:?}", eigenvectors.shape())));
        }
        if eigenvalues.iter().chain(eigenvectors.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput("spectral basis".into()));
        }
        if eigenvalues.as_slice().windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidSpec("eigenvalues must be sorted ascending".into()));
        }
        let gram = eigenvectors.transpose() * &eigenvectors;
        let off = max_abs(&(gram - DMatrix::identity(m, m)));
        if off > T::lit(1e-8) {
            return Err(Error::InvalidSpec(format!("eigenvectors not orthonormal (error {off:e})")));
        }
        let degenerate = is_degenerate(&eigenvalues, T::lit(DEFAULT_GAP_TOL));
        Ok(Self {
            eigenvalues,
            eigenvectors,
            degenerate,
        })
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &DVector<T> {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<T> {
        &self.eigenvectors
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    /// The operator `V diag(λ) Vᵀ` this basis diagonalizes.
    pub fn matrix(&self) -> DMatrix<T> {
        let mut scaled = self.eigenvectors.clone();
        for (j, l) in self.eigenvalues.iter().enumerate() {
            scaled.column_mut(j).scale_mut(*l);
        }
        scaled * self.eigenvectors.transpose()
    }
}

fn is_degenerate<T: Scalar>(eigenvalues: &DVector<T>, gap_tol: T) -> bool {
    let scale = eigenvalues.iter().fold(T::one(), |a, l| a.max(l.abs()));
    eigenvalues
        .as_slice()
        .windows(2)
        .any(|w| w[1] - w[0] < gap_tol * scale)
}

/// Flips the column so its largest-magnitude entry is positive. Entries
/// within a relative `1e-8` of the maximum tie, and the lowest index wins.
fn fix_sign<T: Scalar>(col: &mut nalgebra::DVectorViewMut<'_, T>) {
    let peak = col.iter().fold(T::zero(), |a, v| a.max(v.abs()));
    if peak == T::zero() {
        return;
    }
    let cut = peak * (T::one() - T::lit(SIGN_TIE_TOL));
    let lead = col
        .iter()
        .copied()
        .find(|v| v.abs() >= cut)
        .expect("peak entry exists");
    if lead < T::zero() {
        col.neg_mut();
    }
}

/// Eigendecomposition of a real symmetric matrix with ascending eigenvalues
/// and the deterministic sign convention. Logs a warning and sets the
/// degenerate flag when two adjacent eigenvalues are closer than
/// `gap_tol * max(1, max|λ|)`.
pub fn eigendecompose<T: Scalar>(a: &DMatrix<T>, gap_tol: T) -> Result<SpectralBasis<T>> {
    if !a.is_square() {
        return Err(Error::shape("square matrix", format!("{:?}", a.shape())));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput("matrix to eigendecompose".into()));
    }
    let asym = max_asymmetry(a);
    if asym > T::lit(1e-10) * T::one().max(max_abs(a)) {
        return Err(Error::NotSymmetric(asym.as_f64()));
    }
    let m = a.nrows();
    let eig = SymmetricEigen::new(a.clone());
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[i]
            .partial_cmp(&eig.eigenvalues[j])
            .expect("finite eigenvalues")
            .then(i.cmp(&j))
    });
    let eigenvalues = DVector::from_iterator(m, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut eigenvectors = DMatrix::zeros(m, m);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &eig.eigenvectors.column(src));
        fix_sign(&mut eigenvectors.column_mut(dst));
    }
    let degenerate = is_degenerate(&eigenvalues, gap_tol);
    if degenerate {
        log::warn!("eigendecomposition of a {m}x{m} matrix has repeated eigenvalues; eigenvectors are not unique");
    }
    Ok(SpectralBasis {
        eigenvalues,
        eigenvectors,
        degenerate,
    })
}

/// Real harmonic eigenbasis of the unit-weight cycle Laplacian on `T`
/// vertices: the constant vector, then `√(2/T)·cos(2πkt/T)` and
/// `√(2/T)·sin(2πkt/T)` for `k = 1..⌊(T-1)/2⌋`, then the alternating vector
/// when `T` is even. Always flagged degenerate.
pub fn fourier_basis_cycle<T: Scalar>(len: usize) -> Result<SpectralBasis<T>> {
    if len < 3 {
        return Err(Error::InvalidSize(format!("cycle basis needs T >= 3, got {len}")));
    }
    let tf = len as f64;
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut values = Vec::with_capacity(len);
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(len);
    values.push(0.0);
    columns.push(vec![1.0 / tf.sqrt(); len]);
    let amp = (2.0 / tf).sqrt();
    for k in 1..=(len - 1) / 2 {
        let w = two_pi * k as f64 / tf;
        let lambda = 2.0 - 2.0 * w.cos();
        values.push(lambda);
        columns.push((0..len).map(|t| amp * (w * t as f64).cos()).collect());
        values.push(lambda);
        columns.push((0..len).map(|t| amp * (w * t as f64).sin()).collect());
    }
    if len.is_multiple_of(2) {
        values.push(4.0);
        columns.push((0..len).map(|t| if t % 2 == 0 { 1.0 } else { -1.0 } / tf.sqrt()).collect());
    }
    Ok(SpectralBasis {
        eigenvalues: DVector::from_iterator(len, values.into_iter().map(T::lit)),
        eigenvectors: DMatrix::from_fn(len, len, |t, j| T::lit(columns[j][t])),
        degenerate: true,
    })
}

/// Product basis `{φ_k ⊗ ψ_τ}` of the joint shift `A_G ⊗ A_H`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointBasis<T: Scalar> {
    graph: SpectralBasis<T>,
    hilbert: SpectralBasis<T>,
}

impl<T: Scalar> JointBasis<T> {
    pub fn new(graph: SpectralBasis<T>, hilbert: SpectralBasis<T>) -> Self {
        Self { graph, hilbert }
    }

    pub fn graph(&self) -> &SpectralBasis<T> {
        &self.graph
    }

    pub fn hilbert(&self) -> &SpectralBasis<T> {
        &self.hilbert
    }

    /// Number of vertices.
    pub fn n(&self) -> usize {
        self.graph.dim()
    }

    /// Hilbert dimension.
    pub fn d(&self) -> usize {
        self.hilbert.dim()
    }

    /// Dense `Φ ⊗ Ψ`. Column `k·d + τ` is `φ_k ⊗ ψ_τ` in row-major signal
    /// coordinates.
    pub fn dense_matrix(&self) -> DMatrix<T> {
        kron(self.graph.eigenvectors(), self.hilbert.eigenvectors())
    }

    pub fn joint_vector(&self, k: usize, tau: usize) -> DVector<T> {
        let phi = self.graph.eigenvectors().column(k);
        let psi = self.hilbert.eigenvectors().column(tau);
        let d = self.d();
        DVector::from_fn(self.n() * d, |i, _| phi[i / d] * psi[i % d])
    }

    /// Dense joint shift `A_G ⊗ A_H`.
    pub fn shift_matrix(&self) -> DMatrix<T> {
        kron(&self.graph.matrix(), &self.hilbert.matrix())
    }

    pub(crate) fn check_grid(&self, shape: (usize, usize), what: &str) -> Result<()> {
        if shape != (self.n(), self.d()) {
            return Err(Error::shape(
                format!("{what} of shape {}x{}", self.n(), self.d()),
                format!("{}x{}", shape.0, shape.1),
            ));
        }
        Ok(())
    }
}

/// Matrix form of a signal in `ℝⁿ ⊗ H`: row `v` holds the Hilbert
/// coordinates of vertex `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralizedSignal<T: Scalar> {
    values: DMatrix<T>,
}

impl<T: Scalar> GeneralizedSignal<T> {
    /// Rejects non-finite entries.
    pub fn new(values: DMatrix<T>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput("signal values".into()));
        }
        Ok(Self { values })
    }

    pub fn zeros(n: usize, d: usize) -> Self {
        Self {
            values: DMatrix::zeros(n, d),
        }
    }

    pub fn from_fn(n: usize, d: usize, f: impl FnMut(usize, usize) -> T) -> Self {
        Self {
            values: DMatrix::from_fn(n, d, f),
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

    /// Row-major vectorization: entry `(v, t)` lands at `v·d + t`.
    pub fn vectorize(&self) -> DVector<T> {
        vec_row_major(&self.values)
    }

    pub fn from_vectorized(v: &DVector<T>, n: usize, d: usize) -> Result<Self> {
        if v.len() != n * d {
            return Err(Error::shape(format!("vector of length {}", n * d), v.len()));
        }
        Self::new(unvec_row_major(v, n, d))
    }
}

/// Joint Fourier transform `C = Φᵀ X Ψ`, so `C(k,τ) = ⟨x, φ_k ⊗ ψ_τ⟩`.
pub fn jft<T: Scalar>(x: &GeneralizedSignal<T>, b: &JointBasis<T>) -> Result<DMatrix<T>> {
    b.check_grid(x.values.shape(), "signal")?;
    Ok(b.graph.eigenvectors().tr_mul(&x.values) * b.hilbert.eigenvectors())
}

/// Inverse transform `X = Φ C Ψᵀ`.
pub fn ijft<T: Scalar>(c: &DMatrix<T>, b: &JointBasis<T>) -> Result<GeneralizedSignal<T>> {
    b.check_grid(c.shape(), "coefficient grid")?;
    let x = b.graph.eigenvectors() * c * b.hilbert.eigenvectors().transpose();
    Ok(GeneralizedSignal { values: x })
}

/// Pointwise spectral filter `ijft(g ⊙ jft(x))`.
pub fn apply_convolution<T: Scalar>(
    g: &DMatrix<T>,
    x: &GeneralizedSignal<T>,
    b: &JointBasis<T>,
) -> Result<GeneralizedSignal<T>> {
    b.check_grid(g.shape(), "filter grid")?;
    let c = jft(x, b)?.component_mul(g);
    ijft(&c, b)
}

/// Frequency response `λ_k ν_τ` of the joint shift.
pub fn shift_response<T: Scalar>(b: &JointBasis<T>) -> DMatrix<T> {
    let lg = b.graph.eigenvalues();
    let lh = b.hilbert.eigenvalues();
    DMatrix::from_fn(b.n(), b.d(), |k, t| lg[k] * lh[t])
}

/// Joint shift (graph shift ⊗ Hilbert shift) applied in the spectral domain.
pub fn apply_shift<T: Scalar>(x: &GeneralizedSignal<T>, b: &JointBasis<T>) -> Result<GeneralizedSignal<T>> {
    apply_convolution(&shift_response(b), x, b)
}
