//! Wiener filters for denoising and completion, with exact MSE accounting
//! and a brute-force linear conditional expectation used as a reference.
//!
//! All filters act on centered signals. [`complete`] subtracts a mean before
//! filtering and adds it back.

use nalgebra::{DMatrix, DVector};

use crate::linalg::{cholesky_lower, cholesky_solve, pinv_svd, pinv_symmetric};
use crate::model::{CovarianceOperator, Jpsd};
use crate::spectral::{apply_convolution, GeneralizedSignal, JointBasis, SpectralBasis};
use crate::{Error, Result, Scalar};

/// Default relative cutoff for pseudoinverses.
pub const DEFAULT_PINV_TOL: f64 = 1e-10;

/// Entrywise observation pattern on an `n x d` grid (`true` = observed).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObservationMask {
    n: usize,
    d: usize,
    observed: Vec<bool>,
}

impl ObservationMask {
    /// `observed` is row-major, entry `(v, t)` at `v·d + t`.
    pub fn new(n: usize, d: usize, observed: Vec<bool>) -> Result<Self> {
        if observed.len() != n * d {
            return Err(Error::shape(format!("{} mask entries", n * d), observed.len()));
        }
        Ok(Self { n, d, observed })
    }

    pub fn all_observed(n: usize, d: usize) -> Self {
        Self {
            n,
            d,
            observed: vec![true; n * d],
        }
    }

    pub fn none_observed(n: usize, d: usize) -> Self {
        Self {
            n,
            d,
            observed: vec![false; n * d],
        }
    }

    pub fn from_fn(n: usize, d: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let observed = (0..n * d).map(|i| f(i / d, i % d)).collect();
        Self { n, d, observed }
    }

    /// Vertex sampling: every coordinate of the listed vertices is observed.
    pub fn from_vertices(n: usize, d: usize, vertices: &[usize]) -> Result<Self> {
        let mut keep = vec![false; n];
        for &v in vertices {
            if v >= n {
                return Err(Error::IndexOutOfRange { index: v, n });
            }
            keep[v] = true;
        }
        Ok(Self::from_fn(n, d, |v, _| keep[v]))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn is_observed(&self, v: usize, t: usize) -> bool {
        self.observed[v * self.d + t]
    }

    pub fn set(&mut self, v: usize, t: usize, observed: bool) {
        self.observed[v * self.d + t] = observed;
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.observed
    }

    /// Row-major indices of observed entries.
    pub fn observed_indices(&self) -> Vec<usize> {
        (0..self.observed.len()).filter(|&i| self.observed[i]).collect()
    }

    pub fn hidden_indices(&self) -> Vec<usize> {
        (0..self.observed.len()).filter(|&i| !self.observed[i]).collect()
    }

    pub fn observed_count(&self) -> usize {
        self.observed.iter().filter(|&&o| o).count()
    }

    pub fn hidden_count(&self) -> usize {
        self.observed.len() - self.observed_count()
    }

    pub fn hidden_fraction(&self) -> f64 {
        if self.observed.is_empty() {
            0.0
        } else {
            self.hidden_count() as f64 / self.observed.len() as f64
        }
    }

    /// Diagonal 0/1 projector `Π_A` on vectorized signals.
    pub fn projector<T: Scalar>(&self) -> DMatrix<T> {
        DMatrix::from_diagonal(&DVector::from_iterator(
            self.observed.len(),
            self.observed.iter().map(|&o| if o { T::one() } else { T::zero() }),
        ))
    }

    fn check(&self, n: usize, d: usize) -> Result<()> {
        if (self.n, self.d) != (n, d) {
            return Err(Error::shape(format!("{n}x{d} mask"), format!("{}x{}", self.n, self.d)));
        }
        Ok(())
    }
}

/// Signal with some entries missing. Hidden entries hold zero.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialSignal<T: Scalar> {
    values: DMatrix<T>,
    mask: ObservationMask,
}

impl<T: Scalar> PartialSignal<T> {
    /// Observed entries must be finite; hidden entries are overwritten with 0.
    pub fn new(mut values: DMatrix<T>, mask: ObservationMask) -> Result<Self> {
        mask.check(values.nrows(), values.ncols())?;
        for v in 0..mask.n {
            for t in 0..mask.d {
                if !mask.is_observed(v, t) {
                    values[(v, t)] = T::zero();
                } else if !values[(v, t)].is_finite() {
                    return Err(Error::NonFiniteInput(format!("entry ({v}, {t})")));
                }
            }
        }
        Ok(Self { values, mask })
    }

    pub fn complete(signal: GeneralizedSignal<T>) -> Self {
        let mask = ObservationMask::all_observed(signal.n(), signal.d());
        Self {
            values: signal.into_values(),
            mask,
        }
    }

    pub fn values(&self) -> &DMatrix<T> {
        &self.values
    }

    pub fn mask(&self) -> &ObservationMask {
        &self.mask
    }

    pub fn is_complete(&self) -> bool {
        self.mask.hidden_count() == 0
    }

    /// The underlying signal with hidden entries set to zero.
    pub fn zero_filled(&self) -> GeneralizedSignal<T> {
        GeneralizedSignal::new(self.values.clone()).expect("entries are finite")
    }

    /// Fails with [`Error::MissingValues`] unless every entry is observed.
    pub fn to_complete(&self) -> Result<GeneralizedSignal<T>> {
        if !self.is_complete() {
            return Err(Error::MissingValues);
        }
        Ok(self.zero_filled())
    }
}

/// Spectral gains `g(k,τ) ∈ [0, 1]` on a joint basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DenoiseFilter<T: Scalar> {
    coefficients: DMatrix<T>,
    basis: JointBasis<T>,
}

impl<T: Scalar> DenoiseFilter<T> {
    pub fn coefficients(&self) -> &DMatrix<T> {
        &self.coefficients
    }

    pub fn basis(&self) -> &JointBasis<T> {
        &self.basis
    }

    /// Dense operator `U diag(g) Uᵀ` with `U = Φ ⊗ Ψ`.
    pub fn matrix(&self) -> DMatrix<T> {
        let u = self.basis.dense_matrix();
        let d = self.basis.d();
        let mut scaled = u.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col.scale_mut(self.coefficients[(j / d, j % d)]);
        }
        scaled * u.transpose()
    }
}

/// Gains `pX / (pX + pE)`, set to 0 where both vanish.
pub fn denoise_filter<T: Scalar>(px: &Jpsd<T>, pe: &Jpsd<T>, basis: &JointBasis<T>) -> Result<DenoiseFilter<T>> {
    basis.check_grid(px.values().shape(), "signal JPSD")?;
    basis.check_grid(pe.values().shape(), "noise JPSD")?;
    let coefficients = px.values().zip_map(pe.values(), |x, e| {
        let total = x + e;
        if total > T::zero() {
            x / total
        } else {
            T::zero()
        }
    });
    Ok(DenoiseFilter {
        coefficients,
        basis: basis.clone(),
    })
}

pub fn denoise<T: Scalar>(y: &GeneralizedSignal<T>, f: &DenoiseFilter<T>) -> Result<GeneralizedSignal<T>> {
    apply_convolution(&f.coefficients, y, &f.basis)
}

/// Dense completion operator on vectorized observations.
#[derive(Debug, Clone, PartialEq)]
pub struct CompletionFilter<T: Scalar> {
    operator: DMatrix<T>,
    mask: ObservationMask,
}

impl<T: Scalar> CompletionFilter<T> {
    pub fn operator(&self) -> &DMatrix<T> {
        &self.operator
    }

    pub fn mask(&self) -> &ObservationMask {
        &self.mask
    }

    /// Applies the operator to a centered observation. Hidden entries of `y`
    /// are ignored.
    pub fn apply(&self, y: &GeneralizedSignal<T>) -> Result<GeneralizedSignal<T>> {
        self.mask.check(y.n(), y.d())?;
        GeneralizedSignal::from_vectorized(&(&self.operator * y.vectorize()), y.n(), y.d())
    }
}

/// `mean + G (y - mean)`.
pub fn complete<T: Scalar>(
    y: &GeneralizedSignal<T>,
    f: &CompletionFilter<T>,
    mean: &GeneralizedSignal<T>,
) -> Result<GeneralizedSignal<T>> {
    if (mean.n(), mean.d()) != (y.n(), y.d()) {
        return Err(Error::shape(format!("{}x{} mean", y.n(), y.d()), format!("{}x{}", mean.n(), mean.d())));
    }
    let centered = GeneralizedSignal::new(y.values() - mean.values())?;
    let est = f.apply(&centered)?;
    GeneralizedSignal::new(est.into_values() + mean.values())
}

fn check_pair<T: Scalar>(cx: &CovarianceOperator<T>, ce: &CovarianceOperator<T>, mask: &ObservationMask) -> Result<()> {
    if (ce.n(), ce.d()) != (cx.n(), cx.d()) {
        return Err(Error::shape(format!("{}x{} noise grid", cx.n(), cx.d()), format!("{}x{}", ce.n(), ce.d())));
    }
    mask.check(cx.n(), cx.d())
}

/// Completion filter `((Π (C_X + C_E) Π)† Π C_X)ᵀ = C_X Π (Π C_Y Π)†`.
/// For a coordinate projection the pseudoinverse is taken on the observed
/// submatrix, with singular values below `pinv_tol·σ_max` dropped.
pub fn completion_filter<T: Scalar>(
    cx: &CovarianceOperator<T>,
    ce: &CovarianceOperator<T>,
    mask: &ObservationMask,
    pinv_tol: T,
) -> Result<CompletionFilter<T>> {
    check_pair(cx, ce, mask)?;
    let obs = mask.observed_indices();
    let nd = cx.n() * cx.d();
    let mut operator = DMatrix::zeros(nd, nd);
    if !obs.is_empty() {
        let cy = cx.matrix() + ce.matrix();
        let cy_aa = cy.select_rows(&obs).select_columns(&obs);
        let gain = cx.matrix().select_columns(&obs) * pinv_symmetric(&cy_aa, pinv_tol);
        for (j, &col) in obs.iter().enumerate() {
            operator.set_column(col, &gain.column(j));
        }
    }
    Ok(CompletionFilter {
        operator,
        mask: mask.clone(),
    })
}

/// Truncated completion filter: observations are additionally projected onto
/// `V_m = span{φ_k ⊗ ψ_τ : τ < m}` before the pseudoinverse,
/// `G_m = ((P Π C_Y Π P)† P Π C_X)ᵀ`. The returned operator is `G_m Π`, the
/// estimate from the masked observation; at `m = d` it equals
/// [`completion_filter`].
pub fn completion_approx<T: Scalar>(
    cx: &CovarianceOperator<T>,
    ce: &CovarianceOperator<T>,
    mask: &ObservationMask,
    basis: &JointBasis<T>,
    m: usize,
    pinv_tol: T,
) -> Result<CompletionFilter<T>> {
    check_pair(cx, ce, mask)?;
    let d = basis.d();
    if (basis.n(), d) != (cx.n(), cx.d()) {
        return Err(Error::shape(format!("{}x{} basis", cx.n(), cx.d()), format!("{}x{}", basis.n(), d)));
    }
    if m < 1 || m > d {
        return Err(Error::InvalidTruncation { m, d });
    }
    let u = basis.dense_matrix();
    let keep: Vec<usize> = (0..u.ncols()).filter(|j| j % d < m).collect();
    let um = u.select_columns(&keep);
    let proj = &um * um.transpose();
    let pi = mask.projector::<T>();
    let ppi = &proj * &pi;
    let cy = cx.matrix() + ce.matrix();
    let inner = &ppi * &cy * ppi.transpose();
    let right = &ppi * cx.matrix();
    let gm = (pinv_symmetric(&inner, pinv_tol) * right).transpose();
    Ok(CompletionFilter {
        operator: gm * pi,
        mask: mask.clone(),
    })
}

/// Expected squared error `E‖G Π (X + E) - X‖²` of a linear completion
/// operator for zero-mean independent `X` and `E`.
pub fn filter_mse<T: Scalar>(
    operator: &DMatrix<T>,
    cx: &CovarianceOperator<T>,
    ce: &CovarianceOperator<T>,
    mask: &ObservationMask,
) -> Result<T> {
    check_pair(cx, ce, mask)?;
    let nd = cx.n() * cx.d();
    if operator.shape() != (nd, nd) {
        return Err(Error::shape(format!("{nd}x{nd} operator"), format!("{:?}", operator.shape())));
    }
    let gp = operator * mask.projector::<T>();
    let cy = cx.matrix() + ce.matrix();
    let cross = (&gp * cx.matrix()).trace();
    let quad = (&gp * cy * gp.transpose()).trace();
    Ok(cx.trace() - cross - cross + quad)
}

/// Closed-form MSE of the completion filter under vertex sampling.
///
/// For each Hilbert index `τ` with positive total power, contributes
/// `Σ_k pX(k,τ) - tr((Φ_U Λ_τ Φ_Uᵀ)⁻¹ Φ_U Γ_τ Φ_Uᵀ)` where
/// `Λ_τ = diag(pX + pE)`, `Γ_τ = diag(pX²)` and `Φ_U` keeps the observed
/// rows of the graph eigenvectors. Columns mixing zero and nonzero total
/// power are rejected.
pub fn mse_completion<T: Scalar>(
    px: &Jpsd<T>,
    pe: &Jpsd<T>,
    graph_basis: &SpectralBasis<T>,
    observed_vertices: &[usize],
) -> Result<T> {
    let n = graph_basis.dim();
    if px.n() != n || px.values().shape() != pe.values().shape() {
        return Err(Error::shape(
            format!("JPSDs with {n} rows"),
            format!("{:?} and {:?}", px.values().shape(), pe.values().shape()),
        ));
    }
    let mut vertices = observed_vertices.to_vec();
    vertices.sort_unstable();
    vertices.dedup();
    if let Some(&bad) = vertices.iter().find(|&&v| v >= n) {
        return Err(Error::IndexOutOfRange { index: bad, n });
    }
    let phi_u = graph_basis.eigenvectors().select_rows(&vertices);
    let mut mse = T::zero();
    for tau in 0..px.d() {
        let pxc = px.values().column(tau);
        let tot = pxc + pe.values().column(tau);
        let positive = tot.iter().filter(|v| **v > T::zero()).count();
        if positive == 0 {
            continue;
        }
        if positive < n {
            return Err(Error::PsdStructureViolation(tau));
        }
        mse += pxc.sum();
        if vertices.is_empty() {
            continue;
        }
        let mut lam = phi_u.clone();
        let mut gam = phi_u.clone();
        for k in 0..n {
            lam.column_mut(k).scale_mut(tot[k]);
            gam.column_mut(k).scale_mut(pxc[k] * pxc[k]);
        }
        let gram = lam * phi_u.transpose();
        let rhs = gam * phi_u.transpose();
        let l = cholesky_lower(&gram).map_err(|_| Error::SingularObservationGram(tau))?;
        mse -= cholesky_solve(&l, &rhs).trace();
    }
    Ok(mse)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lce<T: Scalar> {
    pub estimate: DVector<T>,
    pub residual_cov: DMatrix<T>,
}

/// Linear conditional expectation of `X` given `Y = y` from first and
/// second moments: `m_X + (C_Y† C_YX)ᵀ (y - m_Y)` with residual covariance
/// `C_X - C_XY C_Y† C_YX`. Uses an SVD pseudoinverse.
pub fn lce_oracle<T: Scalar>(
    cx: &DMatrix<T>,
    cy: &DMatrix<T>,
    cxy: &DMatrix<T>,
    mx: &DVector<T>,
    my: &DVector<T>,
    y: &DVector<T>,
    pinv_tol: T,
) -> Result<Lce<T>> {
    let nx = mx.len();
    let ny = my.len();
    if cx.shape() != (nx, nx) || cy.shape() != (ny, ny) || cxy.shape() != (nx, ny) || y.len() != ny {
        return Err(Error::shape(
            format!("C_X {nx}x{nx}, C_Y {ny}x{ny}, C_XY {nx}x{ny}, y {ny}"),
            format!("{:?}, {:?}, {:?}, {}", cx.shape(), cy.shape(), cxy.shape(), y.len()),
        ));
    }
    let cyx = cxy.transpose();
    let w = pinv_svd(cy, pinv_tol) * &cyx;
    let estimate = mx + w.transpose() * (y - my);
    let residual_cov = cx - cxy * w;
    Ok(Lce {
        estimate,
        residual_cov,
    })
}

/// Completion through the precision matrix of `Y = X + E` for spectrally
/// diagonal covariances with `pX + pE > 0` everywhere.
///
/// With `P = C_Y⁻¹`, the observed-block inverse is the Schur complement
/// `(C_Y)_AA⁻¹ = P_AA - P_AH P_HH⁻¹ P_HA`, so each call only factors the
/// hidden block. Equivalent to [`completion_filter`] on the same mask.
#[derive(Debug, Clone)]
pub struct CoordinateCompleter<T: Scalar> {
    cx: DMatrix<T>,
    precision: DMatrix<T>,
    n: usize,
    d: usize,
}

impl<T: Scalar> CoordinateCompleter<T> {
    pub fn new(px: &Jpsd<T>, pe: &Jpsd<T>, basis: &JointBasis<T>) -> Result<Self> {
        basis.check_grid(px.values().shape(), "signal JPSD")?;
        basis.check_grid(pe.values().shape(), "noise JPSD")?;
        let (n, d) = (basis.n(), basis.d());
        let u = basis.dense_matrix();
        let mut scaled_x = u.clone();
        let mut scaled_p = u.clone();
        for j in 0..n * d {
            let (x, e) = (px.values()[(j / d, j % d)], pe.values()[(j / d, j % d)]);
            if x + e <= T::zero() {
                return Err(Error::InvalidSpec(format!("mode ({}, {}) has zero total power", j / d, j % d)));
            }
            scaled_x.column_mut(j).scale_mut(x);
            scaled_p.column_mut(j).scale_mut(T::one() / (x + e));
        }
        Ok(Self {
            cx: scaled_x * u.transpose(),
            precision: scaled_p * u.transpose(),
            n,
            d,
        })
    }

    pub fn signal_covariance(&self) -> &DMatrix<T> {
        &self.cx
    }

    /// Estimate of the centered signal from the observed entries of `y`.
    pub fn complete(&self, y: &GeneralizedSignal<T>, mask: &ObservationMask) -> Result<GeneralizedSignal<T>> {
        mask.check(self.n, self.d)?;
        if (y.n(), y.d()) != (self.n, self.d) {
            return Err(Error::shape(format!("{}x{} signal", self.n, self.d), format!("{}x{}", y.n(), y.d())));
        }
        let hidden = mask.hidden_indices();
        let mut y0 = y.vectorize();
        for &h in &hidden {
            y0[h] = T::zero();
        }
        let mut z = &self.precision * &y0;
        if !hidden.is_empty() {
            let p_hh = self.precision.select_rows(&hidden).select_columns(&hidden);
            let w = DMatrix::from_iterator(hidden.len(), 1, hidden.iter().map(|&h| z[h]));
            let l = cholesky_lower(&p_hh)?;
            let u = cholesky_solve(&l, &w);
            z -= self.precision.select_columns(&hidden) * u;
            for &h in &hidden {
                z[h] = T::zero();
            }
        }
        GeneralizedSignal::from_vectorized(&(&self.cx * z), self.n, self.d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use crate::linalg::max_abs_diff;
    use crate::model::covariance_from_jpsd;
    use crate::spectral::{eigendecompose, fourier_basis_cycle};
    use proptest::prelude::*;

    fn path(n: usize) -> Graph<f64> {
        Graph::new(n, (1..n).map(|i| (i - 1, i, 1.0 + 0.3 * i as f64))).unwrap()
    }

    fn basis(n: usize, d: usize) -> JointBasis<f64> {
        let h = Graph::new(d, (1..d).map(|i| (i - 1, i, 2.0 - 0.25 * i as f64))).unwrap();
        JointBasis::new(
            eigendecompose(&path(n).laplacian(), 1e-8).unwrap(),
            eigendecompose(&h.laplacian(), 1e-8).unwrap(),
        )
    }

    fn grid(n: usize, d: usize, seed: usize) -> DMatrix<f64> {
        DMatrix::from_fn(n, d, |k, t| 0.1 + ((k * 7 + t * 3 + seed * 11) % 9) as f64 * 0.4)
    }

    #[test]
    fn denoise_gain_cases() {
        let b = basis(3, 2);
        let p = Jpsd::new(grid(3, 2, 0)).unwrap();
        let f = denoise_filter(&p, &p, &b).unwrap();
        assert!(f.coefficients().iter().all(|g| *g == 0.5));
        let f = denoise_filter(&p, &Jpsd::zeros(3, 2), &b).unwrap();
        assert!(f.coefficients().iter().all(|g| *g == 1.0));
        let mut z = grid(3, 2, 0);
        z[(1, 1)] = 0.0;
        let zp = Jpsd::new(z).unwrap();
        let f = denoise_filter(&zp, &Jpsd::zeros(3, 2), &b).unwrap();
        assert_eq!(f.coefficients()[(1, 1)], 0.0);

        let y = GeneralizedSignal::from_fn(3, 2, |v, t| (v + t) as f64 - 1.0);
        let ones = denoise_filter(&p, &Jpsd::zeros(3, 2), &b).unwrap();
        assert!(max_abs_diff(denoise(&y, &ones).unwrap().values(), y.values()) < 1e-12);
        let zeros = denoise_filter(&Jpsd::zeros(3, 2), &p, &b).unwrap();
        assert!(denoise(&y, &zeros).unwrap().values().amax() < 1e-12);
    }

    #[test]
    fn full_mask_completion_is_denoising() {
        let b = basis(4, 3);
        let px = Jpsd::new(grid(4, 3, 1)).unwrap();
        let pe = Jpsd::new(grid(4, 3, 2) * 0.3).unwrap();
        let cx = covariance_from_jpsd(&px, &b).unwrap();
        let ce = covariance_from_jpsd(&pe, &b).unwrap();
        let g = completion_filter(&cx, &ce, &ObservationMask::all_observed(4, 3), 1e-10).unwrap();
        let f = denoise_filter(&px, &pe, &b).unwrap();
        assert!(max_abs_diff(g.operator(), &f.matrix()) < 1e-10);

        let none = completion_filter(&cx, &ce, &ObservationMask::none_observed(4, 3), 1e-10).unwrap();
        assert_eq!(none.operator(), &DMatrix::zeros(12, 12));
        let mean = GeneralizedSignal::from_fn(4, 3, |v, t| (v * t) as f64);
        let y = GeneralizedSignal::from_fn(4, 3, |v, t| (v + t) as f64);
        assert_eq!(complete(&y, &none, &mean).unwrap(), mean);
    }

    #[test]
    fn completion_annihilates_hidden_entries() {
        let b = basis(4, 3);
        let cx = covariance_from_jpsd(&Jpsd::new(grid(4, 3, 3)).unwrap(), &b).unwrap();
        let ce = covariance_from_jpsd(&Jpsd::new(grid(4, 3, 4) * 0.1).unwrap(), &b).unwrap();
        let mask = ObservationMask::from_fn(4, 3, |v, t| (v + 2 * t) % 3 != 0);
        let g = completion_filter(&cx, &ce, &mask, 1e-10).unwrap();
        let comp = DMatrix::identity(12, 12) - mask.projector::<f64>();
        assert!((g.operator() * comp).amax() < 1e-10);
    }

    #[test]
    fn lce_basic_cases() {
        let cx = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let mx = DVector::from_vec(vec![1.0, -1.0]);
        let y = DVector::from_vec(vec![3.0, 4.0]);
        let zero = DMatrix::zeros(2, 2);
        let r = lce_oracle(&cx, &cx, &zero, &mx, &mx, &y, 1e-10).unwrap();
        assert_eq!(r.estimate, mx);
        assert!(max_abs_diff(&r.residual_cov, &cx) < 1e-12);
        let r = lce_oracle(&cx, &cx, &cx, &mx, &mx, &y, 1e-10).unwrap();
        assert!((r.estimate - &y).amax() < 1e-12);
        assert!(r.residual_cov.amax() < 1e-12);

        let (sx, se) = (3.0f64, 1.5);
        let r = lce_oracle(
            &DMatrix::from_element(1, 1, sx),
            &DMatrix::from_element(1, 1, sx + se),
            &DMatrix::from_element(1, 1, sx),
            &DVector::zeros(1),
            &DVector::zeros(1),
            &DVector::from_element(1, 1.0),
            1e-10,
        )
        .unwrap();
        assert!((r.estimate[0] - sx / (sx + se)).abs() < 1e-14);
    }

    #[test]
    fn mse_formula_limits() {
        let gb = eigendecompose(&path(5).laplacian(), 1e-8).unwrap();
        let px = Jpsd::new(grid(5, 2, 5)).unwrap();
        let pe = Jpsd::new(grid(5, 2, 6) * 0.5).unwrap();
        let none = mse_completion(&px, &pe, &gb, &[]).unwrap();
        assert!((none - px.total()).abs() < 1e-12);
        let all = mse_completion(&px, &pe, &gb, &[0, 1, 2, 3, 4]).unwrap();
        let want: f64 = px.values().zip_map(pe.values(), |x, e| x * e / (x + e)).sum();
        assert!((all - want).abs() < 1e-10);

        let mut mixed = grid(5, 2, 5);
        mixed[(2, 1)] = 0.0;
        let pe0 = Jpsd::zeros(5, 2);
        assert_eq!(
            mse_completion(&Jpsd::new(mixed).unwrap(), &pe0, &gb, &[0]),
            Err(Error::PsdStructureViolation(1))
        );
        // an all-zero column is skipped
        let mut cut = grid(5, 2, 5);
        cut.column_mut(1).fill(0.0);
        let cut = Jpsd::new(cut).unwrap();
        let one_col = mse_completion(&cut, &pe0, &gb, &[1, 3]).unwrap();
        assert!(one_col.is_finite());
    }

    #[test]
    fn mse_formula_matches_oracle_on_path() {
        let gb = eigendecompose(&path(5).laplacian(), 1e-8).unwrap();
        let b = JointBasis::new(gb.clone(), fourier_basis_cycle(3).unwrap());
        let px = Jpsd::new(grid(5, 3, 7)).unwrap();
        let pe = Jpsd::new(grid(5, 3, 8) * 0.2).unwrap();
        let cx = covariance_from_jpsd(&px, &b).unwrap();
        let ce = covariance_from_jpsd(&pe, &b).unwrap();
        let mask = ObservationMask::from_vertices(5, 3, &[0, 2]).unwrap();
        let pi = mask.projector::<f64>();
        let cy = &pi * (cx.matrix() + ce.matrix()) * &pi;
        let cxy = cx.matrix() * &pi;
        let z = DVector::zeros(15);
        let r = lce_oracle(cx.matrix(), &cy, &cxy, &z, &z, &z, 1e-10).unwrap();
        let formula = mse_completion(&px, &pe, &gb, &[0, 2]).unwrap();
        assert!((formula - r.residual_cov.trace()).abs() < 1e-8);
        let g = completion_filter(&cx, &ce, &mask, 1e-10).unwrap();
        assert!((filter_mse(g.operator(), &cx, &ce, &mask).unwrap() - formula).abs() < 1e-8);
    }

    #[test]
    fn truncation_behaviour() {
        let b = basis(3, 4);
        let mut p = grid(3, 4, 9);
        p.column_mut(3).fill(0.0);
        let px = Jpsd::new(p.clone()).unwrap();
        let mut q = grid(3, 4, 10) * 0.2;
        q.column_mut(3).fill(0.0);
        let pe = Jpsd::new(q).unwrap();
        let cx = covariance_from_jpsd(&px, &b).unwrap();
        let ce = covariance_from_jpsd(&pe, &b).unwrap();
        let mask = ObservationMask::from_fn(3, 4, |v, t| (v * 4 + t) % 5 != 2);
        let full = completion_filter(&cx, &ce, &mask, 1e-10).unwrap();
        let at_d = completion_approx(&cx, &ce, &mask, &b, 4, 1e-10).unwrap();
        assert!(max_abs_diff(full.operator(), at_d.operator()) < 1e-12);
        // no energy beyond τ = 3, so truncating there loses nothing
        let at_3 = completion_approx(&cx, &ce, &mask, &b, 3, 1e-10).unwrap();
        assert!(max_abs_diff(full.operator(), at_3.operator()) < 1e-10);
        assert_eq!(
            completion_approx(&cx, &ce, &mask, &b, 0, 1e-10),
            Err(Error::InvalidTruncation { m: 0, d: 4 })
        );
        assert!(completion_approx(&cx, &ce, &mask, &b, 5, 1e-10).is_err());
    }

    #[test]
    fn truncation_sweep_converges_monotonically() {
        let b = basis(3, 5);
        let px = Jpsd::new(grid(3, 5, 11)).unwrap();
        let pe = Jpsd::new(grid(3, 5, 12) * 0.1).unwrap();
        let cx = covariance_from_jpsd(&px, &b).unwrap();
        let ce = covariance_from_jpsd(&pe, &b).unwrap();
        let mask = ObservationMask::from_fn(3, 5, |v, t| (v + t) % 3 != 1);
        let full = completion_filter(&cx, &ce, &mask, 1e-10).unwrap();
        let pi = mask.projector::<f64>();
        let cy = &pi * (cx.matrix() + ce.matrix()) * &pi;
        let mut last = f64::INFINITY;
        for m in 1..=5 {
            let gm = completion_approx(&cx, &ce, &mask, &b, m, 1e-10).unwrap();
            let diff = gm.operator() - full.operator();
            let dev = (&diff * &cy * diff.transpose()).trace();
            assert!(dev <= last + 1e-10, "m={m}: {dev} > {last}");
            last = dev;
        }
        assert!(last < 1e-10);
    }

    #[test]
    fn coordinate_completer_matches_dense_filter() {
        let b = JointBasis::new(
            eigendecompose(&path(5).laplacian(), 1e-8).unwrap(),
            fourier_basis_cycle(4).unwrap(),
        );
        let px = Jpsd::new(grid(5, 4, 13)).unwrap();
        let pe = Jpsd::new(grid(5, 4, 14) * 0.05).unwrap();
        let cx = covariance_from_jpsd(&px, &b).unwrap();
        let ce = covariance_from_jpsd(&pe, &b).unwrap();
        let fast = CoordinateCompleter::new(&px, &pe, &b).unwrap();
        let y = GeneralizedSignal::from_fn(5, 4, |v, t| ((v * 3 + t * 5) % 7) as f64 - 3.0);
        for mask in [
            ObservationMask::all_observed(5, 4),
            ObservationMask::none_observed(5, 4),
            ObservationMask::from_fn(5, 4, |v, t| (v * 4 + t) % 3 != 0),
            ObservationMask::from_vertices(5, 4, &[1, 4]).unwrap(),
        ] {
            let dense = completion_filter(&cx, &ce, &mask, 1e-10).unwrap().apply(&y).unwrap();
            let quick = fast.complete(&y, &mask).unwrap();
            assert!(max_abs_diff(dense.values(), quick.values()) < 1e-9);
        }
        assert!(CoordinateCompleter::new(&Jpsd::zeros(5, 4), &Jpsd::zeros(5, 4), &b).is_err());
    }

    proptest! {
        #[test]
        fn denoising_is_non_expansive(
            px in proptest::collection::vec(0.0f64..5.0, 12),
            pe in proptest::collection::vec(0.0f64..5.0, 12),
            y in proptest::collection::vec(-10.0f64..10.0, 12),
        ) {
            let b = basis(4, 3);
            let f = denoise_filter(
                &Jpsd::new(DMatrix::from_vec(4, 3, px)).unwrap(),
                &Jpsd::new(DMatrix::from_vec(4, 3, pe)).unwrap(),
                &b,
            ).unwrap();
            prop_assert!(f.coefficients().iter().all(|g| (0.0..=1.0).contains(g)));
            let y = GeneralizedSignal::new(DMatrix::from_vec(4, 3, y)).unwrap();
            prop_assert!(denoise(&y, &f).unwrap().values().norm() <= y.values().norm() + 1e-12);
        }

        #[test]
        fn mse_never_increases_with_more_vertices(
            px in proptest::collection::vec(0.05f64..5.0, 12),
            pe in proptest::collection::vec(0.05f64..2.0, 12),
            order in Just((0..6).collect::<Vec<usize>>()).prop_shuffle(),
        ) {
            let gb = eigendecompose(&path(6).laplacian(), 1e-8).unwrap();
            let px = Jpsd::new(DMatrix::from_vec(6, 2, px)).unwrap();
            let pe = Jpsd::new(DMatrix::from_vec(6, 2, pe)).unwrap();
            let mut last = mse_completion(&px, &pe, &gb, &[]).unwrap();
            for i in 1..=6 {
                let next = mse_completion(&px, &pe, &gb, &order[..i]).unwrap();
                prop_assert!(next <= last + 1e-10);
                last = next;
            }
        }
    }
}
