//! Evidence maximization for `y = B c + e` with independent
//! `c_i ~ N(0, p_i)` and `e ~ N(0, σ² I)`.
//!
//! The E-step is the exact Gaussian posterior of `c`; the M-step updates
//! `p_i ← mean_j μ_ij² + Σ_ii` and
//! `σ² ← (‖Y - B M‖² + r·tr(B Σ Bᵀ)) / (N r)`. Several response columns may
//! share one design matrix; they are treated as independent draws with
//! common hyperparameters.

use nalgebra::{DMatrix, DVector};

use crate::linalg::{cholesky_lower, half_log_det, lower_triangular_inverse};
use crate::{Error, Result, Scalar};

/// Design matrix with one or more response columns.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionProblem<T: Scalar> {
    design: DMatrix<T>,
    responses: DMatrix<T>,
}

impl<T: Scalar> RegressionProblem<T> {
    pub fn new(design: DMatrix<T>, y: DVector<T>) -> Result<Self> {
        let n = y.len();
        Self::with_responses(design, DMatrix::from_column_slice(n, 1, y.as_slice()))
    }

    /// `responses` is `N x r`, one column per signal.
    pub fn with_responses(design: DMatrix<T>, responses: DMatrix<T>) -> Result<Self> {
        let (n, s) = design.shape();
        if n < 1 || s < 1 || responses.ncols() < 1 {
            return Err(Error::InvalidSize(format!("design {n}x{s} with {} responses", responses.ncols())));
        }
        if responses.nrows() != n {
            return Err(Error::shape(format!("{n} observations"), responses.nrows()));
        }
        if design.iter().chain(responses.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput("regression data".into()));
        }
        Ok(Self { design, responses })
    }

    pub fn design(&self) -> &DMatrix<T> {
        &self.design
    }

    pub fn responses(&self) -> &DMatrix<T> {
        &self.responses
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmOptions {
    pub max_iter: usize,
    /// Stop when `max(‖Δp‖∞/‖p‖∞, |Δσ²|/σ²)` drops below this.
    pub tol: f64,
    pub p_floor: f64,
}

impl Default for EmOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            tol: 1e-6,
            p_floor: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmResult<T: Scalar> {
    pub p: DVector<T>,
    pub sigma2: T,
    /// Posterior means, `s x r`.
    pub mean: DMatrix<T>,
    /// Posterior covariance, `s x s`, shared by all responses.
    pub cov: DMatrix<T>,
    pub converged: bool,
    pub iterations: usize,
    /// Log evidence before each M-step; nondecreasing.
    pub objective: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Posterior<T: Scalar> {
    pub mean: DMatrix<T>,
    pub cov: DMatrix<T>,
}

/// Quantities shared by every iteration.
struct Gram<T: Scalar> {
    btb: DMatrix<T>,
    bty: DMatrix<T>,
    yy: T,
    n: usize,
    r: usize,
}

impl<T: Scalar> Gram<T> {
    fn new(b: &DMatrix<T>, y: &DMatrix<T>) -> Self {
        let bt = b.transpose();
        Self {
            btb: &bt * b,
            bty: bt * y,
            yy: y.norm_squared(),
            n: b.nrows(),
            r: y.ncols(),
        }
    }
}

/// E-step in the scaled variables `c = P^{1/2} u`:
/// `A = P^{1/2} BᵀB P^{1/2} / σ² + I`, `Σ = P^{1/2} A⁻¹ P^{1/2}`.
struct EStep<T: Scalar> {
    mean: DMatrix<T>,
    sigma_diag: DVector<T>,
    /// `L⁻¹` of `A = L Lᵀ`.
    l_inv: DMatrix<T>,
    log_evidence: f64,
}

fn e_step<T: Scalar>(g: &Gram<T>, p: &DVector<T>, sigma2: T) -> Result<EStep<T>> {
    let s = p.len();
    let sq = p.map(|v| v.sqrt());
    let scaled = sq.unscale(sigma2.sqrt());
    let mut a = g.btb.clone();
    for (j, mut col) in a.column_iter_mut().enumerate() {
        col.component_mul_assign(&scaled);
        col.scale_mut(scaled[j]);
    }
    for i in 0..s {
        a[(i, i)] += T::one();
    }
    let l = cholesky_lower(&a)?;
    let l_inv = lower_triangular_inverse(&l);
    let sigma_diag = DVector::from_fn(s, |i, _| {
        let col = l_inv.column(i);
        p[i] * col.rows(i, s - i).norm_squared()
    });
    // M = P^{1/2} A⁻¹ P^{1/2} BᵀY / σ²
    let mut rhs = g.bty.clone();
    for (i, mut row) in rhs.row_iter_mut().enumerate() {
        row.scale_mut(sq[i] / sigma2);
    }
    let w = &l_inv * rhs;
    let mut mean = l_inv.transpose() * w;
    for (i, mut row) in mean.row_iter_mut().enumerate() {
        row.scale_mut(sq[i]);
    }
    let fit = mean.dot(&g.bty) / sigma2;
    let (nf, rf) = (g.n as f64, g.r as f64);
    let log_det = 2.0 * half_log_det(&l).as_f64() + nf * sigma2.as_f64().ln();
    let quad = (g.yy / sigma2 - fit).as_f64();
    let log_evidence = -0.5 * (rf * nf * (2.0 * std::f64::consts::PI).ln() + rf * log_det + quad);
    Ok(EStep {
        mean,
        sigma_diag,
        l_inv,
        log_evidence,
    })
}

fn full_cov<T: Scalar>(e: &EStep<T>, p: &DVector<T>) -> DMatrix<T> {
    let mut cov = e.l_inv.transpose() * &e.l_inv;
    let sq = p.map(|v| v.sqrt());
    for j in 0..cov.ncols() {
        for i in 0..cov.nrows() {
            cov[(i, j)] *= sq[i] * sq[j];
        }
    }
    cov
}

fn sigma2_floor<T: Scalar>(y: &DMatrix<T>, p_floor: T) -> T {
    let ms = y.norm_squared() / T::from_count(y.len());
    if ms > T::zero() {
        T::lit(1e-12) * ms
    } else {
        p_floor
    }
}

/// Fits `p` and `σ²` by EM. Reaching `max_iter` is not an error: the last
/// iterate is returned with `converged = false`.
pub fn variational_em<T: Scalar>(problem: &RegressionProblem<T>, opts: &EmOptions) -> Result<EmResult<T>> {
    let b = &problem.design;
    let y = &problem.responses;
    let s = b.ncols();
    let g = Gram::new(b, y);
    let p_floor = T::lit(opts.p_floor);
    let s2_floor = sigma2_floor(y, p_floor);
    let rf = T::from_count(g.r);
    let total = T::from_count(g.n * g.r);

    // ridge start
    let lambda = T::lit(1e-3) * g.btb.trace() / T::from_count(s);
    let mut ridge = g.btb.clone();
    for i in 0..s {
        ridge[(i, i)] += lambda.max(T::lit(1e-12));
    }
    let c0 = crate::linalg::cholesky_solve(&cholesky_lower(&ridge)?, &g.bty);
    let mut p = DVector::from_fn(s, |i, _| c0.row(i).norm_squared() / rf + p_floor);
    let mean_y = y.sum() / total;
    let var_y = y.iter().fold(T::zero(), |a, v| a + (*v - mean_y) * (*v - mean_y)) / total;
    let mut sigma2 = (T::lit(0.1) * var_y).max(s2_floor);

    let mut objective = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut e = e_step(&g, &p, sigma2)?;
    while iterations < opts.max_iter {
        iterations += 1;
        objective.push(e.log_evidence);
        let new_p = DVector::from_fn(s, |i, _| (e.mean.row(i).norm_squared() / rf + e.sigma_diag[i]).max(p_floor));
        let resid = y - b * &e.mean;
        let shrink = (0..s).fold(T::zero(), |a, i| a + e.sigma_diag[i] / p[i]);
        let trace_term = rf * sigma2 * (T::from_count(s) - shrink).max(T::zero());
        let new_s2 = ((resid.norm_squared() + trace_term) / total).max(s2_floor);
        let dp = (&new_p - &p).amax() / new_p.amax();
        let ds = (new_s2 - sigma2).abs() / new_s2;
        p = new_p;
        sigma2 = new_s2;
        e = e_step(&g, &p, sigma2)?;
        if dp.max(ds) < T::lit(opts.tol) {
            converged = true;
            break;
        }
    }
    objective.push(e.log_evidence);
    if !converged {
        log::warn!("variational EM stopped after {iterations} iterations without converging");
    }
    let cov = full_cov(&e, &p);
    Ok(EmResult {
        p,
        sigma2,
        mean: e.mean,
        cov,
        converged,
        iterations,
        objective,
    })
}

/// Gaussian posterior of the coefficients for fixed `p` and `σ²`.
pub fn posterior<T: Scalar>(
    design: &DMatrix<T>,
    responses: &DMatrix<T>,
    p: &DVector<T>,
    sigma2: T,
) -> Result<Posterior<T>> {
    if design.ncols() != p.len() || design.nrows() != responses.nrows() {
        return Err(Error::shape(
            format!("design N x {} with N responses", p.len()),
            format!("{:?} with {}", design.shape(), responses.nrows()),
        ));
    }
    if !sigma2.is_finite() || sigma2 <= T::zero() || p.iter().any(|v| !v.is_finite() || *v < T::zero()) {
        return Err(Error::InvalidSpec("variances must be positive".into()));
    }
    let g = Gram::new(design, responses);
    let e = e_step(&g, p, sigma2)?;
    let cov = full_cov(&e, p);
    Ok(Posterior { mean: e.mean, cov })
}
