//! Dense linear algebra helpers shared by the filters and the EM solver.

use nalgebra::{DMatrix, DMatrixViewMut, DVector, SymmetricEigen};

use crate::{Error, Result, Scalar};

/// Below this size factorizations fall back to plain loops.
const BLOCK: usize = 64;

/// Kronecker product `a ⊗ b`, row-major block layout.
pub fn kron<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>) -> DMatrix<T> {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = DMatrix::zeros(ar * br, ac * bc);
    for j in 0..ac {
        for i in 0..ar {
            let aij = a[(i, j)];
            if aij == T::zero() {
                continue;
            }
            let mut block = out.view_mut((i * br, j * bc), (br, bc));
            block.zip_apply(b, |o, bv| *o = aij * bv);
        }
    }
    out
}

/// Largest `|a_ij - a_ji|`.
pub fn max_asymmetry<T: Scalar>(a: &DMatrix<T>) -> T {
    let n = a.nrows();
    let mut worst = T::zero();
    for j in 0..n {
        for i in (j + 1)..n {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    worst
}

pub fn max_abs<T: Scalar>(a: &DMatrix<T>) -> T {
    a.iter().fold(T::zero(), |m, v| m.max(v.abs()))
}

pub fn max_abs_diff<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>) -> T {
    a.iter()
        .zip(b.iter())
        .fold(T::zero(), |m, (x, y)| m.max((*x - *y).abs()))
}

/// `‖a - b‖_F / ‖b‖_F`, or the absolute difference when `b = 0`.
pub fn relative_frobenius<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>) -> T {
    let denom = b.norm();
    let diff = (a - b).norm();
    if denom == T::zero() {
        diff
    } else {
        diff / denom
    }
}

/// Symmetric part `(a + aᵀ)/2`.
pub fn symmetrize<T: Scalar>(a: &DMatrix<T>) -> DMatrix<T> {
    (a + a.transpose()) * T::lit(0.5)
}

/// Moore-Penrose pseudoinverse through the singular value decomposition.
/// Singular values at or below `rel_tol * σ_max` are treated as zero.
///
/// The singular triplets come from the symmetric eigendecomposition of
/// `[[0, M], [Mᵀ, 0]]`, whose eigenpairs are `±σ` with eigenvectors
/// `[u; ±v] / √2`. nalgebra's bidiagonal SVD can stop early on exactly
/// rank-deficient input and lose several digits.
pub fn pinv_svd<T: Scalar>(m: &DMatrix<T>, rel_tol: T) -> DMatrix<T> {
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return DMatrix::zeros(c, r);
    }
    let mut aug = DMatrix::zeros(r + c, r + c);
    aug.view_mut((0, r), (r, c)).copy_from(m);
    aug.view_mut((r, 0), (c, r)).copy_from(&m.transpose());
    let eig = SymmetricEigen::new(aug);
    let smax = eig.eigenvalues.iter().fold(T::zero(), |a, s| a.max(*s));
    let cutoff = rel_tol * smax;
    let mut out = DMatrix::zeros(c, r);
    for (i, s) in eig.eigenvalues.iter().enumerate() {
        if *s > cutoff && *s > T::zero() {
            let w = eig.eigenvectors.column(i);
            // v uᵀ / σ with u = √2 w_top, v = √2 w_bottom
            out.ger(T::lit(2.0) / *s, &w.rows(r, c), &w.rows(0, r), T::one());
        }
    }
    out
}

/// Pseudoinverse of a symmetric matrix through its eigendecomposition.
/// Eigenvalues with `|λ| <= rel_tol * max|λ|` are dropped.
pub fn pinv_symmetric<T: Scalar>(m: &DMatrix<T>, rel_tol: T) -> DMatrix<T> {
    let n = m.nrows();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    let eig = SymmetricEigen::new(symmetrize(m));
    let lmax = eig.eigenvalues.iter().fold(T::zero(), |a, l| a.max(l.abs()));
    let cutoff = rel_tol * lmax;
    let mut scaled = eig.eigenvectors.clone();
    let mut kept = eig.eigenvectors.clone();
    for (j, l) in eig.eigenvalues.iter().enumerate() {
        let w = if l.abs() > cutoff && l.abs() > T::zero() {
            T::one() / *l
        } else {
            T::zero()
        };
        scaled.column_mut(j).scale_mut(w);
        if w == T::zero() {
            kept.column_mut(j).fill(T::zero());
        }
    }
    &scaled * kept.transpose()
}

/// Lower Cholesky factor of a symmetric positive definite matrix.
///
/// Recursive blocked variant: the off-diagonal panel and the trailing update
/// are matrix products, so large factorizations run at gemm speed.
pub fn cholesky_lower<T: Scalar>(a: &DMatrix<T>) -> Result<DMatrix<T>> {
    if !a.is_square() {
        return Err(Error::shape("square matrix", format!("{:?}", a.shape())));
    }
    let n = a.nrows();
    let mut l = a.clone();
    chol_rec(&mut l.view_mut((0, 0), (n, n)))?;
    for j in 0..n {
        for i in 0..j {
            l[(i, j)] = T::zero();
        }
    }
    Ok(l)
}

fn chol_rec<T: Scalar>(a: &mut DMatrixViewMut<'_, T>) -> Result<()> {
    let n = a.nrows();
    if n <= BLOCK {
        return chol_unblocked(a);
    }
    let n1 = n / 2;
    let n2 = n - n1;
    chol_rec(&mut a.view_mut((0, 0), (n1, n1)))?;
    let mut l11 = a.view((0, 0), (n1, n1)).clone_owned();
    for j in 0..n1 {
        for i in 0..j {
            l11[(i, j)] = T::zero();
        }
    }
    let l11_inv_t = lower_triangular_inverse(&l11).transpose();
    let l21 = a.view((n1, 0), (n2, n1)) * l11_inv_t;
    a.view_mut((n1, 0), (n2, n1)).copy_from(&l21);
    let l21_t = l21.transpose();
    let mut a22 = a.view_mut((n1, n1), (n2, n2));
    a22.gemm(-T::one(), &l21, &l21_t, T::one());
    chol_rec(&mut a22)
}

fn chol_unblocked<T: Scalar>(a: &mut DMatrixViewMut<'_, T>) -> Result<()> {
    let n = a.nrows();
    for j in 0..n {
        let mut s = a[(j, j)];
        for k in 0..j {
            s -= a[(j, k)] * a[(j, k)];
        }
        if !s.is_finite() || s <= T::zero() {
            return Err(Error::NotPositiveDefinite);
        }
        let d = s.sqrt();
        a[(j, j)] = d;
        for i in (j + 1)..n {
            let mut v = a[(i, j)];
            for k in 0..j {
                v -= a[(i, k)] * a[(j, k)];
            }
            a[(i, j)] = v / d;
        }
    }
    Ok(())
}

/// Inverse of a nonsingular lower triangular matrix (upper part ignored).
pub fn lower_triangular_inverse<T: Scalar>(l: &DMatrix<T>) -> DMatrix<T> {
    let n = l.nrows();
    if n <= BLOCK {
        let mut x = DMatrix::zeros(n, n);
        for j in 0..n {
            x[(j, j)] = T::one() / l[(j, j)];
            for i in (j + 1)..n {
                let mut s = T::zero();
                for k in j..i {
                    s += l[(i, k)] * x[(k, j)];
                }
                x[(i, j)] = -s / l[(i, i)];
            }
        }
        return x;
    }
    let n1 = n / 2;
    let n2 = n - n1;
    let a_inv = lower_triangular_inverse(&l.view((0, 0), (n1, n1)).clone_owned());
    let c_inv = lower_triangular_inverse(&l.view((n1, n1), (n2, n2)).clone_owned());
    let b = l.view((n1, 0), (n2, n1));
    let x21 = -(&c_inv * (b * &a_inv));
    let mut x = DMatrix::zeros(n, n);
    x.view_mut((0, 0), (n1, n1)).copy_from(&a_inv);
    x.view_mut((n1, n1), (n2, n2)).copy_from(&c_inv);
    x.view_mut((n1, 0), (n2, n1)).copy_from(&x21);
    x
}

/// Solves `L Lᵀ x = b` given the lower Cholesky factor.
pub fn cholesky_solve<T: Scalar>(l: &DMatrix<T>, b: &DMatrix<T>) -> DMatrix<T> {
    let y = l
        .solve_lower_triangular(b)
        .expect("Cholesky factor has a positive diagonal");
    l.tr_solve_lower_triangular(&y)
        .expect("Cholesky factor has a positive diagonal")
}

/// `Σ log L_ii`, i.e. half the log-determinant of `L Lᵀ`.
pub fn half_log_det<T: Scalar>(l: &DMatrix<T>) -> T {
    l.diagonal().iter().fold(T::zero(), |acc, d| acc + d.ln())
}

/// Row-major vectorization of an `n x d` grid: entry `(v, t)` lands at
/// `v * d + t`.
pub fn vec_row_major<T: Scalar>(m: &DMatrix<T>) -> DVector<T> {
    let (n, d) = m.shape();
    DVector::from_fn(n * d, |i, _| m[(i / d, i % d)])
}

pub fn unvec_row_major<T: Scalar>(v: &DVector<T>, n: usize, d: usize) -> DMatrix<T> {
    DMatrix::from_fn(n, d, |i, j| v[i * d + j])
}
