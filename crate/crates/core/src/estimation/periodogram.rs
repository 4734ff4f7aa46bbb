use nalgebra::{DMatrix, DVector};

use crate::model::Jpsd;
use crate::spectral::{eigendecompose, jft, GeneralizedSignal, JointBasis, SpectralBasis, DEFAULT_GAP_TOL};
use crate::{Error, Result, Scalar};

fn check_shapes<T: Scalar>(samples: &[GeneralizedSignal<T>], n: usize, d: Option<usize>) -> Result<()> {
    for s in samples {
        if s.n() != n || d.is_some_and(|d| s.d() != d) {
            return Err(Error::shape(format!("{n} x {d:?} samples"), format!("{}x{}", s.n(), s.d())));
        }
    }
    Ok(())
}

/// Raw periodogram `p̂(k,τ) = (1/m) Σ_i C_i(k,τ)²` with `C_i = jft(x_i)`.
pub fn jpsd_periodogram<T: Scalar>(samples: &[GeneralizedSignal<T>], b: &JointBasis<T>) -> Result<Jpsd<T>> {
    if samples.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    let mut acc = DMatrix::zeros(b.n(), b.d());
    for s in samples {
        let c = jft(s, b)?;
        acc += c.component_mul(&c);
    }
    acc.unscale_mut(T::from_count(samples.len()));
    Jpsd::new(acc)
}

/// Graph-only periodogram with every Hilbert coordinate treated as its own
/// feature: `p̂(k,τ) = (1/m) Σ_i (φ_kᵀ x_i[:,τ])²`.
pub fn gsp_periodogram_per_feature<T: Scalar>(
    samples: &[GeneralizedSignal<T>],
    graph_basis: &SpectralBasis<T>,
) -> Result<Jpsd<T>> {
    let first = samples.first().ok_or(Error::EmptySampleSet)?;
    let (n, d) = (graph_basis.dim(), first.d());
    check_shapes(samples, n, Some(d))?;
    let phi = graph_basis.eigenvectors();
    let mut acc = DMatrix::zeros(n, d);
    for s in samples {
        for tau in 0..d {
            let f = s.values().column(tau);
            for k in 0..n {
                let c = phi.column(k).dot(&f);
                acc[(k, tau)] += c * c;
            }
        }
    }
    acc.unscale_mut(T::from_count(samples.len()));
    Jpsd::new(acc)
}

/// Pooled `d x d` sample covariance of all vertex rows (mean-centered,
/// normalized by the row count).
pub fn hilbert_covariance<T: Scalar>(samples: &[GeneralizedSignal<T>]) -> Result<DMatrix<T>> {
    if samples.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: samples.len(),
        });
    }
    let (n, d) = (samples[0].n(), samples[0].d());
    check_shapes(samples, n, Some(d))?;
    let count = T::from_count(samples.len() * n);
    let mut mean = DVector::zeros(d);
    for s in samples {
        for row in s.values().row_iter() {
            mean += row.transpose();
        }
    }
    mean.unscale_mut(count);
    let mut cov = DMatrix::zeros(d, d);
    for s in samples {
        for row in s.values().row_iter() {
            let c = row.transpose() - &mean;
            cov.ger(T::one(), &c, &c, T::one());
        }
    }
    cov.unscale_mut(count);
    Ok((&cov + cov.transpose()) * T::lit(0.5))
}

/// Eigenbasis of [`hilbert_covariance`], ascending, with the usual sign
/// convention.
pub fn learn_hilbert_basis<T: Scalar>(samples: &[GeneralizedSignal<T>]) -> Result<SpectralBasis<T>> {
    eigendecompose(&hilbert_covariance(samples)?, T::lit(DEFAULT_GAP_TOL))
}
