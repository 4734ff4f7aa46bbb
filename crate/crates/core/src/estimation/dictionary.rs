use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::spectral::SpectralBasis;
use crate::{Error, Result, Scalar};

/// How the Hilbert-side basis is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisSpec {
    /// Eigenbasis of the pooled sample covariance of vertex rows.
    LearnedCovariance,
    /// Harmonics of the cycle graph on `len` vertices.
    CycleHarmonics { len: usize },
    /// `sin(τt)`, `cos(τt)` for `τ = 1..=m0` on `[-π, π]`.
    ContinuousTrig { m0: usize },
}

impl BasisSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            BasisSpec::CycleHarmonics { len } if len < 3 => {
                Err(Error::InvalidSpec(format!("cycle harmonics need T >= 3, got {len}")))
            }
            BasisSpec::ContinuousTrig { m0 } if m0 < 1 => Err(Error::InvalidSpec("m0 must be at least 1".into())),
            _ => Ok(()),
        }
    }
}

/// Column layout of the trig dictionary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrigVariant {
    /// `φ_k ⊗ sin(τt)` and `φ_k ⊗ cos(τt)`, `τ = 1..=m0`. Column
    /// `k·2m0 + 2(τ-1)` is the sine, the next one the cosine.
    Grp,
    /// Independent vertices: per vertex `sin(τt)` for `τ = 1..=m0`, then
    /// `cos(τt)` for `τ = 0..=m0`. Vertex `v` owns columns
    /// `v·(2m0+1) .. (v+1)·(2m0+1)`.
    Ts,
}

pub fn coefficient_count(n: usize, m0: usize, variant: TrigVariant) -> usize {
    match variant {
        TrigVariant::Grp => 2 * n * m0,
        TrigVariant::Ts => n * (2 * m0 + 1),
    }
}

/// Sampling instants per vertex, all inside `[-π, π]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePlan<T: Scalar> {
    points: Vec<Vec<T>>,
}

impl<T: Scalar> SamplePlan<T> {
    pub fn new(points: Vec<Vec<T>>) -> Result<Self> {
        let limit = T::lit(PI * (1.0 + 1e-12));
        for (v, ts) in points.iter().enumerate() {
            if let Some(t) = ts.iter().find(|t| !t.is_finite() || t.abs() > limit) {
                return Err(Error::InvalidSpec(format!("sample time {t} at vertex {v} outside [-π, π]")));
            }
        }
        if points.iter().all(|ts| ts.is_empty()) {
            return Err(Error::EmptyPlan);
        }
        Ok(Self { points })
    }

    pub fn vertex_count(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self, v: usize) -> &[T] {
        &self.points[v]
    }

    pub fn total(&self) -> usize {
        self.points.iter().map(Vec::len).sum()
    }

    /// `(vertex, t)` in row order of the design matrix.
    pub fn rows(&self) -> impl Iterator<Item = (usize, T)> + '_ {
        self.points
            .iter()
            .enumerate()
            .flat_map(|(v, ts)| ts.iter().map(move |&t| (v, t)))
    }
}

/// The `2m` grid `t_i = -π + 2iπ/(2m-1)`, `i = 0..2m`.
pub fn equispaced_grid<T: Scalar>(m: usize) -> Vec<T> {
    let count = 2 * m;
    (0..count)
        .map(|i| T::lit(-PI + 2.0 * i as f64 * PI / (count as f64 - 1.0)))
        .collect()
}

/// Per-vertex trig design at `times`: `sin(τt)` for `τ = 1..=m0`, then
/// `cos(τt)` for `τ = 0..=m0`.
pub fn vertex_trig_design<T: Scalar>(times: &[T], m0: usize) -> DMatrix<T> {
    DMatrix::from_fn(times.len(), 2 * m0 + 1, |i, j| {
        let t = times[i];
        if j < m0 {
            (T::from_count(j + 1) * t).sin()
        } else {
            (T::from_count(j - m0) * t).cos()
        }
    })
}

fn check_dims<T: Scalar>(n: usize, graph_basis: &SpectralBasis<T>, m0: usize) -> Result<()> {
    if graph_basis.dim() != n {
        return Err(Error::shape(format!("graph basis of dimension {n}"), graph_basis.dim()));
    }
    if m0 < 1 {
        return Err(Error::InvalidSpec("m0 must be at least 1".into()));
    }
    Ok(())
}

/// Values of every dictionary function at the plan's sample points. Rows
/// run vertex-major, then by sample order within a vertex.
pub fn design_matrix<T: Scalar>(
    plan: &SamplePlan<T>,
    graph_basis: &SpectralBasis<T>,
    m0: usize,
    variant: TrigVariant,
) -> Result<DMatrix<T>> {
    let n = plan.vertex_count();
    check_dims(n, graph_basis, m0)?;
    let cols = coefficient_count(n, m0, variant);
    let mut b = DMatrix::zeros(plan.total(), cols);
    let phi = graph_basis.eigenvectors();
    match variant {
        TrigVariant::Grp => {
            for (row, (v, t)) in plan.rows().enumerate() {
                for tau in 1..=m0 {
                    let (s, c) = (T::from_count(tau) * t).sin_cos();
                    for k in 0..n {
                        let base = k * 2 * m0 + 2 * (tau - 1);
                        b[(row, base)] = phi[(v, k)] * s;
                        b[(row, base + 1)] = phi[(v, k)] * c;
                    }
                }
            }
        }
        TrigVariant::Ts => {
            let width = 2 * m0 + 1;
            let mut row = 0;
            for v in 0..n {
                let block = vertex_trig_design(plan.points(v), m0);
                b.view_mut((row, v * width), block.shape()).copy_from(&block);
                row += block.nrows();
            }
        }
    }
    Ok(b)
}

/// Evaluates the dictionary expansion with coefficients `c` at `query`
/// instants on every vertex. Returns `n x query.len()`.
pub fn recover_continuous<T: Scalar>(
    c: &DVector<T>,
    graph_basis: &SpectralBasis<T>,
    m0: usize,
    variant: TrigVariant,
    query: &[T],
) -> Result<DMatrix<T>> {
    let n = graph_basis.dim();
    check_dims(n, graph_basis, m0)?;
    let want = coefficient_count(n, m0, variant);
    if c.len() != want {
        return Err(Error::shape(format!("{want} coefficients"), c.len()));
    }
    let trig = vertex_trig_design(query, m0).transpose();
    match variant {
        TrigVariant::Grp => {
            // per-vertex trig amplitudes: rows of Φ times the (k, trig) grid
            let mut grid = DMatrix::zeros(n, 2 * m0 + 1);
            for k in 0..n {
                for tau in 1..=m0 {
                    grid[(k, tau - 1)] = c[k * 2 * m0 + 2 * (tau - 1)];
                    grid[(k, m0 + tau)] = c[k * 2 * m0 + 2 * (tau - 1) + 1];
                }
            }
            Ok(graph_basis.eigenvectors() * grid * trig)
        }
        TrigVariant::Ts => {
            let width = 2 * m0 + 1;
            let grid = DMatrix::from_fn(n, width, |v, j| c[v * width + j]);
            Ok(grid * trig)
        }
    }
}
