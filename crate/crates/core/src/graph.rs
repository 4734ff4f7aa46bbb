//! Weighted undirected graphs and the matrices built from them.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result, Scalar};

/// Default retry budget for connected Erdős–Rényi sampling.
pub const DEFAULT_MAX_RETRIES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge<T> {
    pub i: usize,
    pub j: usize,
    pub weight: T,
}

/// Undirected weighted graph. Edges are stored with `i < j`, sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph<T> {
    n: usize,
    edges: Vec<Edge<T>>,
}

/// Adjacency `W`, degree `D` and Laplacian `L = D - W`.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphMatrices<T: Scalar> {
    pub adjacency: DMatrix<T>,
    pub degree: DMatrix<T>,
    pub laplacian: DMatrix<T>,
}

impl<T: Scalar> Graph<T> {
    /// Validates and builds a graph. Endpoints may be given in either order.
    pub fn new<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, T)>,
    {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for (a, b, w) in edges {
            for idx in [a, b] {
                if idx >= n {
                    return Err(Error::IndexOutOfRange { index: idx, n });
                }
            }
            if a == b {
                return Err(Error::SelfLoop(a));
            }
            let (i, j) = if a < b { (a, b) } else { (b, a) };
            if !w.is_finite() || w <= T::zero() {
                return Err(Error::NonpositiveWeight { i, j });
            }
            if !seen.insert((i, j)) {
                return Err(Error::DuplicateEdge(i, j));
            }
            out.push(Edge { i, j, weight: w });
        }
        out.sort_by_key(|e| (e.i, e.j));
        Ok(Self { n, edges: out })
    }

    pub fn edgeless(n: usize) -> Self {
        Self { n, edges: Vec::new() }
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge<T>] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn weight(&self, i: usize, j: usize) -> Option<T> {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        self.edges
            .binary_search_by_key(&(i, j), |e| (e.i, e.j))
            .ok()
            .map(|k| self.edges[k].weight)
    }

    pub fn adjacency(&self) -> DMatrix<T> {
        let mut w = DMatrix::zeros(self.n, self.n);
        for e in &self.edges {
            w[(e.i, e.j)] = e.weight;
            w[(e.j, e.i)] = e.weight;
        }
        w
    }

    pub fn laplacian(&self) -> DMatrix<T> {
        self.matrices().laplacian
    }

    pub fn matrices(&self) -> GraphMatrices<T> {
        let adjacency = self.adjacency();
        let mut degree = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            degree[(i, i)] = adjacency.row(i).sum();
        }
        let laplacian = &degree - &adjacency;
        GraphMatrices {
            adjacency,
            degree,
            laplacian,
        }
    }

    pub fn is_connected(&self) -> bool {
        if self.n <= 1 {
            return true;
        }
        let mut adj = vec![Vec::new(); self.n];
        for e in &self.edges {
            adj[e.i].push(e.j);
            adj[e.j].push(e.i);
        }
        let mut visited = vec![false; self.n];
        let mut stack = vec![0];
        visited[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &v in &adj[u] {
                if !visited[v] {
                    visited[v] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count == self.n
    }
}

/// Cartesian product `G × H`: adjacency `W_G ⊗ I + I ⊗ W_H`.
/// Vertex `(u, v)` gets index `u * |H| + v`.
pub fn cartesian_product<T: Scalar>(g: &Graph<T>, h: &Graph<T>) -> Graph<T> {
    let m = h.n;
    let mut edges = Vec::new();
    for e in &g.edges {
        for v in 0..m {
            edges.push((e.i * m + v, e.j * m + v, e.weight));
        }
    }
    for u in 0..g.n {
        for e in &h.edges {
            edges.push((u * m + e.i, u * m + e.j, e.weight));
        }
    }
    Graph::new(g.n * m, edges).expect("product of valid graphs is valid")
}

/// Tensor (Kronecker) product `G ⊗ H`: adjacency `W_G ⊗ W_H`.
pub fn tensor_product<T: Scalar>(g: &Graph<T>, h: &Graph<T>) -> Graph<T> {
    let m = h.n;
    let mut edges = Vec::new();
    for a in &g.edges {
        for b in &h.edges {
            let w = a.weight * b.weight;
            // W_G[i,j] W_H[k,l] and W_G[i,j] W_H[l,k] both contribute
            edges.push((a.i * m + b.i, a.j * m + b.j, w));
            edges.push((a.i * m + b.j, a.j * m + b.i, w));
        }
    }
    Graph::new(g.n * m, edges).expect("product of valid graphs is valid")
}

/// Recipes for synthetic graphs.
#[derive(Debug, Clone, PartialEq)]
pub enum GraphSpec {
    Cycle { len: usize },
    Path { n: usize },
    ErdosRenyi {
        n: usize,
        p: f64,
        seed: u64,
        connected: bool,
    },
}

pub fn generate_graph<T: Scalar>(spec: &GraphSpec) -> Result<Graph<T>> {
    generate_graph_with_retries(spec, DEFAULT_MAX_RETRIES)
}

/// Builds a graph from `spec`. Unit weights throughout. Connected
/// Erdős–Rényi sampling keeps drawing from the same seeded stream until a
/// connected graph appears or `max_retries` draws have failed.
pub fn generate_graph_with_retries<T: Scalar>(
    spec: &GraphSpec,
    max_retries: usize,
) -> Result<Graph<T>> {
    match *spec {
        GraphSpec::Cycle { len } => {
            if len < 3 {
                return Err(Error::InvalidSpec(format!("cycle needs at least 3 vertices, got {len}")));
            }
            Graph::new(len, (0..len).map(|i| (i, (i + 1) % len, T::one())))
        }
        GraphSpec::Path { n } => {
            if n < 1 {
                return Err(Error::InvalidSpec("path needs at least one vertex".into()));
            }
            Graph::new(n, (1..n).map(|i| (i - 1, i, T::one())))
        }
        GraphSpec::ErdosRenyi {
            n,
            p,
            seed,
            connected,
        } => {
            if n < 1 || !(p > 0.0 && p <= 1.0) {
                return Err(Error::InvalidSpec(format!("Erdős–Rényi needs n >= 1 and 0 < p <= 1, got n={n}, p={p}")));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let attempts = if connected { max_retries.max(1) } else { 1 };
            for _ in 0..attempts {
                let mut edges = Vec::new();
                for i in 0..n {
                    for j in (i + 1)..n {
                        if rng.random::<f64>() < p {
                            edges.push((i, j, T::one()));
                        }
                    }
                }
                let g = Graph::new(n, edges)?;
                if !connected || g.is_connected() {
                    return Ok(g);
                }
            }
            Err(Error::ConnectivityTimeout(attempts))
        }
    }
}

fn euclidean<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (x, y)| acc + (*x - *y) * (*x - *y))
        .sqrt()
}

/// Symmetrized k-nearest-neighbour graph with Gaussian weights
/// `exp(-d(i,j)² / σ²)`, where `σ²` is the population variance of all
/// pairwise distances. An edge exists when either endpoint lists the other
/// among its `k` nearest points; points tied with the `k`-th nearest are
/// included as well.
pub fn knn_graph<T: Scalar>(coords: &[Vec<T>], k: usize) -> Result<Graph<T>> {
    let n = coords.len();
    if k < 1 {
        return Err(Error::InvalidSpec("k must be at least 1".into()));
    }
    if n < k + 1 {
        return Err(Error::TooFewPoints { needed: k + 1, got: n });
    }
    let dim = coords[0].len();
    if let Some(bad) = coords.iter().position(|c| c.len() != dim) {
        return Err(Error::shape(format!("{dim} coordinates"), format!("{} at point {bad}", coords[bad].len())));
    }
    let mut dist = DMatrix::zeros(n, n);
    let mut all = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let d = euclidean(&coords[i], &coords[j]);
            if !d.is_finite() {
                return Err(Error::NonFiniteInput(format!("distance between points {i} and {j}")));
            }
            if d == T::zero() {
                return Err(Error::DuplicatePoints(i, j));
            }
            dist[(i, j)] = d;
            dist[(j, i)] = d;
            all.push(d);
        }
    }
    let count = T::from_count(all.len());
    let mean = all.iter().fold(T::zero(), |a, d| a + *d) / count;
    let sigma2 = all.iter().fold(T::zero(), |a, d| a + (*d - mean) * (*d - mean)) / count;
    // all distances equal up to roundoff: scale by the common distance instead
    let scale = if sigma2 <= T::lit(1e3) * T::epsilon() * mean * mean {
        mean * mean
    } else {
        sigma2
    };
    build_knn_edges(&dist, k, T::one() / scale, n)
}

fn build_knn_edges<T: Scalar>(dist: &DMatrix<T>, k: usize, inv_sigma2: T, n: usize) -> Result<Graph<T>> {
    let mut pairs = BTreeSet::new();
    for i in 0..n {
        let mut others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        others.sort_by(|&a, &b| {
            dist[(i, a)]
                .partial_cmp(&dist[(i, b)])
                .expect("finite distances")
                .then(a.cmp(&b))
        });
        // points tied with the k-th nearest (relative 1e-12) are all kept
        let kth = dist[(i, others[k - 1])] * (T::one() + T::lit(1e-12));
        for &j in others.iter().take_while(|&&j| dist[(i, j)] <= kth) {
            pairs.insert((i.min(j), i.max(j)));
        }
    }
    Graph::new(
        n,
        pairs.into_iter().map(|(i, j)| {
            let d = dist[(i, j)];
            // far pairs can underflow; keep the edge with a tiny positive weight
            let floor = T::epsilon().powi(4);
            (i, j, (-(d * d) * inv_sigma2).exp().max(floor))
        }),
    )
}

/// Unit-weight graph joining rows whose Pearson correlation exceeds
/// `threshold` in absolute value. `samples` is `n x T` (one row per vertex).
pub fn correlation_graph<T: Scalar>(samples: &DMatrix<T>, threshold: T) -> Result<Graph<T>> {
    let corr = correlation_matrix(samples)?;
    let n = samples.nrows();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if corr[(i, j)].abs() > threshold {
                edges.push((i, j, T::one()));
            }
        }
    }
    Graph::new(n, edges)
}

/// Pearson correlation between the rows of `samples`.
pub fn correlation_matrix<T: Scalar>(samples: &DMatrix<T>) -> Result<DMatrix<T>> {
    let (n, len) = samples.shape();
    if len < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: len });
    }
    let mut centered = samples.clone();
    for i in 0..n {
        let mean = samples.row(i).mean();
        let mut row = centered.row_mut(i);
        row.add_scalar_mut(-mean);
        let norm = row.norm();
        if norm == T::zero() || !norm.is_finite() {
            return Err(Error::ZeroVarianceRow(i));
        }
        row.unscale_mut(norm);
    }
    let mut corr = &centered * centered.transpose();
    for i in 0..n {
        corr[(i, i)] = T::one();
    }
    Ok(corr)
}

/// Map from product-graph vertex index to its `(u, v)` factor pair.
pub fn product_vertex(index: usize, second_size: usize) -> (usize, usize) {
    (index / second_size, index % second_size)
}

/// Degree of every vertex, weighted.
pub fn degrees<T: Scalar>(g: &Graph<T>) -> Vec<T> {
    let mut deg = vec![T::zero(); g.n];
    for e in &g.edges {
        deg[e.i] += e.weight;
        deg[e.j] += e.weight;
    }
    deg
}

/// Neighbour lists, ordered by index.
pub fn neighbours<T: Scalar>(g: &Graph<T>) -> BTreeMap<usize, Vec<usize>> {
    let mut out: BTreeMap<usize, Vec<usize>> = (0..g.n).map(|i| (i, Vec::new())).collect();
    for e in &g.edges {
        out.get_mut(&e.i).expect("valid index").push(e.j);
        out.get_mut(&e.j).expect("valid index").push(e.i);
    }
    for v in out.values_mut() {
        v.sort_unstable();
    }
    out
}
