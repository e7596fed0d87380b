//! Power-weighted shortest paths and the sample Fermat distance.
//!
//! For a graph over the sample, the power-`alpha` path distance between two
//! vertices is the minimum over paths of `(sum of edge_length^alpha)^(1/alpha)`.
//! Costs are accumulated in the power domain, so a plain Dijkstra over
//! `length^alpha` weights is exact, and the root is taken once per target.
//! The Fermat estimate multiplies that distance by `n^((alpha-1)/(alpha*d))`.
//! Reported distances omit the percolation constant of the continuum metric;
//! every classifier built on top is invariant to that global factor.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use crate::error::{FermatError, Result};
use crate::matrix::SquareMatrix;
use crate::point_graph::{
    build_complete_graph, build_knn_mst_graph, default_graph_k, k_smallest, pairwise_distances,
    squared_euclidean, AdjacencyGraph, GraphKind, PointCloud,
};

/// Adjacency graph used for the estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FermatGraph {
    Complete,
    /// Union of the symmetrized k-NN graph and the Euclidean MST. `None`
    /// selects `k = [sqrt(n) / 2]`.
    KnnMst {
        k: Option<usize>,
    },
}

impl FermatGraph {
    pub fn kind(&self) -> GraphKind {
        match self {
            FermatGraph::Complete => GraphKind::Complete,
            FermatGraph::KnnMst { .. } => GraphKind::KnnMstUnion,
        }
    }

    pub fn resolved_k(&self, n: usize) -> Option<usize> {
        match *self {
            FermatGraph::Complete => None,
            FermatGraph::KnnMst { k } => Some(k.unwrap_or_else(|| default_graph_k(n))),
        }
    }

    pub fn build(&self, cloud: &PointCloud) -> Result<AdjacencyGraph> {
        match self.resolved_k(cloud.len()) {
            None => build_complete_graph(cloud),
            Some(k) => build_knn_mst_graph(cloud, k),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FermatParams {
    pub alpha: f64,
    pub intrinsic_dim: usize,
    pub graph: FermatGraph,
}

impl FermatParams {
    pub fn new(alpha: f64, intrinsic_dim: usize, graph: FermatGraph) -> Result<Self> {
        let p = Self {
            alpha,
            intrinsic_dim,
            graph,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        if self.intrinsic_dim == 0 {
            return Err(FermatError::InvalidIntrinsicDim);
        }
        Ok(())
    }

    /// `n^((alpha-1)/(alpha*d))`.
    pub fn scale(&self, n: usize) -> f64 {
        let exponent = (self.alpha - 1.0) / (self.alpha * self.intrinsic_dim as f64);
        (n as f64).powf(exponent)
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha >= 1.0) || !alpha.is_finite() {
        return Err(FermatError::InvalidAlpha(alpha));
    }
    Ok(())
}

/// Threshold on `alpha * |ln(max length)|` above which lengths are normalized
/// before exponentiation. `f64` overflows near `e^709`.
const OVERFLOW_GUARD: f64 = 300.0;

#[derive(Clone, Copy, PartialEq)]
struct State {
    cost: f64,
    vertex: usize,
}

impl Eq for State {}

impl Ord for State {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for State {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A graph with edge weights pre-raised to the power `alpha`.
struct PowerGraph<'g> {
    offsets: &'g [usize],
    adjacency: &'g [(usize, f64)],
    weights: Vec<f64>,
    alpha: f64,
    norm: f64,
    dense: bool,
}

impl<'g> PowerGraph<'g> {
    fn new(graph: &'g AdjacencyGraph, alpha: f64) -> Self {
        let (offsets, adjacency) = graph.csr();
        let max_len = graph.edges().iter().map(|e| e.length).fold(0.0, f64::max);
        let norm = if max_len > 0.0 && alpha * max_len.ln().abs() > OVERFLOW_GUARD {
            max_len
        } else {
            1.0
        };
        let weights = adjacency
            .iter()
            .map(|&(_, l)| power(l / norm, alpha))
            .collect();
        let n = graph.n();
        Self {
            offsets,
            adjacency,
            weights,
            alpha,
            norm,
            dense: adjacency.len() > n * n / 4,
        }
    }

    fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Power-domain path costs from a set of seeded vertices.
    fn costs(&self, seeds: &[(usize, f64)]) -> Vec<f64> {
        if self.dense {
            self.costs_dense(seeds)
        } else {
            self.costs_heap(seeds)
        }
    }

    fn costs_heap(&self, seeds: &[(usize, f64)]) -> Vec<f64> {
        let n = self.n();
        let mut cost = vec![f64::INFINITY; n];
        let mut heap = BinaryHeap::new();
        for &(v, c) in seeds {
            if c < cost[v] {
                cost[v] = c;
                heap.push(State { cost: c, vertex: v });
            }
        }
        while let Some(State { cost: c, vertex: u }) = heap.pop() {
            if c > cost[u] {
                continue;
            }
            for idx in self.offsets[u]..self.offsets[u + 1] {
                let v = self.adjacency[idx].0;
                let next = c + self.weights[idx];
                if next < cost[v] {
                    cost[v] = next;
                    heap.push(State {
                        cost: next,
                        vertex: v,
                    });
                }
            }
        }
        cost
    }

    /// O(n^2) array Dijkstra for dense graphs.
    fn costs_dense(&self, seeds: &[(usize, f64)]) -> Vec<f64> {
        let n = self.n();
        let mut cost = vec![f64::INFINITY; n];
        let mut done = vec![false; n];
        for &(v, c) in seeds {
            cost[v] = cost[v].min(c);
        }
        for _ in 0..n {
            let mut u = usize::MAX;
            let mut best = f64::INFINITY;
            for v in 0..n {
                if !done[v] && cost[v] < best {
                    best = cost[v];
                    u = v;
                }
            }
            if u == usize::MAX {
                break;
            }
            done[u] = true;
            for idx in self.offsets[u]..self.offsets[u + 1] {
                let v = self.adjacency[idx].0;
                let next = best + self.weights[idx];
                if next < cost[v] {
                    cost[v] = next;
                }
            }
        }
        cost
    }

    fn to_distance(&self, cost: f64) -> f64 {
        if cost.is_infinite() {
            return f64::INFINITY;
        }
        root(cost, self.alpha) * self.norm
    }

    fn distances(&self, seeds: &[(usize, f64)]) -> Vec<f64> {
        self.costs(seeds)
            .into_iter()
            .map(|c| self.to_distance(c))
            .collect()
    }
}

#[inline]
fn power(x: f64, alpha: f64) -> f64 {
    if alpha == 1.0 {
        x
    } else {
        x.powf(alpha)
    }
}

#[inline]
fn root(x: f64, alpha: f64) -> f64 {
    if alpha == 1.0 {
        x
    } else {
        x.powf(alpha.recip())
    }
}

/// Unscaled power-`alpha` path distances from `source` to every vertex.
/// Unreachable vertices get `f64::INFINITY`.
pub fn power_path_distances(graph: &AdjacencyGraph, alpha: f64, source: usize) -> Result<Vec<f64>> {
    check_alpha(alpha)?;
    if source >= graph.n() {
        return Err(FermatError::VertexOutOfRange {
            index: source,
            n: graph.n(),
        });
    }
    Ok(PowerGraph::new(graph, alpha).distances(&[(source, 0.0)]))
}

/// Symmetric matrix of estimated Fermat distances over a cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct FermatMatrix {
    dist: SquareMatrix,
    params: FermatParams,
    scale: f64,
}

impl FermatMatrix {
    /// Wraps an already-scaled distance matrix.
    pub fn from_parts(dist: SquareMatrix, params: FermatParams, scale: f64) -> Self {
        Self {
            dist,
            params,
            scale,
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.dist.n()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.dist.get(i, j)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.dist.row(i)
    }

    pub fn matrix(&self) -> &SquareMatrix {
        &self.dist
    }

    pub fn params(&self) -> &FermatParams {
        &self.params
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }
}

/// Estimated Fermat distances between every pair of points, single-threaded.
pub fn fermat_matrix(cloud: &PointCloud, params: &FermatParams) -> Result<FermatMatrix> {
    fermat_matrix_with_workers(cloud, params, 1)
}

/// As [`fermat_matrix`], running single-source searches on `workers` threads.
/// The result does not depend on `workers`.
pub fn fermat_matrix_with_workers(
    cloud: &PointCloud,
    params: &FermatParams,
    workers: usize,
) -> Result<FermatMatrix> {
    params.validate()?;
    let graph = params.graph.build(cloud)?;
    fermat_matrix_on_graph(&graph, params, workers)
}

/// Fermat matrix over a prebuilt graph.
pub fn fermat_matrix_on_graph(
    graph: &AdjacencyGraph,
    params: &FermatParams,
    workers: usize,
) -> Result<FermatMatrix> {
    params.validate()?;
    let n = graph.n();
    let pg = PowerGraph::new(graph, params.alpha);
    let rows: Vec<Vec<f64>> = if workers > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| FermatError::InvalidParameter(format!("thread pool: {e}")))?;
        pool.install(|| {
            (0..n)
                .into_par_iter()
                .map(|s| pg.distances(&[(s, 0.0)]))
                .collect()
        })
    } else {
        (0..n).map(|s| pg.distances(&[(s, 0.0)])).collect()
    };

    let scale = params.scale(n);
    let mut dist = SquareMatrix::zeros(n);
    for i in 0..n {
        for j in (i + 1)..n {
            // Both directions are valid path costs; keep the smaller so the
            // matrix is exactly symmetric.
            let d = rows[i][j].min(rows[j][i]);
            if !d.is_finite() {
                return Err(FermatError::Disconnected(i, j));
            }
            let v = scale * d;
            dist.set(i, j, v);
            dist.set(j, i, v);
        }
    }
    Ok(FermatMatrix {
        dist,
        params: *params,
        scale,
    })
}

/// Scaled Fermat distances from a new point to every sample point.
///
/// The new point is attached to its `k0` Euclidean-nearest sample points
/// (ties to the smaller index) and shortest paths are run from it over the
/// otherwise unchanged graph. `k0 = None` uses the graph's average degree,
/// rounded, at least 1. The scale factor is the one of the original sample.
pub fn extend_out_of_sample(
    graph: &AdjacencyGraph,
    cloud: &PointCloud,
    x_new: &[f64],
    k0: Option<usize>,
    params: &FermatParams,
) -> Result<Vec<f64>> {
    params.validate()?;
    let n = cloud.len();
    if graph.n() != n {
        return Err(FermatError::VertexCountMismatch(graph.n(), n));
    }
    if x_new.len() != cloud.dim() {
        return Err(FermatError::DimensionMismatch {
            expected: cloud.dim(),
            got: x_new.len(),
        });
    }
    if x_new.iter().any(|v| !v.is_finite()) {
        return Err(FermatError::InvalidParameter(
            "new point has a non-finite coordinate".into(),
        ));
    }
    let k0 = k0.unwrap_or_else(|| (graph.average_degree().round() as usize).max(1));
    if k0 == 0 || k0 > n {
        return Err(FermatError::InvalidK { k: k0, max: n });
    }
    let to_new: Vec<f64> = cloud
        .points()
        .map(|p| squared_euclidean(p, x_new).sqrt())
        .collect();
    let pg = PowerGraph::new(graph, params.alpha);
    let seeds: Vec<(usize, f64)> = k_smallest(&to_new, k0, None)
        .into_iter()
        .map(|j| (j, power(to_new[j] / pg.norm, params.alpha)))
        .collect();
    let scale = params.scale(n);
    Ok(pg
        .distances(&seeds)
        .into_iter()
        .map(|d| scale * d)
        .collect())
}

/// Pairwise Euclidean distance matrix.
pub fn euclidean_matrix(cloud: &PointCloud) -> SquareMatrix {
    SquareMatrix::from_vec(cloud.len(), pairwise_distances(cloud)).expect("square by construction")
}
