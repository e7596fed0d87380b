//! Point clouds and the Euclidean adjacency graphs built over them.
//!
//! Four graph families are supported: the complete graph, the symmetrized
//! k-nearest-neighbor graph, the Euclidean minimum spanning tree, and unions
//! of these. Every edge stores the Euclidean length between its endpoints.
//! Neighbor search is brute force; ties between equidistant candidates go to
//! the smaller point index.

use std::cmp::Ordering;

use crate::error::{FermatError, Result};

/// `n` points in `R^D`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    n: usize,
    dim: usize,
    coords: Vec<f64>,
}

impl PointCloud {
    /// Builds a cloud from a row-major buffer of `n * dim` coordinates.
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(FermatError::ZeroDimension);
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(FermatError::RaggedBuffer {
                len: coords.len(),
                dim,
            });
        }
        let n = coords.len() / dim;
        if n < 2 {
            return Err(FermatError::TooFewPoints(n));
        }
        if let Some(pos) = coords.iter().position(|v| !v.is_finite()) {
            return Err(FermatError::NonFinite {
                point: pos / dim,
                axis: pos % dim,
            });
        }
        Ok(Self { n, dim, coords })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut coords = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(FermatError::DimensionMismatch {
                    expected: dim,
                    got: r.len(),
                });
            }
            coords.extend_from_slice(r);
        }
        Self::new(dim, coords)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coords
    }

    #[inline]
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        euclidean(self.point(i), self.point(j))
    }

    /// Sub-cloud on `idx`, in the given order.
    pub fn select(&self, idx: &[usize]) -> Result<PointCloud> {
        let mut coords = Vec::with_capacity(idx.len() * self.dim);
        for &i in idx {
            if i >= self.n {
                return Err(FermatError::VertexOutOfRange {
                    index: i,
                    n: self.n,
                });
            }
            coords.extend_from_slice(self.point(i));
        }
        PointCloud::new(self.dim, coords)
    }

    /// Every coordinate multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Result<PointCloud> {
        PointCloud::new(self.dim, self.coords.iter().map(|v| v * c).collect())
    }
}

#[inline]
pub(crate) fn squared_euclidean(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for l in 0..4 {
            let d = x[l] - y[l];
            acc[l] += d * d;
        }
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        let d = x - y;
        tail += d * d;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Euclidean distance between two coordinate slices.
#[inline]
pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    squared_euclidean(a, b).sqrt()
}

/// Full symmetric matrix of pairwise Euclidean distances, row-major.
pub(crate) fn pairwise_distances(cloud: &PointCloud) -> Vec<f64> {
    let n = cloud.len();
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        let pi = cloud.point(i);
        for j in (i + 1)..n {
            let d = euclidean(pi, cloud.point(j));
            out[i * n + j] = d;
            out[j * n + i] = d;
        }
    }
    out
}

/// Orders candidates by distance, then index.
#[inline]
pub(crate) fn neighbor_order(a: (f64, usize), b: (f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

/// Indices of the `k` nearest entries of `dists`, skipping `exclude`, sorted by
/// (distance, index).
pub(crate) fn k_smallest(dists: &[f64], k: usize, exclude: Option<usize>) -> Vec<usize> {
    let mut cand: Vec<(f64, usize)> = dists
        .iter()
        .copied()
        .enumerate()
        .filter(|&(j, _)| Some(j) != exclude)
        .map(|(j, d)| (d, j))
        .collect();
    let k = k.min(cand.len());
    if k == 0 {
        return Vec::new();
    }
    if k < cand.len() {
        cand.select_nth_unstable_by(k - 1, |a, b| neighbor_order(*a, *b));
        cand.truncate(k);
    }
    cand.sort_unstable_by(|a, b| neighbor_order(*a, *b));
    cand.into_iter().map(|(_, j)| j).collect()
}

/// Which construction produced a graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GraphKind {
    Complete,
    Knn,
    Mst,
    KnnMstUnion,
    /// Built from an explicit edge list.
    Custom,
}

impl GraphKind {
    fn union(self, other: GraphKind) -> GraphKind {
        use GraphKind::*;
        match (self, other) {
            (a, b) if a == b => a,
            (Complete, _) | (_, Complete) => Complete,
            (Knn, Mst) | (Mst, Knn) => KnnMstUnion,
            (KnnMstUnion, Knn | Mst) | (Knn | Mst, KnnMstUnion) => KnnMstUnion,
            _ => Custom,
        }
    }
}

/// Undirected edge with `i < j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub length: f64,
}

/// Sparse undirected weighted graph over point indices.
///
/// Edges are kept sorted by `(i, j)` with `i < j`, alongside a CSR adjacency
/// list in which every edge appears once from each endpoint.
#[derive(Debug, Clone)]
pub struct AdjacencyGraph {
    n: usize,
    kind: GraphKind,
    edges: Vec<Edge>,
    offsets: Vec<usize>,
    adjacency: Vec<(usize, f64)>,
}

impl AdjacencyGraph {
    fn from_sorted_edges(n: usize, kind: GraphKind, edges: Vec<Edge>) -> Self {
        let mut degree = vec![0usize; n];
        for e in &edges {
            degree[e.i] += 1;
            degree[e.j] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut fill = offsets[..n].to_vec();
        let mut adjacency = vec![(0usize, 0.0f64); offsets[n]];
        for e in &edges {
            adjacency[fill[e.i]] = (e.j, e.length);
            fill[e.i] += 1;
            adjacency[fill[e.j]] = (e.i, e.length);
            fill[e.j] += 1;
        }
        Self {
            n,
            kind,
            edges,
            offsets,
            adjacency,
        }
    }

    fn from_pairs(cloud: &PointCloud, kind: GraphKind, mut pairs: Vec<(usize, usize)>) -> Self {
        pairs.sort_unstable();
        pairs.dedup();
        let edges = pairs
            .into_iter()
            .map(|(i, j)| Edge {
                i,
                j,
                length: cloud.distance(i, j),
            })
            .collect();
        Self::from_sorted_edges(cloud.len(), kind, edges)
    }

    /// Graph with an explicit edge list; lengths come from `cloud`.
    pub fn from_edges(cloud: &PointCloud, pairs: &[(usize, usize)]) -> Result<Self> {
        let n = cloud.len();
        let mut norm = Vec::with_capacity(pairs.len());
        for &(a, b) in pairs {
            for v in [a, b] {
                if v >= n {
                    return Err(FermatError::VertexOutOfRange { index: v, n });
                }
            }
            if a == b {
                return Err(FermatError::InvalidParameter(format!("self-loop at {a}")));
            }
            norm.push((a.min(b), a.max(b)));
        }
        Ok(Self::from_pairs(cloud, GraphKind::Custom, norm))
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn kind(&self) -> GraphKind {
        self.kind
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edge_pairs(&self) -> Vec<(usize, usize)> {
        self.edges.iter().map(|e| (e.i, e.j)).collect()
    }

    /// `(neighbor, length)` pairs incident to `v`.
    #[inline]
    pub fn neighbors(&self, v: usize) -> &[(usize, f64)] {
        &self.adjacency[self.offsets[v]..self.offsets[v + 1]]
    }

    #[inline]
    pub(crate) fn csr(&self) -> (&[usize], &[(usize, f64)]) {
        (&self.offsets, &self.adjacency)
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn average_degree(&self) -> f64 {
        2.0 * self.edges.len() as f64 / self.n as f64
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        let (i, j) = (a.min(b), a.max(b));
        self.edges
            .binary_search_by(|e| (e.i, e.j).cmp(&(i, j)))
            .is_ok()
    }

    pub fn total_length(&self) -> f64 {
        self.edges.iter().map(|e| e.length).sum()
    }

    pub fn component_count(&self) -> usize {
        let mut dsu = DisjointSet::new(self.n);
        for e in &self.edges {
            dsu.union(e.i, e.j);
        }
        dsu.components()
    }

    pub fn is_connected(&self) -> bool {
        self.component_count() == 1
    }
}

/// Union-find with path halving and union by size.
#[derive(Debug, Clone)]
pub(crate) struct DisjointSet {
    parent: Vec<usize>,
    size: Vec<usize>,
    count: usize,
}

impl DisjointSet {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
            count: n,
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        self.count -= 1;
        true
    }

    pub(crate) fn components(&self) -> usize {
        self.count
    }
}

/// All `n(n-1)/2` edges.
pub fn build_complete_graph(cloud: &PointCloud) -> Result<AdjacencyGraph> {
    let n = cloud.len();
    if n < 2 {
        return Err(FermatError::TooFewPoints(n));
    }
    let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            pairs.push((i, j));
        }
    }
    Ok(AdjacencyGraph::from_pairs(
        cloud,
        GraphKind::Complete,
        pairs,
    ))
}

fn check_k(k: usize, n: usize) -> Result<()> {
    if k == 0 || k > n - 1 {
        return Err(FermatError::InvalidK { k, max: n - 1 });
    }
    Ok(())
}

fn knn_pairs(n: usize, pairwise: &[f64], k: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::with_capacity(n * k);
    for i in 0..n {
        for j in k_smallest(&pairwise[i * n..(i + 1) * n], k, Some(i)) {
            pairs.push((i.min(j), i.max(j)));
        }
    }
    pairs
}

/// Prim's algorithm on the dense distance matrix, O(n^2).
fn mst_pairs(n: usize, pairwise: &[f64]) -> Vec<(usize, usize)> {
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    let mut pairs = Vec::with_capacity(n - 1);
    best[0] = 0.0;
    for _ in 0..n {
        let mut u = usize::MAX;
        for v in 0..n {
            if !in_tree[v] && (u == usize::MAX || best[v] < best[u]) {
                u = v;
            }
        }
        in_tree[u] = true;
        if parent[u] != usize::MAX {
            pairs.push((u.min(parent[u]), u.max(parent[u])));
        }
        let row = &pairwise[u * n..(u + 1) * n];
        for v in 0..n {
            if !in_tree[v] && row[v] < best[v] {
                best[v] = row[v];
                parent[v] = u;
            }
        }
    }
    pairs
}

/// Symmetrized k-NN graph: `(i, j)` is an edge when either endpoint is among
/// the other's `k` nearest neighbors. May be disconnected.
pub fn build_knn_graph(cloud: &PointCloud, k: usize) -> Result<AdjacencyGraph> {
    let n = cloud.len();
    check_k(k, n)?;
    let pw = pairwise_distances(cloud);
    Ok(AdjacencyGraph::from_pairs(
        cloud,
        GraphKind::Knn,
        knn_pairs(n, &pw, k),
    ))
}

/// Euclidean minimum spanning tree of the complete graph.
pub fn build_mst(cloud: &PointCloud) -> Result<AdjacencyGraph> {
    let n = cloud.len();
    if n < 2 {
        return Err(FermatError::TooFewPoints(n));
    }
    let pw = pairwise_distances(cloud);
    Ok(AdjacencyGraph::from_pairs(
        cloud,
        GraphKind::Mst,
        mst_pairs(n, &pw),
    ))
}

/// Union of the k-NN graph and the MST, sharing one pairwise-distance pass.
/// Always connected.
pub fn build_knn_mst_graph(cloud: &PointCloud, k: usize) -> Result<AdjacencyGraph> {
    let n = cloud.len();
    check_k(k, n)?;
    let pw = pairwise_distances(cloud);
    let mut pairs = knn_pairs(n, &pw, k);
    pairs.extend(mst_pairs(n, &pw));
    Ok(AdjacencyGraph::from_pairs(
        cloud,
        GraphKind::KnnMstUnion,
        pairs,
    ))
}

/// Edge-set union; duplicate edges collapse to one.
pub fn union_graphs(a: &AdjacencyGraph, b: &AdjacencyGraph) -> Result<AdjacencyGraph> {
    if a.n != b.n {
        return Err(FermatError::VertexCountMismatch(a.n, b.n));
    }
    let mut merged = Vec::with_capacity(a.edges.len() + b.edges.len());
    let (mut x, mut y) = (a.edges.iter().peekable(), b.edges.iter().peekable());
    loop {
        let next = match (x.peek(), y.peek()) {
            (Some(ea), Some(eb)) => match (ea.i, ea.j).cmp(&(eb.i, eb.j)) {
                Ordering::Less => x.next(),
                Ordering::Greater => y.next(),
                Ordering::Equal => {
                    y.next();
                    x.next()
                }
            },
            (Some(_), None) => x.next(),
            (None, Some(_)) => y.next(),
            (None, None) => break,
        };
        merged.push(*next.unwrap());
    }
    Ok(AdjacencyGraph::from_sorted_edges(
        a.n,
        a.kind.union(b.kind),
        merged,
    ))
}

/// `[sqrt(n) / 2]`, at least 1 and at most `n - 1`.
pub fn default_graph_k(n: usize) -> usize {
    ((n as f64).sqrt() / 2.0).round().clamp(1.0, (n - 1) as f64) as usize
}
