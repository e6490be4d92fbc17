//! Edge indexing, the complete-graph incidence matrix and Laplacian assembly.
//!
//! Nodes and edges are 0-based. Edge `m` is the node pair `(n, k)` with
//! `k < n`, enumerated lexicographically: `(1,0), (2,0), (2,1), (3,0), ...`,
//! so `m = n(n-1)/2 + k`.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Set of edge indices.
pub type EdgeSet = BTreeSet<usize>;

/// Bijection between unordered node pairs and edge indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeIndexMap {
    n_nodes: usize,
    pairs: Vec<(usize, usize)>,
}

impl EdgeIndexMap {
    pub fn new(n_nodes: usize) -> Result<Self> {
        if n_nodes < 2 {
            return Err(Error::invalid(format!(
                "a graph needs at least 2 nodes, got {n_nodes}"
            )));
        }
        let pairs = (1..n_nodes)
            .flat_map(|n| (0..n).map(move |k| (n, k)))
            .collect();
        Ok(Self { n_nodes, pairs })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    /// Number of candidate edges, `N(N-1)/2`.
    pub fn max_edges(&self) -> usize {
        self.pairs.len()
    }

    /// Node pair `(n, k)`, `k < n`, of edge `m`.
    pub fn pair(&self, m: usize) -> (usize, usize) {
        self.pairs[m]
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// Edge index of the unordered pair `{a, b}`; `None` for self-loops or
    /// out-of-range nodes.
    pub fn index_of(&self, a: usize, b: usize) -> Option<usize> {
        let (n, k) = if a > b { (a, b) } else { (b, a) };
        (n != k && n < self.n_nodes).then(|| n * (n - 1) / 2 + k)
    }
}

pub fn build_edge_index_map(n_nodes: usize) -> Result<EdgeIndexMap> {
    EdgeIndexMap::new(n_nodes)
}

/// Signed `N x N(N-1)/2` incidence matrix of the complete graph. Column `m`
/// for edge `(n, k)` holds `+1` at row `k` and `-1` at row `n`.
#[derive(Debug, Clone)]
pub struct IncidenceMatrix {
    map: EdgeIndexMap,
    dense: DMatrix<f64>,
}

impl IncidenceMatrix {
    pub fn new(map: EdgeIndexMap) -> Self {
        let mut dense = DMatrix::zeros(map.n_nodes(), map.max_edges());
        for (m, &(n, k)) in map.pairs().iter().enumerate() {
            dense[(k, m)] = 1.0;
            dense[(n, m)] = -1.0;
        }
        Self { map, dense }
    }

    pub fn map(&self) -> &EdgeIndexMap {
        &self.map
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.dense
    }

    pub fn n_nodes(&self) -> usize {
        self.map.n_nodes()
    }

    pub fn max_edges(&self) -> usize {
        self.map.max_edges()
    }
}

pub fn build_incidence(map: &EdgeIndexMap) -> IncidenceMatrix {
    IncidenceMatrix::new(map.clone())
}

/// `B diag(x) B^T`, assembled edge by edge.
pub fn laplacian_from_weights(b: &IncidenceMatrix, x: &DVector<f64>) -> Result<DMatrix<f64>> {
    laplacian_from_map(b.map(), x)
}

pub(crate) fn laplacian_from_map(map: &EdgeIndexMap, x: &DVector<f64>) -> Result<DMatrix<f64>> {
    if x.len() != map.max_edges() {
        return Err(Error::dims("laplacian_from_weights", map.max_edges(), x.len()));
    }
    let n = map.n_nodes();
    let mut l = DMatrix::zeros(n, n);
    for (&(i, j), &w) in map.pairs().iter().zip(x.iter()) {
        if w == 0.0 {
            continue;
        }
        l[(i, i)] += w;
        l[(j, j)] += w;
        l[(i, j)] -= w;
        l[(j, i)] -= w;
    }
    Ok(l)
}

/// Inverse of the assembly rule: weight of edge `(n, k)` is `-L[n, k]`.
pub fn weights_from_laplacian(map: &EdgeIndexMap, l: &DMatrix<f64>) -> Result<DVector<f64>> {
    let n = map.n_nodes();
    if l.shape() != (n, n) {
        return Err(Error::dims(
            "weights_from_laplacian",
            format!("{n}x{n}"),
            format!("{}x{}", l.nrows(), l.ncols()),
        ));
    }
    Ok(DVector::from_iterator(
        map.max_edges(),
        map.pairs().iter().map(|&(i, j)| -l[(i, j)]),
    ))
}

/// Edges whose weight strictly exceeds `threshold`.
pub fn support_of(x: &DVector<f64>, threshold: f64) -> EdgeSet {
    x.iter()
        .enumerate()
        .filter(|(_, &w)| w > threshold)
        .map(|(m, _)| m)
        .collect()
}
