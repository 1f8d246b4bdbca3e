//! Bipartite (star) expansion of a hypergraph.
//!
//! Vertex order is fixed: nodes `0..N` first, then hyperedges `N..N+M`.
//! The block adjacency `[[0, H], [Hᵀ, 0]]` is stored sparsely together with
//! the symmetric normalization `D^{-1/2} A D^{-1/2}`. Zero-degree vertices get
//! a normalization factor of 0, so they neither send nor receive messages and
//! their Laplacian diagonal is 1.

use ndarray::{Array2, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::hypergraph::Hypergraph;

#[derive(Debug, Clone)]
pub struct BipartiteExpansion {
    num_nodes: usize,
    num_hyperedges: usize,
    /// CSR row offsets, length `N+M+1`.
    offsets: Vec<usize>,
    /// CSR column indices.
    neighbors: Vec<usize>,
    /// Raw adjacency weights (1.0 for the unweighted expansion).
    weights: Vec<f64>,
    /// Entries of the normalized adjacency, aligned with `neighbors`.
    normalized: Vec<f64>,
    degrees: Vec<f64>,
}

impl BipartiteExpansion {
    pub fn new(hg: &Hypergraph) -> Self {
        let weights = vec![1.0; hg.num_memberships()];
        Self::weighted(hg, &weights).expect("unit weights are always valid")
    }

    /// Expansion where each membership `(v, e)` (in [`Hypergraph::memberships`]
    /// order) carries `weights[k]` instead of 1. Weights must be finite and
    /// non-negative.
    pub fn weighted(hg: &Hypergraph, weights: &[f64]) -> Result<Self> {
        let n = hg.num_nodes();
        let m = hg.num_hyperedges();
        let memberships = hg.memberships();
        if weights.len() != memberships.len() {
            return Err(Error::LengthMismatch {
                what: "membership weights",
                expected: memberships.len(),
                actual: weights.len(),
            });
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::NonFinite("membership weights"));
        }

        let total = n + m;
        let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); total];
        for (&(v, e), &w) in memberships.iter().zip(weights) {
            adj[v].push((n + e, w));
            adj[n + e].push((v, w));
        }
        for row in &mut adj {
            row.sort_by_key(|&(j, _)| j);
        }

        let degrees: Vec<f64> = adj.iter().map(|r| r.iter().map(|&(_, w)| w).sum()).collect();
        let inv_sqrt: Vec<f64> = degrees
            .iter()
            .map(|&d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 })
            .collect();

        let mut offsets = Vec::with_capacity(total + 1);
        let mut neighbors = Vec::with_capacity(2 * memberships.len());
        let mut raw = Vec::with_capacity(2 * memberships.len());
        let mut normalized = Vec::with_capacity(2 * memberships.len());
        offsets.push(0);
        for (i, row) in adj.iter().enumerate() {
            for &(j, w) in row {
                neighbors.push(j);
                raw.push(w);
                normalized.push(inv_sqrt[i] * w * inv_sqrt[j]);
            }
            offsets.push(neighbors.len());
        }

        Ok(Self {
            num_nodes: n,
            num_hyperedges: m,
            offsets,
            neighbors,
            weights: raw,
            normalized,
            degrees,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_hyperedges(&self) -> usize {
        self.num_hyperedges
    }

    pub fn num_vertices(&self) -> usize {
        self.num_nodes + self.num_hyperedges
    }

    /// Weighted degree `d(v_i) = Σ_j A_ij` (integral for the plain expansion).
    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    /// Iterates `(j, Â_ij)` over the non-zeros of row `i`.
    pub fn normalized_row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.offsets[i]..self.offsets[i + 1];
        self.neighbors[span.clone()]
            .iter()
            .copied()
            .zip(self.normalized[span].iter().copied())
    }

    /// `Â · x` as a sparse product.
    pub fn propagate(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        assert_eq!(x.nrows(), self.num_vertices(), "row count must match vertex count");
        let mut out = Array2::zeros(x.raw_dim());
        for (i, mut out_row) in out.axis_iter_mut(Axis(0)).enumerate() {
            for (j, a) in self.normalized_row(i) {
                out_row.scaled_add(a, &x.row(j));
            }
        }
        out
    }

    /// `(I − γ L̂) · x = (1 − γ) x + γ Â x`.
    pub fn highpass(&self, x: ArrayView2<'_, f64>, gamma: f64) -> Array2<f64> {
        let mut out = self.propagate(x);
        out *= gamma;
        out.scaled_add(1.0 - gamma, &x);
        out
    }

    pub fn adjacency_dense(&self) -> Array2<f64> {
        self.dense_from(&self.weights)
    }

    pub fn normalized_adjacency_dense(&self) -> Array2<f64> {
        self.dense_from(&self.normalized)
    }

    pub fn laplacian_dense(&self) -> Array2<f64> {
        let mut l = -self.normalized_adjacency_dense();
        for i in 0..self.num_vertices() {
            l[[i, i]] += 1.0;
        }
        l
    }

    /// The node-by-hyperedge block `D_v^{-1/2} H D_e^{-1/2}` of `Â`.
    pub fn normalized_incidence_dense(&self) -> Array2<f64> {
        let n = self.num_nodes;
        let mut b = Array2::zeros((n, self.num_hyperedges));
        for v in 0..n {
            for (j, a) in self.normalized_row(v) {
                b[[v, j - n]] = a;
            }
        }
        b
    }

    fn dense_from(&self, values: &[f64]) -> Array2<f64> {
        let t = self.num_vertices();
        let mut a = Array2::zeros((t, t));
        for i in 0..t {
            for k in self.offsets[i]..self.offsets[i + 1] {
                a[[i, self.neighbors[k]]] = values[k];
            }
        }
        a
    }
}
