//! Second-smallest eigenpair of the bipartite normalized Laplacian.
//!
//! `Â = [[0, B], [Bᵀ, 0]]` with `B = D_v^{-1/2} H D_e^{-1/2}`, so the spectrum
//! of `L̂ = I − Â` is `1 ∓ σ_i` over the singular values of `B` (plus 1 for
//! any remaining dimensions). The eigenvector for `1 − σ₂` is `[u₂; v₂]/√2`
//! where `u₂, v₂` are the second singular pair. [`second_eigenpair`] uses
//! that reduction; [`second_eigenpair_dense`] diagonalizes the full `L̂` and
//! serves as a cross-check on small instances.

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{s, Array1, Array2};
use serde::Serialize;

use crate::bipartite::BipartiteExpansion;

/// Eigen-gap below which the second eigenvector is treated as undefined.
pub const DEGENERATE_GAP: f64 = 1e-8;

#[derive(Debug, Clone, Serialize)]
pub struct SecondEigenpair {
    pub value: f64,
    /// Unit vector over all `N+M` entities, nodes first.
    pub vector: Array1<f64>,
    /// Distance from the second eigenvalue to its nearest neighbor in the
    /// spectrum.
    pub gap: f64,
    pub degenerate: bool,
}

impl SecondEigenpair {
    /// Node block rescaled to unit length, if non-zero.
    pub fn node_part(&self, num_nodes: usize) -> Option<Array1<f64>> {
        let u = self.vector.slice(s![..num_nodes]).to_owned();
        let norm = u.dot(&u).sqrt();
        (norm > 1e-12).then(|| u / norm)
    }
}

fn to_dmatrix(a: &Array2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

/// Sign convention: the entry of largest magnitude is positive.
fn orient(mut v: Array1<f64>) -> Array1<f64> {
    let mut pivot = 0.0_f64;
    for &x in v.iter() {
        if x.abs() > pivot.abs() + 1e-12 {
            pivot = x;
        }
    }
    if pivot < 0.0 {
        v.mapv_inplace(|x| -x);
    }
    v
}

/// Eigenpairs of a symmetric matrix sorted by descending eigenvalue.
fn sorted_eigen(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |r, c| {
        eig.eigenvectors[(r, order[c])]
    });
    (values, vectors)
}

/// Reduced route: eigen-decompose the smaller of `BBᵀ` and `BᵀB`.
pub fn second_eigenpair(expansion: &BipartiteExpansion) -> SecondEigenpair {
    let n = expansion.num_nodes();
    let m = expansion.num_hyperedges();
    let b = expansion.normalized_incidence_dense();
    let bm = to_dmatrix(&b);
    let node_side = n <= m;
    let gram = if node_side { &bm * bm.transpose() } else { bm.transpose() * &bm };
    let (lambdas, vectors) = sorted_eigen(gram);
    let sigma: Vec<f64> = lambdas.iter().map(|l| l.max(0.0).sqrt()).collect();
    let at = |i: usize| sigma.get(i).copied().unwrap_or(0.0);
    let (s1, s2, s3) = (at(0), at(1), at(2));
    // Unpaired dimensions contribute eigenvalue 1 (σ = 0); with none left the
    // next eigenvalue up is 1 + σ₂.
    let third = if sigma.len() >= 3 || n + m > 2 * sigma.len() { s3 } else { -s2 };
    let gap = (s1 - s2).min(s2 - third);

    let total = n + m;
    let mut vector = Array1::zeros(total);
    if sigma.len() >= 2 && s2 > 0.0 {
        let small = vectors.column(1);
        let small = Array1::from_iter(small.iter().copied());
        let other = if node_side {
            b.t().dot(&small) / s2
        } else {
            b.dot(&small) / s2
        };
        let (u, v) = if node_side { (small, other) } else { (other, small) };
        vector.slice_mut(s![..n]).assign(&u);
        vector.slice_mut(s![n..]).assign(&v);
        let norm = vector.dot(&vector).sqrt();
        if norm > 0.0 {
            vector /= norm;
        }
    }
    SecondEigenpair {
        value: 1.0 - s2,
        vector: orient(vector),
        gap,
        degenerate: !(gap >= DEGENERATE_GAP) || !(s2 > 0.0),
    }
}

/// Dense route over the full `(N+M) × (N+M)` Laplacian.
pub fn second_eigenpair_dense(expansion: &BipartiteExpansion) -> SecondEigenpair {
    let l = to_dmatrix(&expansion.laplacian_dense());
    let (mut values, vectors) = sorted_eigen(l);
    values.reverse();
    let k = values.len();
    let value = values.get(1).copied().unwrap_or(f64::NAN);
    let prev = values.first().copied().unwrap_or(f64::NAN);
    let next = values.get(2).copied().unwrap_or(f64::INFINITY);
    let gap = (value - prev).min(next - value);
    let vector = if k >= 2 {
        Array1::from_iter(vectors.column(k - 2).iter().copied())
    } else {
        Array1::zeros(k)
    };
    SecondEigenpair {
        value,
        vector: orient(vector),
        gap,
        degenerate: !(gap >= DEGENERATE_GAP),
    }
}

/// `min(‖a − b‖, ‖a + b‖)`.
pub fn sign_aligned_distance(a: &Array1<f64>, b: &Array1<f64>) -> f64 {
    let minus = (a - b).mapv(|x| x * x).sum().sqrt();
    let plus = (a + b).mapv(|x| x * x).sum().sqrt();
    minus.min(plus)
}

#[derive(Debug, Clone, Serialize)]
pub struct Perturbation {
    /// `None` when either operator has a near-degenerate second eigenvalue.
    pub error: Option<f64>,
    pub gap_reference: f64,
    pub gap_weighted: f64,
}

/// Sign-aligned distance between the second eigenvectors of two expansions
/// of the same hypergraph.
pub fn eigvec_perturbation(reference: &BipartiteExpansion, weighted: &BipartiteExpansion) -> Perturbation {
    assert_eq!(
        reference.num_vertices(),
        weighted.num_vertices(),
        "expansions must have the same size"
    );
    let a = second_eigenpair(reference);
    let b = second_eigenpair(weighted);
    let error = (!a.degenerate && !b.degenerate).then(|| sign_aligned_distance(&a.vector, &b.vector));
    Perturbation {
        error,
        gap_reference: a.gap,
        gap_weighted: b.gap,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypergraph::Hypergraph;
    use approx::assert_abs_diff_eq;

    fn chain() -> Hypergraph {
        Hypergraph::new(
            6,
            vec![vec![0, 1, 2], vec![2, 3], vec![3, 4, 5], vec![0, 5], vec![1, 3, 4], vec![0, 4]],
            None,
            None,
        )
        .unwrap()
    }

    #[test]
    fn reduced_matches_dense() {
        for hg in [chain(), Hypergraph::new(7, vec![vec![0, 1, 2], vec![2, 3, 4], vec![4, 5, 6], vec![0, 6, 3, 1]], None, None).unwrap()] {
            let exp = BipartiteExpansion::new(&hg);
            let a = second_eigenpair(&exp);
            let b = second_eigenpair_dense(&exp);
            assert!(!a.degenerate && !b.degenerate);
            assert_abs_diff_eq!(a.value, b.value, epsilon = 1e-10);
            assert!(sign_aligned_distance(&a.vector, &b.vector) < 1e-8);
            assert_abs_diff_eq!(a.gap, b.gap, epsilon = 1e-10);
        }
    }

    #[test]
    fn eigenvector_satisfies_equation() {
        let exp = BipartiteExpansion::new(&chain());
        let p = second_eigenpair(&exp);
        let l = exp.laplacian_dense();
        let residual = l.dot(&p.vector) - &p.vector * p.value;
        assert!(residual.iter().all(|r| r.abs() < 1e-10));
        assert_abs_diff_eq!(p.vector.dot(&p.vector), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn disconnected_is_degenerate() {
        let hg = Hypergraph::new(4, vec![vec![0, 1], vec![2, 3]], None, None).unwrap();
        let exp = BipartiteExpansion::new(&hg);
        assert!(second_eigenpair(&exp).degenerate);
        assert!(second_eigenpair_dense(&exp).degenerate);
        assert!(eigvec_perturbation(&exp, &exp).error.is_none());
    }

    #[test]
    fn identical_operators_have_zero_error() {
        let exp = BipartiteExpansion::new(&chain());
        assert_eq!(eigvec_perturbation(&exp, &exp).error, Some(0.0));
    }
}
