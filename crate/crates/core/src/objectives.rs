//! Training objectives: symmetric InfoNCE between views, node/hyperedge
//! decoupling, and the spectral-power penalty.
//!
//! Every loss comes in a value form and a value-plus-gradient form. Cosine
//! similarities add [`COSINE_EPS`](crate::ops::COSINE_EPS) to each norm.

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ops::{normalize_rows, normalize_rows_backward};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub tau: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub contrast: f64,
    pub decouple: f64,
    pub cov: f64,
    pub total: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub tau: f64,
}

impl LossReport {
    pub fn is_finite(&self) -> bool {
        self.contrast.is_finite() && self.decouple.is_finite() && self.cov.is_finite() && self.total.is_finite()
    }
}

fn check_pair(z1: ArrayView2<'_, f64>, z2: ArrayView2<'_, f64>, tau: f64) -> Result<()> {
    if !(tau > 0.0) {
        return Err(Error::Config(format!("tau must be positive, got {tau}")));
    }
    if z1.dim() != z2.dim() {
        return Err(Error::Dimension(format!(
            "view embeddings differ in shape: {:?} vs {:?}",
            z1.dim(),
            z2.dim()
        )));
    }
    Ok(())
}

/// Row-wise softmax and log-sum-exp of a score matrix.
fn row_softmax(scores: &Array2<f64>) -> (Array2<f64>, Array1<f64>) {
    let mut probs = scores.clone();
    let mut lse = Array1::zeros(scores.nrows());
    for (i, mut row) in probs.axis_iter_mut(Axis(0)).enumerate() {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|v| (v - max).exp());
        let total = row.sum();
        row /= total;
        lse[i] = max + total.ln();
    }
    (probs, lse)
}

/// Symmetric InfoNCE over all `N+M` entities; negatives for entity `i` are
/// every second-view entity, the positive included in the denominator.
pub fn contrastive_loss(z1: ArrayView2<'_, f64>, z2: ArrayView2<'_, f64>, tau: f64) -> Result<f64> {
    Ok(contrastive_loss_with_grad(z1, z2, tau)?.0)
}

pub fn contrastive_loss_with_grad(
    z1: ArrayView2<'_, f64>,
    z2: ArrayView2<'_, f64>,
    tau: f64,
) -> Result<(f64, Array2<f64>, Array2<f64>)> {
    check_pair(z1, z2, tau)?;
    let n = z1.nrows();
    if n == 0 {
        return Ok((0.0, Array2::zeros(z1.raw_dim()), Array2::zeros(z2.raw_dim())));
    }
    let (n1, norms1) = normalize_rows(z1);
    let (n2, norms2) = normalize_rows(z2);
    let scores = n1.dot(&n2.t()) / tau;

    // Direction 1 → 2 uses rows of `scores`, direction 2 → 1 uses columns.
    let (p_rows, lse_rows) = row_softmax(&scores);
    let scores_t = scores.t().to_owned();
    let (p_cols_t, lse_cols) = row_softmax(&scores_t);

    let diag_sum: f64 = scores.diag().sum();
    let loss = (lse_rows.sum() + lse_cols.sum() - 2.0 * diag_sum) / (2.0 * n as f64);

    let mut grad_scores = p_rows + p_cols_t.t();
    for i in 0..n {
        grad_scores[[i, i]] -= 2.0;
    }
    grad_scores /= 2.0 * n as f64 * tau;
    let grad_n1 = grad_scores.dot(&n2);
    let grad_n2 = grad_scores.t().dot(&n1);
    let g1 = normalize_rows_backward(z1, &norms1, grad_n1.view());
    let g2 = normalize_rows_backward(z2, &norms2, grad_n2.view());
    Ok((loss, g1, g2))
}

/// `Σ_(v,e) cos²(z_v, z_e)` over memberships; the hyperedge row of `e` is
/// `num_nodes + e`.
pub fn decoupling_loss(z: ArrayView2<'_, f64>, num_nodes: usize, memberships: &[(usize, usize)]) -> f64 {
    decoupling_loss_with_grad(z, num_nodes, memberships).0
}

pub fn decoupling_loss_with_grad(
    z: ArrayView2<'_, f64>,
    num_nodes: usize,
    memberships: &[(usize, usize)],
) -> (f64, Array2<f64>) {
    let (unit, norms) = normalize_rows(z);
    let mut grad_unit = Array2::zeros(z.raw_dim());
    let mut loss = 0.0;
    for &(v, e) in memberships {
        let row = num_nodes + e;
        let c = unit.row(v).dot(&unit.row(row));
        loss += c * c;
        grad_unit.row_mut(v).scaled_add(2.0 * c, &unit.row(row));
        grad_unit.row_mut(row).scaled_add(2.0 * c, &unit.row(v));
    }
    (loss, normalize_rows_backward(z, &norms, grad_unit.view()))
}

/// Total power of the unnormalized DFT of each row, i.e. along the feature
/// dimension.
pub fn spectral_power(z: ArrayView2<'_, f64>) -> f64 {
    let d = z.ncols();
    if d == 0 || z.nrows() == 0 {
        return 0.0;
    }
    let fft = FftPlanner::new().plan_fft_forward(d);
    let mut buffer = vec![Complex::new(0.0, 0.0); d];
    let mut total = 0.0;
    for row in z.rows() {
        for (b, &v) in buffer.iter_mut().zip(row.iter()) {
            *b = Complex::new(v, 0.0);
        }
        fft.process(&mut buffer);
        total += buffer.iter().map(|c| c.norm_sqr()).sum::<f64>();
    }
    total
}

/// `‖DFT(Z_v)‖²_F + ‖DFT(Z_e)‖²_F`.
pub fn covariance_loss(z_nodes: ArrayView2<'_, f64>, z_hyperedges: ArrayView2<'_, f64>) -> f64 {
    spectral_power(z_nodes) + spectral_power(z_hyperedges)
}

/// Gradient of the spectral power. By Parseval the unnormalized DFT has
/// `‖DFT(z)‖² = D‖z‖²`, so the gradient is `2 D z`.
pub fn covariance_grad(z: ArrayView2<'_, f64>) -> Array2<f64> {
    z.to_owned() * (2.0 * z.ncols() as f64)
}

/// All three terms; decoupling and the spectral penalty act on the fused
/// embedding `Z = Z₁ + λ₃Z₂`.
pub fn total_loss(
    z1: ArrayView2<'_, f64>,
    z2: ArrayView2<'_, f64>,
    num_nodes: usize,
    memberships: &[(usize, usize)],
    weights: &LossWeights,
) -> Result<LossReport> {
    check_pair(z1, z2, weights.tau)?;
    let contrast = contrastive_loss(z1, z2, weights.tau)?;
    let fused = fuse(z1, z2, weights.lambda3);
    let decouple = decoupling_loss(fused.view(), num_nodes, memberships);
    let cov = covariance_loss(fused.slice(s![..num_nodes, ..]), fused.slice(s![num_nodes.., ..]));
    Ok(report(contrast, decouple, cov, weights))
}

/// Loss report plus gradients with respect to `Z₁` and `Z₂`.
pub fn total_loss_with_grad(
    z1: ArrayView2<'_, f64>,
    z2: ArrayView2<'_, f64>,
    num_nodes: usize,
    memberships: &[(usize, usize)],
    weights: &LossWeights,
) -> Result<(LossReport, Array2<f64>, Array2<f64>)> {
    let (contrast, mut g1, mut g2) = contrastive_loss_with_grad(z1, z2, weights.tau)?;
    let fused = fuse(z1, z2, weights.lambda3);
    let (decouple, g_dec) = decoupling_loss_with_grad(fused.view(), num_nodes, memberships);
    let cov = covariance_loss(fused.slice(s![..num_nodes, ..]), fused.slice(s![num_nodes.., ..]));

    let mut g_fused = g_dec * weights.lambda1;
    g_fused.scaled_add(weights.lambda2, &covariance_grad(fused.view()));
    g1 += &g_fused;
    g2.scaled_add(weights.lambda3, &g_fused);
    Ok((report(contrast, decouple, cov, weights), g1, g2))
}

fn fuse(z1: ArrayView2<'_, f64>, z2: ArrayView2<'_, f64>, lambda3: f64) -> Array2<f64> {
    let mut fused = z1.to_owned();
    fused.scaled_add(lambda3, &z2);
    fused
}

fn report(contrast: f64, decouple: f64, cov: f64, w: &LossWeights) -> LossReport {
    LossReport {
        contrast,
        decouple,
        cov,
        total: contrast + w.lambda1 * decouple + w.lambda2 * cov,
        lambda1: w.lambda1,
        lambda2: w.lambda2,
        tau: w.tau,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn single_entity_contrast_is_zero() {
        let z = array![[1.0, 2.0]];
        assert_abs_diff_eq!(contrastive_loss(z.view(), z.view(), 0.5).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn two_entity_closed_form() {
        // s(z1_i, z2_i) = 1 and cross-similarities 0.
        let z = array![[1.0, 0.0], [0.0, 1.0]];
        let expected = -(1f64.exp() / (1f64.exp() + 1.0)).ln();
        assert_abs_diff_eq!(expected, 0.313_261_687_518_222_8, epsilon = 1e-15);
        // The 1e-8 norm guard shifts cosines by O(1e-8).
        assert_abs_diff_eq!(contrastive_loss(z.view(), z.view(), 1.0).unwrap(), expected, epsilon = 1e-7);
    }

    #[test]
    fn orthogonal_rows_small_tau_near_zero() {
        let z = Array2::<f64>::eye(4);
        let loss = contrastive_loss(z.view(), z.view(), 0.05).unwrap();
        // 3 e^{-20} relative mass remains in each denominator.
        let brute = (1.0 + 3.0 * (-20f64).exp()).ln();
        assert_abs_diff_eq!(loss, brute, epsilon = 1e-12);
        assert!(loss < 1e-8);
    }

    #[test]
    fn contrast_rejects_bad_input() {
        let z = array![[1.0, 0.0]];
        assert!(contrastive_loss(z.view(), z.view(), 0.0).is_err());
        let w = array![[1.0, 0.0, 0.0]];
        assert!(contrastive_loss(z.view(), w.view(), 1.0).is_err());
    }

    #[test]
    fn decoupling_examples() {
        let z = array![[1.0, 0.0], [0.0, 3.0]];
        assert_abs_diff_eq!(decoupling_loss(z.view(), 1, &[(0, 0)]), 0.0, epsilon = 1e-15);
        let half = array![[1.0, 0.0], [0.5, 0.75f64.sqrt()]];
        assert_abs_diff_eq!(decoupling_loss(half.view(), 1, &[(0, 0)]), 0.25, epsilon = 1e-7);
        let same = array![[0.3, -0.4], [0.3, -0.4]];
        assert_abs_diff_eq!(decoupling_loss(same.view(), 1, &[(0, 0)]), 1.0, epsilon = 1e-7);
    }

    #[test]
    fn spectral_power_examples() {
        assert_abs_diff_eq!(spectral_power(array![[3.0]].view()), 9.0, epsilon = 1e-15);
        assert_abs_diff_eq!(spectral_power(array![[1.0, -1.0]].view()), 4.0, epsilon = 1e-12);
        let empty = Array2::<f64>::zeros((0, 3));
        assert_eq!(spectral_power(empty.view()), 0.0);
    }

    #[test]
    fn total_combines_terms() {
        let z1 = array![[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]];
        let z2 = array![[0.9, 0.1], [0.2, 1.0], [1.0, 0.7]];
        let m = [(0, 0), (1, 0)];
        let w = LossWeights {
            tau: 0.5,
            lambda1: 0.0,
            lambda2: 0.0,
            lambda3: 1.0,
        };
        let r = total_loss(z1.view(), z2.view(), 2, &m, &w).unwrap();
        assert_eq!(r.total, r.contrast);
        let w = LossWeights {
            lambda1: 0.3,
            lambda2: 0.01,
            ..w
        };
        let r = total_loss(z1.view(), z2.view(), 2, &m, &w).unwrap();
        assert_eq!(r.total, r.contrast + 0.3 * r.decouple + 0.01 * r.cov);
    }

    #[test]
    fn orthogonal_blocks_remove_decoupling() {
        let z1 = array![[1.0, 0.0], [0.0, 1.0]];
        let w = LossWeights {
            tau: 1.0,
            lambda1: 1.0,
            lambda2: 0.0,
            lambda3: 0.0,
        };
        let r = total_loss(z1.view(), z1.view(), 1, &[(0, 0)], &w).unwrap();
        assert_abs_diff_eq!(r.total, r.contrast, epsilon = 1e-15);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let z1 = array![[0.4, -1.0, 0.3], [1.1, 0.2, -0.5], [-0.3, 0.9, 0.8], [0.5, 0.5, -1.2]];
        let z2 = array![[0.1, -0.7, 0.6], [0.9, 0.4, -0.2], [-0.6, 1.0, 0.3], [0.2, 0.8, -0.9]];
        let m = [(0, 0), (1, 0), (1, 1)];
        let w = LossWeights {
            tau: 0.4,
            lambda1: 0.7,
            lambda2: 0.05,
            lambda3: 0.6,
        };
        let (_, g1, g2) = total_loss_with_grad(z1.view(), z2.view(), 2, &m, &w).unwrap();
        let f = |a: &Array2<f64>, b: &Array2<f64>| total_loss(a.view(), b.view(), 2, &m, &w).unwrap().total;
        let h = 1e-6;
        for i in 0..4 {
            for j in 0..3 {
                let (mut p, mut q) = (z1.clone(), z1.clone());
                p[[i, j]] += h;
                q[[i, j]] -= h;
                assert_abs_diff_eq!(g1[[i, j]], (f(&p, &z2) - f(&q, &z2)) / (2.0 * h), epsilon = 1e-7);
                let (mut p, mut q) = (z2.clone(), z2.clone());
                p[[i, j]] += h;
                q[[i, j]] -= h;
                assert_abs_diff_eq!(g2[[i, j]], (f(&z1, &p) - f(&z1, &q)) / (2.0 * h), epsilon = 1e-7);
            }
        }
    }
}
