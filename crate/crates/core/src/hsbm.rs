//! Two-community hypergraph stochastic block model and the statistics used to
//! check how trained embeddings track community structure.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::bipartite::BipartiteExpansion;
use crate::error::{Error, Result};
use crate::evaluation::{classify, ClassifyConfig};
use crate::hypergraph::Hypergraph;
use crate::model::{membership_attention, prompt_weights, TrainingContext};
use crate::spectral::{eigvec_perturbation, second_eigenpair, Perturbation};
use crate::trainer::TrainedModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HsbmConfig {
    pub num_nodes: usize,
    /// Acceptance probability of a candidate whose members share a community.
    pub alpha: f64,
    /// Acceptance probability of a mixed candidate.
    pub beta: f64,
    pub edge_size: usize,
    pub num_edges: usize,
    pub feature_dim: usize,
    /// Community means are `±feature_mean · 1`.
    pub feature_mean: f64,
    pub feature_noise: f64,
    pub seed: u64,
    /// Candidates drawn before giving up.
    pub max_candidates: usize,
}

impl Default for HsbmConfig {
    fn default() -> Self {
        Self {
            num_nodes: 100,
            alpha: 0.8,
            beta: 0.2,
            edge_size: 3,
            num_edges: 100,
            feature_dim: 4,
            feature_mean: 1.0,
            feature_noise: 1.0,
            seed: 0,
            max_candidates: 10_000_000,
        }
    }
}

impl HsbmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_nodes < 2 || self.num_nodes % 2 != 0 {
            return Err(Error::Config("num_nodes must be even and at least 2".into()));
        }
        if self.edge_size == 0 || self.edge_size > self.num_nodes {
            return Err(Error::Config("edge_size must lie in 1..=num_nodes".into()));
        }
        for (name, p) in [("alpha", self.alpha), ("beta", self.beta)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} must lie in [0, 1]")));
            }
        }
        if !(self.feature_noise >= 0.0) || !self.feature_mean.is_finite() {
            return Err(Error::Config("feature_noise must be non-negative and feature_mean finite".into()));
        }
        Ok(())
    }
}

/// Balanced communities, acceptance-sampled hyperedges and community-mean
/// features with Gaussian noise. Labels are the community ids.
pub fn generate_hsbm(config: &HsbmConfig) -> Result<Hypergraph> {
    config.validate()?;
    let n = config.num_nodes;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut labels: Vec<usize> = (0..n).map(|i| usize::from(i >= n / 2)).collect();
    labels.shuffle(&mut rng);

    let mut hyperedges = Vec::with_capacity(config.num_edges);
    let mut attempts = 0;
    while hyperedges.len() < config.num_edges {
        if attempts >= config.max_candidates {
            return Err(Error::AcceptanceStarvation {
                accepted: hyperedges.len(),
                wanted: config.num_edges,
                attempts,
            });
        }
        attempts += 1;
        let members = sample(&mut rng, n, config.edge_size).into_vec();
        let first = labels[members[0]];
        let pure = members.iter().all(|&v| labels[v] == first);
        let p = if pure { config.alpha } else { config.beta };
        if rng.random::<f64>() < p {
            hyperedges.push(members);
        }
    }

    let noise = Normal::new(0.0, config.feature_noise).map_err(|e| Error::Config(e.to_string()))?;
    let features = Array2::from_shape_fn((n, config.feature_dim), |(i, _)| {
        let sign = if labels[i] == 0 { 1.0 } else { -1.0 };
        sign * config.feature_mean + noise.sample(&mut rng)
    });
    Hypergraph::new(n, hyperedges, Some(features), Some(labels))
}

/// Probability that a uniform `k`-subset of a balanced `n`-node population is
/// community-pure.
pub fn pure_candidate_probability(n: usize, k: usize) -> f64 {
    let half = n / 2;
    if k > half {
        return 0.0;
    }
    let mut p = 1.0;
    for i in 0..k {
        p *= (half - i) as f64 / (n - i) as f64;
    }
    2.0 * p
}

/// Expected fraction of accepted hyperedges that are pure.
pub fn expected_pure_fraction(config: &HsbmConfig) -> f64 {
    let q = pure_candidate_probability(config.num_nodes, config.edge_size);
    let pure = config.alpha * q;
    let mixed = config.beta * (1.0 - q);
    if pure + mixed == 0.0 {
        0.0
    } else {
        pure / (pure + mixed)
    }
}

fn binary_labels(labels: &[usize]) -> Result<()> {
    let classes: std::collections::BTreeSet<usize> = labels.iter().copied().collect();
    if classes.len() != 2 || classes.iter().any(|&c| c > 1) {
        return Err(Error::NonBinaryLabels(classes.len()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Separation {
    /// `√N · ‖mean(Z_C₁) − mean(Z_C₂)‖₂`.
    pub separation: f64,
    /// `‖uᵀZ‖₂ / ‖(I − uuᵀ)Z‖₂`; `None` without a usable direction `u` or
    /// when the orthogonal part vanishes.
    pub snr: Option<f64>,
}

fn spectral_norm(m: &Array2<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let d = DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[[i, j]]);
    d.singular_values().iter().copied().fold(0.0, f64::max)
}

/// Community separation of node embeddings. `direction` is the unit node
/// part of the Laplacian's second eigenvector.
pub fn class_separation(
    z_nodes: ArrayView2<'_, f64>,
    labels: &[usize],
    direction: Option<&Array1<f64>>,
) -> Result<Separation> {
    if z_nodes.nrows() != labels.len() {
        return Err(Error::LengthMismatch {
            what: "labels",
            expected: z_nodes.nrows(),
            actual: labels.len(),
        });
    }
    binary_labels(labels)?;
    let n = labels.len();
    let mut means = Array2::<f64>::zeros((2, z_nodes.ncols()));
    let mut counts = [0usize; 2];
    for (i, &c) in labels.iter().enumerate() {
        means.row_mut(c).scaled_add(1.0, &z_nodes.row(i));
        counts[c] += 1;
    }
    for c in 0..2 {
        means.row_mut(c).mapv_inplace(|v| v / counts[c] as f64);
    }
    let diff = &means.row(0) - &means.row(1);
    let separation = (n as f64).sqrt() * diff.dot(&diff).sqrt();

    let snr = direction.and_then(|u| {
        if u.len() != n {
            return None;
        }
        let proj = u.dot(&z_nodes);
        let along = proj.dot(&proj).sqrt();
        let mut rest = z_nodes.to_owned();
        for (i, mut row) in rest.axis_iter_mut(Axis(0)).enumerate() {
            row.scaled_add(-u[i], &proj);
        }
        let ortho = spectral_norm(&rest);
        (ortho > 1e-12).then(|| along / ortho)
    });
    Ok(Separation { separation, snr })
}

/// Membership weights `|φ_e| · α_{i,e} · |e|` from a trained model, aligned
/// with [`Hypergraph::memberships`]. With uniform attention this reduces to
/// scaling every hyperedge by `|φ_e|`.
pub fn learned_membership_weights(trained: &TrainedModel, ctx: &TrainingContext) -> Vec<f64> {
    let phi = prompt_weights(&trained.model, ctx);
    let attention = membership_attention(&trained.model, ctx);
    ctx.memberships
        .iter()
        .zip(attention)
        .map(|(&(_, e), a)| phi[e].abs() * a * ctx.augmentation.hyperedges[e].len() as f64)
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct EigvecReport {
    pub perturbation: Perturbation,
    pub phi_min: f64,
    pub alpha_min: f64,
    /// Inverse participation ratio `Σ u⁴` of both eigenvectors; values near
    /// `1/(N+M)` mean spread out, values near 1 mean localized.
    pub localization_reference: f64,
    pub localization_weighted: f64,
}

fn participation(v: &Array1<f64>) -> f64 {
    v.iter().map(|x| x.powi(4)).sum()
}

/// Distance between the second eigenvectors of the plain and the learned-
/// weight expansions of `hg`.
pub fn learned_eigvec_perturbation(hg: &Hypergraph, trained: &TrainedModel) -> Result<EigvecReport> {
    let ctx = TrainingContext::new(hg)?;
    let weights = learned_membership_weights(trained, &ctx);
    let weighted = BipartiteExpansion::weighted(hg, &weights)?;
    let phi = prompt_weights(&trained.model, &ctx);
    let attention = membership_attention(&trained.model, &ctx);
    Ok(EigvecReport {
        perturbation: eigvec_perturbation(&ctx.expansion, &weighted),
        phi_min: phi.iter().copied().fold(f64::INFINITY, f64::min),
        alpha_min: attention.into_iter().fold(f64::INFINITY, f64::min),
        localization_reference: participation(&second_eigenpair(&ctx.expansion).vector),
        localization_weighted: participation(&second_eigenpair(&weighted).vector),
    })
}

/// Linear-probe accuracies standing in for mutual information between labels
/// and embeddings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ViewInformation {
    pub acc_fused: f64,
    pub acc_view1: f64,
    pub acc_view2: f64,
}

pub fn view_information_check(
    hg: &Hypergraph,
    trained: &TrainedModel,
    classify_config: &ClassifyConfig,
) -> Result<ViewInformation> {
    let labels = hg.require_labels()?;
    binary_labels(labels)?;
    let emb = &trained.final_embeddings;
    let n = hg.num_nodes();
    let nodes = |z: &Array2<f64>| z.slice(ndarray::s![..n, ..]).to_owned();
    let acc = |z: Array2<f64>| classify(z.view(), labels, classify_config).map(|r| r.accuracy_mean);
    Ok(ViewInformation {
        acc_fused: acc(nodes(&emb.z))?,
        acc_view1: acc(nodes(&emb.z1))?,
        acc_view2: acc(nodes(&emb.z2))?,
    })
}

/// Unit node part of the second eigenvector of `hg`'s expansion, unless the
/// eigenvalue is degenerate.
pub fn community_direction(hg: &Hypergraph) -> Option<Array1<f64>> {
    let pair = second_eigenpair(&BipartiteExpansion::new(hg));
    if pair.degenerate {
        None
    } else {
        pair.node_part(hg.num_nodes())
    }
}

fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut out = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation with average ranks for ties; `None` when either
/// side is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len(), "samples must pair up");
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    (vx > 0.0 && vy > 0.0).then(|| cov / (vx * vy).sqrt())
}

pub fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[mid] } else { 0.5 * (v[mid - 1] + v[mid]) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heterophily::label_entropy;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn balanced_and_sized() {
        let hg = generate_hsbm(&HsbmConfig::default()).unwrap();
        let labels = hg.labels().unwrap();
        assert_eq!(labels.iter().filter(|&&c| c == 0).count(), 50);
        assert_eq!(hg.num_hyperedges(), 100);
        assert!(hg.hyperedges().iter().all(|e| e.len() == 3));
    }

    #[test]
    fn pure_regime_has_zero_entropy() {
        let cfg = HsbmConfig {
            alpha: 1.0,
            beta: 0.0,
            ..HsbmConfig::default()
        };
        assert_eq!(label_entropy(&generate_hsbm(&cfg).unwrap()).unwrap(), 0.0);
    }

    #[test]
    fn starvation_is_reported() {
        let cfg = HsbmConfig {
            alpha: 0.0,
            beta: 0.0,
            max_candidates: 1000,
            ..HsbmConfig::default()
        };
        assert!(matches!(
            generate_hsbm(&cfg),
            Err(Error::AcceptanceStarvation { accepted: 0, .. })
        ));
    }

    #[test]
    fn pure_probability_small_case() {
        // n = 4, k = 2: pure pairs 2 of 6.
        assert_abs_diff_eq!(pure_candidate_probability(4, 2), 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn separation_examples() {
        let labels = [0, 0, 1, 1];
        let z = array![[1.0, 0.0], [1.0, 0.0], [-1.0, 0.0], [-1.0, 0.0]];
        let s = class_separation(z.view(), &labels, None).unwrap();
        assert_abs_diff_eq!(s.separation, 4.0, epsilon = 1e-12);
        let flat = Array2::from_elem((4, 2), 0.3);
        assert_eq!(class_separation(flat.view(), &labels, None).unwrap().separation, 0.0);
        assert!(class_separation(z.view(), &[0, 1, 2, 0], None).is_err());
    }

    #[test]
    fn snr_of_aligned_embedding() {
        let labels = [0, 0, 1, 1];
        let u = array![0.5, 0.5, -0.5, -0.5];
        let z = array![[1.0, 0.1], [1.0, -0.1], [-1.0, 0.1], [-1.0, -0.1]];
        let s = class_separation(z.view(), &labels, Some(&u)).unwrap();
        // Along u: ‖uᵀZ‖ = 2; orthogonal part has spectral norm 0.2.
        assert_abs_diff_eq!(s.snr.unwrap(), 10.0, epsilon = 1e-9);
    }

    #[test]
    fn spearman_values() {
        assert_abs_diff_eq!(spearman(&[1., 2., 3., 4.], &[10., 20., 30., 40.]).unwrap(), 1.0);
        assert_abs_diff_eq!(spearman(&[1., 2., 3., 4.], &[4., 3., 2., 1.]).unwrap(), -1.0);
        assert_eq!(spearman(&[1., 2.], &[3., 3.]), None);
        assert_eq!(median(&[3.0, 1.0, 2.0, 10.0]), Some(2.5));
    }
}
