//! Block-model experiments: each runner generates instances, trains models
//! and summarizes one directional check.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::evaluation::{raw_similarity_stats, similarity_stats, ClassifyConfig, SimilarityStats};
use crate::hsbm::{
    class_separation, community_direction, generate_hsbm, learned_eigvec_perturbation, median, spearman,
    view_information_check, EigvecReport, HsbmConfig, ViewInformation,
};
use crate::trainer::{train, TrainConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LabConfig {
    /// Template for every generated instance; size, α, β and seed are
    /// overridden per experiment.
    pub hsbm: HsbmConfig,
    pub train: TrainConfig,
    pub classify: ClassifyConfig,
    pub seeds: Vec<u64>,
    pub separation_grid: Vec<(f64, f64)>,
    pub separation_nodes: usize,
    pub scaling_sizes: Vec<usize>,
    pub scaling_alpha_beta: (f64, f64),
    /// Size of the instance the augmentation is trained on before its
    /// weights are applied to every size in `scaling_sizes`.
    pub scaling_train_nodes: usize,
    pub information_nodes: usize,
    pub information_alpha_beta: (f64, f64),
    pub similarity_nodes: usize,
    pub similarity_alpha_beta: (f64, f64),
}

impl Default for LabConfig {
    fn default() -> Self {
        Self {
            hsbm: HsbmConfig::default(),
            train: TrainConfig::default(),
            classify: ClassifyConfig::default(),
            seeds: (0..5).collect(),
            separation_grid: vec![(0.6, 0.4), (0.7, 0.3), (0.8, 0.2), (0.9, 0.1)],
            separation_nodes: 200,
            scaling_sizes: vec![100, 200, 400, 800],
            scaling_alpha_beta: (0.8, 0.2),
            scaling_train_nodes: 100,
            information_nodes: 400,
            information_alpha_beta: (0.8, 0.2),
            similarity_nodes: 200,
            similarity_alpha_beta: (0.2, 0.8),
        }
    }
}

impl LabConfig {
    /// Instance with `num_edges = num_nodes`.
    pub fn sparse_instance(&self, num_nodes: usize, (alpha, beta): (f64, f64), seed: u64) -> HsbmConfig {
        HsbmConfig {
            num_nodes,
            alpha,
            beta,
            num_edges: num_nodes,
            seed,
            ..self.hsbm.clone()
        }
    }

    /// Instance with `num_edges = ⌈N ln N⌉`, which keeps the expansion
    /// connected as `N` grows.
    pub fn dense_instance(&self, num_nodes: usize, alpha_beta: (f64, f64), seed: u64) -> HsbmConfig {
        let n = num_nodes as f64;
        HsbmConfig {
            num_edges: (n * n.ln()).ceil() as usize,
            ..self.sparse_instance(num_nodes, alpha_beta, seed)
        }
    }

    fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            seed,
            ..self.train.clone()
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SeparationPoint {
    pub alpha: f64,
    pub beta: f64,
    pub ratio: f64,
    pub seed: u64,
    pub separation: f64,
    pub snr: Option<f64>,
    pub initial_separation: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeparationSummary {
    pub points: Vec<SeparationPoint>,
    /// Spearman ρ between `(α−β)/β` and separation, one per seed.
    pub rho_per_seed: Vec<Option<f64>>,
    /// Median over seeds; an undefined ρ counts as 0.
    pub median_rho: Option<f64>,
}

pub fn run_separation_grid(lab: &LabConfig) -> Result<SeparationSummary> {
    let mut points = Vec::new();
    let mut rho_per_seed = Vec::new();
    for &seed in &lab.seeds {
        let mut ratios = Vec::new();
        let mut seps = Vec::new();
        for &(alpha, beta) in &lab.separation_grid {
            let hg = generate_hsbm(&lab.sparse_instance(lab.separation_nodes, (alpha, beta), seed))?;
            let trained = train(&hg, &lab.train_config(seed))?;
            let labels = hg.require_labels()?;
            let dir = community_direction(&hg);
            let s = class_separation(trained.final_embeddings.nodes(), labels, dir.as_ref())?;
            let s0 = class_separation(trained.initial_embeddings.nodes(), labels, None)?;
            let ratio = (alpha - beta) / beta;
            ratios.push(ratio);
            seps.push(s.separation);
            points.push(SeparationPoint {
                alpha,
                beta,
                ratio,
                seed,
                separation: s.separation,
                snr: s.snr,
                initial_separation: s0.separation,
            });
        }
        rho_per_seed.push(spearman(&ratios, &seps));
    }
    let rhos: Vec<f64> = rho_per_seed.iter().map(|r| r.unwrap_or(0.0)).collect();
    Ok(SeparationSummary {
        points,
        median_rho: median(&rhos),
        rho_per_seed,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingPoint {
    pub num_nodes: usize,
    pub seed: u64,
    pub report: EigvecReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingSummary {
    pub points: Vec<ScalingPoint>,
    /// `(N, median error over seeds)`; flagged (degenerate) runs are left out.
    pub medians: Vec<(usize, Option<f64>)>,
    pub non_increasing: bool,
    pub flagged: usize,
}

/// Per seed, trains on one instance of `scaling_train_nodes` nodes and
/// applies the learned prompt and attention weights to fresh instances of
/// every size.
pub fn run_eigvec_scaling(lab: &LabConfig) -> Result<ScalingSummary> {
    let mut points = Vec::new();
    for &seed in &lab.seeds {
        let base = generate_hsbm(&lab.dense_instance(lab.scaling_train_nodes, lab.scaling_alpha_beta, seed))?;
        let trained = train(&base, &lab.train_config(seed))?;
        for &n in &lab.scaling_sizes {
            let instance_seed = seed.wrapping_add(1_000_000).wrapping_add(n as u64);
            let hg = generate_hsbm(&lab.dense_instance(n, lab.scaling_alpha_beta, instance_seed))?;
            points.push(ScalingPoint {
                num_nodes: n,
                seed,
                report: learned_eigvec_perturbation(&hg, &trained)?,
            });
        }
    }
    let medians: Vec<(usize, Option<f64>)> = lab
        .scaling_sizes
        .iter()
        .map(|&n| {
            let errs: Vec<f64> = points
                .iter()
                .filter(|p| p.num_nodes == n)
                .filter_map(|p| p.report.perturbation.error)
                .collect();
            (n, median(&errs))
        })
        .collect();
    let non_increasing = medians.iter().all(|(_, m)| m.is_some())
        && medians.windows(2).all(|w| w[1].1 <= w[0].1);
    let flagged = points.iter().filter(|p| p.report.perturbation.error.is_none()).count();
    Ok(ScalingSummary {
        points,
        medians,
        non_increasing,
        flagged,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct InformationSummary {
    /// Linear-probe accuracies; a proxy for label information, not an MI
    /// estimate.
    pub per_seed: Vec<ViewInformation>,
    pub mean_fused: f64,
    pub mean_best_single: f64,
}

pub fn run_view_information(lab: &LabConfig) -> Result<InformationSummary> {
    let mut per_seed = Vec::new();
    for &seed in &lab.seeds {
        let hg = generate_hsbm(&lab.sparse_instance(lab.information_nodes, lab.information_alpha_beta, seed))?;
        let trained = train(&hg, &lab.train_config(seed))?;
        let classify = ClassifyConfig {
            seed,
            ..lab.classify.clone()
        };
        per_seed.push(view_information_check(&hg, &trained, &classify)?);
    }
    let k = per_seed.len().max(1) as f64;
    Ok(InformationSummary {
        mean_fused: per_seed.iter().map(|v| v.acc_fused).sum::<f64>() / k,
        mean_best_single: per_seed.iter().map(|v| v.acc_view1.max(v.acc_view2)).sum::<f64>() / k,
        per_seed,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SimilarityRun {
    pub seed: u64,
    pub raw: SimilarityStats,
    pub initial: SimilarityStats,
    pub trained: SimilarityStats,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimilarityShift {
    pub runs: Vec<SimilarityRun>,
    pub mean_initial: SimilarityStats,
    pub mean_trained: SimilarityStats,
    pub mean_raw: SimilarityStats,
}

fn mean_stats(xs: &[SimilarityStats]) -> SimilarityStats {
    let k = xs.len().max(1) as f64;
    SimilarityStats {
        mean: xs.iter().map(|s| s.mean).sum::<f64>() / k,
        variance: xs.iter().map(|s| s.variance).sum::<f64>() / k,
        entropy: xs.iter().map(|s| s.entropy).sum::<f64>() / k,
        entropy_nodes: xs.iter().map(|s| s.entropy_nodes).sum::<usize>() / xs.len().max(1),
    }
}

/// Membership similarity statistics on raw features, on initial-parameter
/// embeddings and on trained embeddings.
pub fn run_similarity_shift(lab: &LabConfig) -> Result<SimilarityShift> {
    let mut runs = Vec::new();
    for &seed in &lab.seeds {
        let hg = generate_hsbm(&lab.sparse_instance(lab.similarity_nodes, lab.similarity_alpha_beta, seed))?;
        let trained = train(&hg, &lab.train_config(seed))?;
        let memberships = hg.memberships();
        let n = hg.num_nodes();
        runs.push(SimilarityRun {
            seed,
            raw: raw_similarity_stats(&hg)?,
            initial: similarity_stats(trained.initial_embeddings.z.view(), n, &memberships)?,
            trained: similarity_stats(trained.final_embeddings.z.view(), n, &memberships)?,
        });
    }
    let pick = |f: fn(&SimilarityRun) -> SimilarityStats| mean_stats(&runs.iter().map(f).collect::<Vec<_>>());
    Ok(SimilarityShift {
        mean_initial: pick(|r| r.initial),
        mean_trained: pick(|r| r.trained),
        mean_raw: pick(|r| r.raw),
        runs,
    })
}
