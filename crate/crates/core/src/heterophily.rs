//! Hypergraph heterophily measures: label entropy and heterophilic pairwise
//! ratio.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::Result;
use crate::hypergraph::Hypergraph;

/// Normalizer for the per-hyperedge pair count.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PairNormalizer {
    /// `|e|(|e|−1)`: the ordered pair count. Caps the ratio at 0.5.
    #[default]
    Ordered,
    /// `|e|(|e|−1)/2`: the unordered pair count.
    Unordered,
}

#[derive(Debug, Clone, Serialize)]
pub struct HeterophilyReport {
    pub label_entropy: f64,
    pub pairwise_ratio: f64,
    pub per_hyperedge_entropy: Vec<f64>,
    /// Hyperedges with a single member, left out of the pairwise ratio.
    pub skipped_hyperedges: usize,
}

/// Normalized label entropy `H(e) / log|C_e|` of one hyperedge.
///
/// Single-class hyperedges (`|C_e| = 1`) are perfectly homophilic and score 0.
pub fn hyperedge_entropy(members: &[usize], labels: &[usize]) -> f64 {
    let mut counts: HashMap<usize, usize> = HashMap::new();
    for &v in members {
        *counts.entry(labels[v]).or_default() += 1;
    }
    if counts.len() < 2 {
        return 0.0;
    }
    let size = members.len() as f64;
    let mut classes: Vec<usize> = counts.keys().copied().collect();
    classes.sort_unstable();
    let entropy: f64 = classes
        .iter()
        .map(|c| {
            let p = counts[c] as f64 / size;
            -p * p.ln()
        })
        .sum();
    entropy / (counts.len() as f64).ln()
}

/// Fraction of differently-labelled pairs `u < v` in one hyperedge, or `None`
/// for singleton hyperedges.
pub fn hyperedge_pair_ratio(
    members: &[usize],
    labels: &[usize],
    normalizer: PairNormalizer,
) -> Option<f64> {
    let k = members.len();
    if k < 2 {
        return None;
    }
    // Mismatched unordered pairs = all pairs minus same-class pairs.
    let mut counts: HashMap<usize, usize> = HashMap::new();
    for &v in members {
        *counts.entry(labels[v]).or_default() += 1;
    }
    let same: usize = counts.values().map(|&c| c * (c - 1) / 2).sum();
    let mismatched = (k * (k - 1) / 2 - same) as f64;
    let denom = match normalizer {
        PairNormalizer::Ordered => (k * (k - 1)) as f64,
        PairNormalizer::Unordered => (k * (k - 1)) as f64 / 2.0,
    };
    Some(mismatched / denom)
}

/// Mean normalized label entropy over all hyperedges (0 with no hyperedges).
pub fn label_entropy(hg: &Hypergraph) -> Result<f64> {
    Ok(heterophily_report(hg, PairNormalizer::Ordered)?.label_entropy)
}

/// Mean heterophilic pair ratio over hyperedges with at least two members,
/// using the ordered-pair normalizer.
pub fn pairwise_ratio(hg: &Hypergraph) -> Result<f64> {
    Ok(heterophily_report(hg, PairNormalizer::Ordered)?.pairwise_ratio)
}

pub fn heterophily_report(hg: &Hypergraph, normalizer: PairNormalizer) -> Result<HeterophilyReport> {
    let labels = hg.require_labels()?;
    let per_hyperedge_entropy: Vec<f64> = hg
        .hyperedges()
        .iter()
        .map(|e| hyperedge_entropy(e, labels))
        .collect();
    let label_entropy = mean(&per_hyperedge_entropy);

    let ratios: Vec<f64> = hg
        .hyperedges()
        .iter()
        .filter_map(|e| hyperedge_pair_ratio(e, labels, normalizer))
        .collect();
    let skipped_hyperedges = hg.num_hyperedges() - ratios.len();

    Ok(HeterophilyReport {
        label_entropy,
        pairwise_ratio: mean(&ratios),
        per_hyperedge_entropy,
        skipped_hyperedges,
    })
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}
