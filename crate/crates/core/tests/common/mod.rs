#![allow(dead_code)]

use honor_core::Hypergraph;
use ndarray::Array2;
use proptest::collection::{btree_set, vec};
use proptest::prelude::*;

/// Random hypergraph with `1..=max_nodes` nodes and `0..=max_edges`
/// non-empty hyperedges.
pub fn hypergraph(max_nodes: usize, max_edges: usize) -> impl Strategy<Value = Hypergraph> {
    (1..=max_nodes).prop_flat_map(move |n| {
        vec(btree_set(0..n, 1..=n.min(6)), 0..=max_edges).prop_map(move |edges| {
            let edges = edges.into_iter().map(|e| e.into_iter().collect()).collect();
            Hypergraph::new(n, edges, None, None).unwrap()
        })
    })
}

pub fn labeled_hypergraph(max_nodes: usize, max_edges: usize, classes: usize) -> impl Strategy<Value = Hypergraph> {
    hypergraph(max_nodes, max_edges).prop_flat_map(move |hg| {
        let n = hg.num_nodes();
        vec(0..classes, n).prop_map(move |labels| hg.clone().with_labels(labels).unwrap())
    })
}

pub fn featured_hypergraph(max_nodes: usize, max_edges: usize, dim: usize) -> impl Strategy<Value = Hypergraph> {
    hypergraph(max_nodes, max_edges).prop_flat_map(move |hg| {
        let n = hg.num_nodes();
        vec(-3.0f64..3.0, n * dim).prop_map(move |flat| {
            let x = Array2::from_shape_vec((n, dim), flat).unwrap();
            hg.clone().with_features(x).unwrap()
        })
    })
}

pub fn matrix(rows: std::ops::RangeInclusive<usize>, cols: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Array2<f64>> {
    (rows, cols).prop_flat_map(|(r, c)| {
        vec(-5.0f64..5.0, r * c).prop_map(move |flat| Array2::from_shape_vec((r, c), flat).unwrap())
    })
}

/// Normalized label entropy of one hyperedge, computed from pairwise label
/// comparisons rather than a histogram.
pub fn brute_entropy(members: &[usize], labels: &[usize]) -> f64 {
    let mut distinct: Vec<usize> = Vec::new();
    for &v in members {
        if !distinct.contains(&labels[v]) {
            distinct.push(labels[v]);
        }
    }
    if distinct.len() <= 1 {
        return 0.0;
    }
    let size = members.len() as f64;
    let mut h = 0.0;
    for c in &distinct {
        let count = members.iter().filter(|&&v| labels[v] == *c).count() as f64;
        let p = count / size;
        h -= p * p.log2();
    }
    h / (distinct.len() as f64).log2()
}

pub fn brute_label_entropy(hg: &Hypergraph) -> f64 {
    let labels = hg.labels().unwrap();
    let edges = hg.hyperedges();
    if edges.is_empty() {
        return 0.0;
    }
    edges.iter().map(|e| brute_entropy(e, labels)).sum::<f64>() / edges.len() as f64
}

/// Mean over hyperedges with at least two members of
/// `#{u < v : y_u ≠ y_v} / (|e|(|e| − 1))`, found by enumerating ordered pairs.
pub fn brute_pairwise_ratio(hg: &Hypergraph) -> f64 {
    let labels = hg.labels().unwrap();
    let mut total = 0.0;
    let mut counted = 0usize;
    for e in hg.hyperedges().iter().filter(|e| e.len() >= 2) {
        let mut differing = 0usize;
        let mut pairs = 0usize;
        for &i in e {
            for &j in e {
                if i != j {
                    pairs += 1;
                    if labels[i] != labels[j] {
                        differing += 1;
                    }
                }
            }
        }
        total += (differing as f64 / 2.0) / pairs as f64;
        counted += 1;
    }
    if counted == 0 {
        0.0
    } else {
        total / counted as f64
    }
}
