//! Shared fixtures for the benchmarks.

use honor_core::hsbm::{generate_hsbm, HsbmConfig};
use honor_core::Hypergraph;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Block-model instance with `num_nodes` nodes and as many hyperedges.
pub fn block_model(num_nodes: usize, feature_dim: usize) -> Hypergraph {
    generate_hsbm(&HsbmConfig {
        num_nodes,
        num_edges: num_nodes,
        feature_dim,
        ..HsbmConfig::default()
    })
    .expect("benchmark instance")
}

pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-1.0..1.0))
}
