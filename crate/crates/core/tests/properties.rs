mod common;

use common::*;
use honor_core::augmentation::{
    attention_weights, build_views, normalized_degrees, view2_hyperedge, AugmentationParams, DropoutMasks,
    ViewPair,
};
use honor_core::bipartite::BipartiteExpansion;
use honor_core::encoder::{encode, forward_view, highpass_layer, EncoderParams};
use honor_core::evaluation::{ari, classify, nmi, similarity_stats, ClassifyConfig};
use honor_core::heterophily::{label_entropy, pairwise_ratio};
use honor_core::hsbm::{expected_pure_fraction, generate_hsbm, HsbmConfig};
use honor_core::objectives::{contrastive_loss, covariance_loss, decoupling_loss};
use honor_core::{Activation, Hypergraph};
use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{s, Array2};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_matrix(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
    let mut r = rng(seed);
    Array2::from_shape_simple_fn((rows, cols), || r.random_range(-1.0..1.0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn json_round_trip_is_exact(hg in featured_hypergraph(10, 10, 3)) {
        let back = Hypergraph::from_json_str(&hg.to_json_string()).unwrap();
        prop_assert_eq!(back.num_nodes(), hg.num_nodes());
        prop_assert_eq!(back.hyperedges(), hg.hyperedges());
        let (a, b) = (hg.features().unwrap(), back.features().unwrap());
        prop_assert!(a.iter().zip(b.iter()).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn expansion_is_bipartite(hg in hypergraph(10, 10)) {
        let exp = BipartiteExpansion::new(&hg);
        let a = exp.adjacency_dense();
        let n = hg.num_nodes();
        prop_assert!(a.slice(s![..n, ..n]).iter().all(|&v| v == 0.0));
        prop_assert!(a.slice(s![n.., n..]).iter().all(|&v| v == 0.0));
        prop_assert_eq!(a.clone(), a.t().to_owned());
    }

    #[test]
    fn degree_parity(hg in hypergraph(10, 10)) {
        let (dv, de) = hg.degrees();
        let m = hg.num_memberships();
        prop_assert_eq!(dv.iter().sum::<usize>(), m);
        prop_assert_eq!(de.iter().sum::<usize>(), m);
    }

    #[test]
    fn laplacian_spectrum_in_range(hg in hypergraph(10, 10)) {
        let l = BipartiteExpansion::new(&hg).laplacian_dense();
        let d = DMatrix::from_fn(l.nrows(), l.ncols(), |i, j| l[[i, j]]);
        for ev in SymmetricEigen::new(d).eigenvalues.iter() {
            prop_assert!(*ev >= -1e-9 && *ev <= 2.0 + 1e-9, "eigenvalue {}", ev);
        }
    }

    #[test]
    fn metrics_match_brute_force(hg in labeled_hypergraph(20, 15, 4)) {
        prop_assert!((label_entropy(&hg).unwrap() - brute_label_entropy(&hg)).abs() < 1e-12);
        prop_assert!((pairwise_ratio(&hg).unwrap() - brute_pairwise_ratio(&hg)).abs() < 1e-12);
    }

    #[test]
    fn metrics_ignore_relabeling(hg in labeled_hypergraph(15, 10, 4), shift in 1usize..4) {
        let relabeled: Vec<usize> = hg.labels().unwrap().iter().map(|&c| (c + shift) % 4 + 7).collect();
        let other = hg.clone().with_labels(relabeled).unwrap();
        prop_assert!((label_entropy(&hg).unwrap() - label_entropy(&other).unwrap()).abs() < 1e-12);
        prop_assert!((pairwise_ratio(&hg).unwrap() - pairwise_ratio(&other).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn pure_hyperedge_never_raises_metrics(hg in labeled_hypergraph(15, 10, 3), pick in 0usize..1000) {
        let labels = hg.labels().unwrap().to_vec();
        let anchor = pick % hg.num_nodes();
        let pure: Vec<usize> = (0..hg.num_nodes()).filter(|&v| labels[v] == labels[anchor]).collect();
        let mut edges = hg.hyperedges().to_vec();
        edges.push(pure);
        let bigger = Hypergraph::new(hg.num_nodes(), edges, None, Some(labels)).unwrap();
        prop_assert!(label_entropy(&bigger).unwrap() <= label_entropy(&hg).unwrap() + 1e-12);
        prop_assert!(pairwise_ratio(&bigger).unwrap() <= pairwise_ratio(&hg).unwrap() + 1e-12);
    }

    #[test]
    fn attention_is_a_distribution(hg in featured_hypergraph(8, 6, 3), seed in 0u64..1000, shift in -5.0f64..5.0) {
        prop_assume!(hg.num_hyperedges() > 0);
        let mut params = AugmentationParams::glorot(3, 0.0, seed, &mut rng(seed)).unwrap();
        for e in 0..hg.num_hyperedges() {
            let a = attention_weights(&hg, e, &params).unwrap();
            prop_assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            params.scorer.bias += shift;
            let b = attention_weights(&hg, e, &params).unwrap();
            params.scorer.bias -= shift;
            prop_assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-9));
        }
    }

    #[test]
    fn attention_view_stays_in_member_hull(hg in featured_hypergraph(8, 6, 3), seed in 0u64..1000) {
        let params = AugmentationParams::glorot(3, 0.0, seed, &mut rng(seed)).unwrap();
        let x = hg.features().unwrap();
        for e in 0..hg.num_hyperedges() {
            let h = view2_hyperedge(&hg, e, &params).unwrap();
            let members = hg.hyperedge(e);
            for j in 0..3 {
                let lo = members.iter().map(|&v| x[[v, j]]).fold(f64::INFINITY, f64::min);
                let hi = members.iter().map(|&v| x[[v, j]]).fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(h[j] >= lo - 1e-12 && h[j] <= hi + 1e-12);
            }
        }
    }

    #[test]
    fn views_without_dropout_are_reproducible(hg in featured_hypergraph(8, 6, 3), seed in 0u64..1000) {
        let params = AugmentationParams::glorot(3, 0.0, seed, &mut rng(seed)).unwrap();
        let a = build_views(&hg, &params).unwrap();
        let b = build_views(&hg, &params).unwrap();
        prop_assert!(a.x1.iter().zip(b.x1.iter()).all(|(p, q)| p.to_bits() == q.to_bits()));
        prop_assert!(a.x2.iter().zip(b.x2.iter()).all(|(p, q)| p.to_bits() == q.to_bits()));
    }

    #[test]
    fn degree_column_is_unit_interval(hg in hypergraph(10, 10)) {
        prop_assert!(normalized_degrees(&hg).iter().all(|&d| (0.0..=1.0).contains(&d)));
    }

    #[test]
    fn identity_layer_matches_dense_oracle(hg in hypergraph(20, 20), seed in 0u64..1000, gamma in 0.0f64..=1.0) {
        let exp = BipartiteExpansion::new(&hg);
        let t = exp.num_vertices();
        let x = random_matrix(t, 4, seed);
        let w = random_matrix(4, 3, seed + 1);
        let out = highpass_layer(x.view(), w.view(), gamma, &exp, Activation::Identity).unwrap();
        let xw = x.dot(&w);
        let oracle = &xw * (1.0 - gamma) + exp.normalized_adjacency_dense().dot(&xw) * gamma;
        prop_assert!(out.iter().zip(oracle.iter()).all(|(a, b)| (a - b).abs() < 1e-9));
    }

    #[test]
    fn filter_scales_eigenvectors(hg in hypergraph(8, 8), gamma in 0.0f64..=1.0) {
        let exp = BipartiteExpansion::new(&hg);
        let l = exp.laplacian_dense();
        let t = l.nrows();
        let eig = SymmetricEigen::new(DMatrix::from_fn(t, t, |i, j| l[[i, j]]));
        let eye = Array2::<f64>::eye(1);
        for k in 0..t {
            let mu = eig.eigenvalues[k];
            let u = Array2::from_shape_fn((t, 1), |(i, _)| eig.eigenvectors[(i, k)]);
            let out = highpass_layer(u.view(), eye.view(), gamma, &exp, Activation::Identity).unwrap();
            let expected = &u * (1.0 - gamma * mu);
            prop_assert!(out.iter().zip(expected.iter()).all(|(a, b)| (a - b).abs() < 1e-9));
        }
    }

    #[test]
    fn view_two_input_never_touches_view_one(hg in hypergraph(8, 8), seed in 0u64..1000) {
        let exp = BipartiteExpansion::new(&hg);
        let t = exp.num_vertices();
        let params = EncoderParams::glorot(3, 4, &[0.5, 0.3], Activation::Elu, false, &mut rng(seed)).unwrap();
        let x1 = random_matrix(t, 3, seed);
        let views = |x2: Array2<f64>| ViewPair { x1: x1.clone(), x2, masks: DropoutMasks::none(t, 2) };
        let a = encode(&views(random_matrix(t, 3, seed + 1)), &exp, &params, 1.0).unwrap();
        let b = encode(&views(random_matrix(t, 3, seed + 2)), &exp, &params, 1.0).unwrap();
        prop_assert_eq!(a.z1, b.z1);
    }

    #[test]
    fn encoder_is_permutation_equivariant(hg in hypergraph(8, 8), seed in 0u64..1000) {
        let n = hg.num_nodes();
        let m = hg.num_hyperedges();
        let mut r = rng(seed);
        let mut node_perm: Vec<usize> = (0..n).collect();
        let mut edge_perm: Vec<usize> = (0..m).collect();
        use rand::seq::SliceRandom;
        node_perm.shuffle(&mut r);
        edge_perm.shuffle(&mut r);
        // New hyperedge k is old hyperedge edge_perm[k]; old node v becomes node_perm[v].
        let edges: Vec<Vec<usize>> = edge_perm
            .iter()
            .map(|&old| hg.hyperedge(old).iter().map(|&v| node_perm[v]).collect())
            .collect();
        let permuted = Hypergraph::new(n, edges, None, None).unwrap();

        let x = random_matrix(n + m, 3, seed);
        let mut xp = Array2::zeros(x.raw_dim());
        for v in 0..n {
            xp.row_mut(node_perm[v]).assign(&x.row(v));
        }
        for (k, &old) in edge_perm.iter().enumerate() {
            xp.row_mut(n + k).assign(&x.row(n + old));
        }
        let params = EncoderParams::glorot(3, 4, &[0.5, 0.8], Activation::Elu, false, &mut rng(seed + 9)).unwrap();
        let z = forward_view(&x, &BipartiteExpansion::new(&hg), &params, 1).unwrap().output;
        let zp = forward_view(&xp, &BipartiteExpansion::new(&permuted), &params, 1).unwrap().output;
        for v in 0..n {
            let d = &z.row(v) - &zp.row(node_perm[v]);
            prop_assert!(d.iter().all(|e| e.abs() < 1e-12));
        }
        for (k, &old) in edge_perm.iter().enumerate() {
            let d = &z.row(n + old) - &zp.row(n + k);
            prop_assert!(d.iter().all(|e| e.abs() < 1e-12));
        }
    }

    #[test]
    fn cosine_terms_ignore_row_scale(z1 in matrix(2..=8, 2..=5), seed in 0u64..1000, c in 0.1f64..10.0) {
        let rows = z1.nrows();
        let z2 = random_matrix(rows, z1.ncols(), seed);
        let row = (seed as usize) % rows;
        let mut scaled = z1.clone();
        scaled.row_mut(row).mapv_inplace(|v| v * c);
        let a = contrastive_loss(z1.view(), z2.view(), 0.5).unwrap();
        let b = contrastive_loss(scaled.view(), z2.view(), 0.5).unwrap();
        prop_assert!((a - b).abs() < 1e-6 * (1.0 + a.abs()));
        let memberships: Vec<(usize, usize)> = (0..rows - 1).map(|v| (v, 0)).collect();
        let a = decoupling_loss(z1.view(), rows - 1, &memberships);
        let b = decoupling_loss(scaled.view(), rows - 1, &memberships);
        prop_assert!((a - b).abs() < 1e-6 * (1.0 + a.abs()));
    }

    #[test]
    fn contrast_is_symmetric(z1 in matrix(1..=8, 1..=5), seed in 0u64..1000) {
        let z2 = random_matrix(z1.nrows(), z1.ncols(), seed);
        let a = contrastive_loss(z1.view(), z2.view(), 0.7).unwrap();
        let b = contrastive_loss(z2.view(), z1.view(), 0.7).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn spectral_penalty_obeys_parseval(z in matrix(2..=12, 1..=16), split in 0usize..12) {
        let n = split.min(z.nrows());
        let (zv, ze) = (z.slice(s![..n, ..]), z.slice(s![n.., ..]));
        let energy = z.ncols() as f64 * z.iter().map(|v| v * v).sum::<f64>();
        let got = covariance_loss(zv, ze);
        prop_assert!((got - energy).abs() <= 1e-9 * energy.max(1e-300));
    }

    #[test]
    fn clustering_scores_are_symmetric(a in proptest::collection::vec(0usize..4, 2..40), seed in 0u64..1000) {
        let mut r = rng(seed);
        let b: Vec<usize> = a.iter().map(|_| r.random_range(0..3)).collect();
        match (nmi(&a, &b), nmi(&b, &a)) {
            (Some(x), Some(y)) => prop_assert!((x - y).abs() < 1e-12),
            (x, y) => prop_assert_eq!(x, y),
        }
        prop_assert!((ari(&a, &b) - ari(&b, &a)).abs() < 1e-12);
        let renamed: Vec<usize> = a.iter().map(|&c| 10 - c).collect();
        prop_assert!((ari(&a, &b) - ari(&renamed, &b)).abs() < 1e-12);
        match (nmi(&a, &b), nmi(&renamed, &b)) {
            (Some(x), Some(y)) => prop_assert!((x - y).abs() < 1e-12),
            (x, y) => prop_assert_eq!(x, y),
        }
    }

    #[test]
    fn similarity_mean_ignores_row_scale(z in matrix(4..=10, 2..=4), c in 0.1f64..10.0, row in 0usize..10) {
        let n = z.nrows() - 2;
        let memberships: Vec<(usize, usize)> = (0..n).map(|v| (v, v % 2)).collect();
        let mut scaled = z.clone();
        scaled.row_mut(row % z.nrows()).mapv_inplace(|v| v * c);
        let a = similarity_stats(z.view(), n, &memberships).unwrap();
        let b = similarity_stats(scaled.view(), n, &memberships).unwrap();
        prop_assert!((a.mean - b.mean).abs() < 1e-9);
        prop_assert!(a.variance >= 0.0 && a.entropy >= 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn probe_ignores_column_order(seed in 0u64..1000) {
        let labels: Vec<usize> = (0..60).map(|i| i % 3).collect();
        let mut z = random_matrix(60, 4, seed);
        for (i, &c) in labels.iter().enumerate() {
            z[[i, c]] += 2.0;
        }
        let mut permuted = z.clone();
        for (to, from) in [3usize, 0, 2, 1].into_iter().enumerate() {
            permuted.column_mut(to).assign(&z.column(from));
        }
        let cfg = ClassifyConfig { splits: 3, seed, ..ClassifyConfig::default() };
        let a = classify(z.view(), &labels, &cfg).unwrap();
        let b = classify(permuted.view(), &labels, &cfg).unwrap();
        for (x, y) in a.accuracies.iter().zip(&b.accuracies) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }
}

#[test]
fn dropout_frequency_matches_rate() {
    let masks = DropoutMasks::sample(100, 100, 0.3, &mut rng(11));
    let dropped = masks.view1.iter().filter(|&&v| v == 0.0).count() as f64 / 10_000.0;
    assert!((dropped - 0.3).abs() < 0.01, "dropped fraction {dropped}");
}

#[test]
fn hsbm_is_balanced_and_uniform_in_edge_size() {
    for seed in 0..5 {
        let cfg = HsbmConfig { num_nodes: 60, num_edges: 80, edge_size: 4, seed, ..HsbmConfig::default() };
        let hg = generate_hsbm(&cfg).unwrap();
        let ones = hg.labels().unwrap().iter().filter(|&&c| c == 1).count();
        assert_eq!(ones, 30);
        assert!(hg.hyperedges().iter().all(|e| e.len() == 4));
    }
}

#[test]
fn hsbm_pure_fraction_matches_acceptance_scheme() {
    let cfg = HsbmConfig { num_nodes: 100, alpha: 0.7, beta: 0.3, num_edges: 4000, seed: 5, ..HsbmConfig::default() };
    let hg = generate_hsbm(&cfg).unwrap();
    let labels = hg.labels().unwrap();
    let pure = hg
        .hyperedges()
        .iter()
        .filter(|e| e.iter().all(|&v| labels[v] == labels[e[0]]))
        .count() as f64;
    let m = hg.num_hyperedges() as f64;
    let p = expected_pure_fraction(&cfg);
    let half_width = 1.96 * (p * (1.0 - p) / m).sqrt();
    assert!((pure / m - p).abs() < half_width, "observed {} expected {p} ± {half_width}", pure / m);
}

#[test]
fn hsbm_random_mixing_ratio_matches_simulation() {
    // With α = β acceptance ignores communities, so hyperedges are uniform
    // k-subsets. Expected ratio estimated by direct subset sampling.
    let cfg = HsbmConfig { num_nodes: 100, alpha: 0.5, beta: 0.5, num_edges: 3000, seed: 9, ..HsbmConfig::default() };
    let hg = generate_hsbm(&cfg).unwrap();
    let observed = pairwise_ratio(&hg).unwrap();

    let labels = hg.labels().unwrap();
    let mut r = rng(123);
    let trials = 20_000;
    let samples: Vec<f64> = (0..trials)
        .map(|_| {
            let e = rand::seq::index::sample(&mut r, 100, 3).into_vec();
            let mixed = (0..3).flat_map(|i| (i + 1..3).map(move |j| (i, j)))
                .filter(|&(i, j)| labels[e[i]] != labels[e[j]])
                .count();
            mixed as f64 / 6.0
        })
        .collect();
    let mean = samples.iter().sum::<f64>() / trials as f64;
    let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / trials as f64;
    // Both estimates carry sampling error; combine their standard errors.
    let se = (var / trials as f64 + var / hg.num_hyperedges() as f64).sqrt();
    assert!((observed - mean).abs() < 1.96 * se, "observed {observed}, simulated {mean} ± {}", 1.96 * se);
}

#[test]
fn homophilic_pairs_have_low_entropy() {
    let mut total = 0.0;
    for seed in 0..10 {
        let cfg = HsbmConfig { num_nodes: 100, alpha: 0.9, beta: 0.1, edge_size: 2, seed, ..HsbmConfig::default() };
        total += label_entropy(&generate_hsbm(&cfg).unwrap()).unwrap();
    }
    assert!(total / 10.0 < 0.2, "mean label entropy {}", total / 10.0);
}
