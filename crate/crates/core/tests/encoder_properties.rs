mod support;

use ndarray::{Array2, Axis};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use udforest::encoder::{
    biaffine_score, encode, gat_layer, Embedder, EncoderParams, ForestGraph, HashEmbedder,
};
use udforest::{construct_forest, to_graph};

use support::random_pair;

fn random_graph(rng: &mut ChaCha8Rng, d: usize) -> ForestGraph {
    let p = random_pair(rng, 0, 8);
    let theta = rng.random_range(0.0..=1.0);
    let forest = construct_forest(&p.src, &p.tgt, &p.alignment, theta).unwrap();
    to_graph(&forest, &HashEmbedder::new(d, rng.random())).unwrap()
}

fn permuted(graph: &ForestGraph, perm: &[usize]) -> ForestGraph {
    // new node k is old node perm[k]
    let n = graph.n();
    let mut inverse = vec![0; n];
    for (k, &old) in perm.iter().enumerate() {
        inverse[old] = k;
    }
    let edges: Vec<(usize, usize)> = graph
        .edges()
        .iter()
        .map(|&(a, b)| (inverse[a], inverse[b]))
        .collect();
    let emb = graph.embeddings().select(Axis(0), perm);
    ForestGraph::from_edges(n, &edges, emb).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn encode_is_node_permutation_equivariant(seed: u64, d in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let graph = random_graph(&mut rng, d);
        let mut perm: Vec<usize> = (0..graph.n()).collect();
        perm.shuffle(&mut rng);
        let params = EncoderParams::random(d, 3, 2, seed).unwrap();
        let enc = encode(&graph, &params).unwrap();
        let enc_perm = encode(&permuted(&graph, &perm), &params).unwrap();
        for (k, &old) in perm.iter().enumerate() {
            for c in 0..2 * d {
                prop_assert!((enc_perm[[k, c]] - enc[[old, c]]).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn attention_rows_normalized(seed: u64, d in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let graph = random_graph(&mut rng, d);
        let params = EncoderParams::random(d, 2, 1, seed).unwrap();
        let out = gat_layer(&graph, &params.layers()[0]).unwrap();
        for i in 0..graph.n() {
            let row = out.attention.row(i);
            prop_assert!((row.sum() - 1.0).abs() < 1e-9);
            for j in 0..graph.n() {
                if !graph.adjacency()[[i, j]] {
                    prop_assert_eq!(row[j], 0.0);
                }
            }
        }
        prop_assert!(out.hidden.iter().all(|&x| x > 0.0 && x < 1.0));
    }

    #[test]
    fn label_permutation_equivariance(seed: u64, labels in 2usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = 3;
        let graph = random_graph(&mut rng, d);
        let params = EncoderParams::random(d, labels, 2, seed).unwrap();
        let mut perm: Vec<usize> = (0..labels).collect();
        perm.shuffle(&mut rng);
        let swapped = EncoderParams::new(
            d,
            params.layers().to_vec(),
            params.rel_bilinear().select(Axis(1), &perm),
            params.rel_linear().select(Axis(0), &perm),
        )
        .unwrap();
        let enc = encode(&graph, &params).unwrap();
        let n = graph.n();
        let (s, o) = (rng.random_range(0..n), rng.random_range(0..n));
        let p = biaffine_score(enc.view(), s, o, &params).unwrap();
        let q = biaffine_score(enc.view(), s, o, &swapped).unwrap();
        prop_assert!((p.sum() - 1.0).abs() < 1e-9);
        for (l, &old) in perm.iter().enumerate() {
            prop_assert!((q[l] - p[old]).abs() < 1e-12);
        }
    }
}

#[test]
fn scaling_relation_weights_keeps_label_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let graph = random_graph(&mut rng, 4);
    let params = EncoderParams::random(4, 5, 2, 17).unwrap();
    let doubled = EncoderParams::new(
        4,
        params.layers().to_vec(),
        params.rel_bilinear() * 2.0,
        params.rel_linear() * 2.0,
    )
    .unwrap();
    let enc = encode(&graph, &params).unwrap();
    let p = biaffine_score(enc.view(), 1, 0, &params).unwrap();
    let q = biaffine_score(enc.view(), 1, 0, &doubled).unwrap();
    let order = |v: &ndarray::Array1<f64>| {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[b].total_cmp(&v[a]));
        idx
    };
    assert_eq!(order(&p), order(&q));
    assert!(p.iter().zip(q.iter()).any(|(a, b)| (a - b).abs() > 1e-6));
}

#[test]
fn fixed_seed_is_bit_stable() {
    let run = || {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let graph = random_graph(&mut rng, 5);
        let params = EncoderParams::random(5, 4, 2, 99).unwrap();
        let enc = encode(&graph, &params).unwrap();
        let probs = biaffine_score(enc.view(), 0, graph.n() - 1, &params).unwrap();
        (
            enc.iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
            probs.iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
        )
    };
    assert_eq!(run(), run());
}

#[test]
fn embeddings_follow_forest_order() {
    let emb = HashEmbedder::new(3, 0);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let p = random_pair(&mut rng, 0, 6);
    let forest = construct_forest(&p.src, &p.tgt, &p.alignment, 0.5).unwrap();
    let g = to_graph(&forest, &emb).unwrap();
    let expected: Vec<f64> = forest
        .nodes
        .iter()
        .flat_map(|n| emb.embed(&n.form))
        .collect();
    assert_eq!(
        g.embeddings(),
        &Array2::from_shape_vec((forest.nodes.len(), 3), expected).unwrap()
    );
    assert_eq!(g.edges().len(), g.n() - 1);
}
