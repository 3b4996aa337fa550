mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tgraph::geometry::CameraPose;
use tgraph::graph::*;
use tgraph::Error;

fn repr() -> impl Strategy<Value = Representation> {
    prop_oneof![Just(Representation::RelativeT), Just(Representation::PairT)]
}

fn random_graph(n: usize, repr: Representation, rng: &mut ChaCha8Rng) -> TranslationGraph {
    let payloads =
        (0..pair_count(n)).map(|_| (0..repr.payload_len()).map(|_| rng.random_range(-3.0..3.0)).collect()).collect();
    TranslationGraph::from_payloads(n, repr, payloads).unwrap()
}

fn random_poses(n: usize, seed: u64) -> Vec<CameraPose> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| common::random_pose(&mut rng)).collect()
}

proptest! {
    #[test]
    fn k_factor_balances_terms(n in 2usize..=8, repr in repr()) {
        let k = k_factor(n, repr).unwrap();
        prop_assert_eq!(k * (repr.vectors_per_edge() * pair_count(n)) as f64, n as f64);
    }

    #[test]
    fn graph_has_canonical_edges(n in 2usize..=8, seed in any::<u64>()) {
        let g = build_graph(&random_poses(n, seed), Representation::RelativeT).unwrap();
        prop_assert_eq!(g.edges.len(), pair_count(n));
        let pairs: Vec<_> = g.edges.iter().map(|e| (e.i, e.j)).collect();
        prop_assert_eq!(pairs, edge_pairs(n).collect::<Vec<_>>());
    }

    #[test]
    fn normalized_max_norm_is_one(n in 2usize..=8, seed in any::<u64>(), repr in repr()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = normalize_graph(&random_graph(n, repr, &mut rng)).unwrap();
        prop_assert!((g.max_vector_norm() - 1.0).abs() < 1e-12);
        prop_assert!(g.normalized);
        prop_assert!(matches!(normalize_graph(&g), Err(Error::Contract(_))));
    }

    #[test]
    fn normalization_is_scale_free(n in 2usize..=8, seed in any::<u64>(), s in 0.01..100.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(n, Representation::PairT, &mut rng);
        let mut scaled = g.clone();
        scaled.edges.iter_mut().for_each(|e| e.payload.iter_mut().for_each(|v| *v *= s));
        let (a, b) = (normalize_graph(&g).unwrap(), normalize_graph(&scaled).unwrap());
        for (ea, eb) in a.edges.iter().zip(&b.edges) {
            for (x, y) in ea.payload.iter().zip(&eb.payload) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn loss_is_zero_on_self_and_matches_recomputation(n in 2usize..=8, seed in any::<u64>(), repr in repr()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (p, g) = (random_graph(n, repr, &mut rng), random_graph(n, repr, &mut rng));
        prop_assert_eq!(t_graph_loss(&g, &g).unwrap(), 0.0);
        let mut sum = 0.0;
        for (ep, eg) in p.edges.iter().zip(&g.edges) {
            for (a, b) in ep.payload.iter().zip(&eg.payload) {
                sum += (a - b).abs();
            }
        }
        let expected = n as f64 / (repr.vectors_per_edge() * pair_count(n)) as f64 * sum;
        prop_assert!((t_graph_loss(&p, &g).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn total_loss_adds(a in 0.0..10.0f64, b in 0.0..10.0f64) {
        prop_assert_eq!(total_loss(a, b).unwrap(), a + b);
    }

    #[test]
    fn json_round_trip(n in 2usize..=8, seed in any::<u64>(), repr in repr()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(n, repr, &mut rng);
        let back: TranslationGraph = serde_json::from_str(&serde_json::to_string(&g).unwrap()).unwrap();
        prop_assert_eq!(back, g);
    }
}

#[test]
fn mismatched_graphs_are_rejected() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let a = random_graph(3, Representation::RelativeT, &mut rng);
    let b = random_graph(4, Representation::RelativeT, &mut rng);
    let c = random_graph(3, Representation::PairT, &mut rng);
    assert!(matches!(t_graph_loss(&a, &b), Err(Error::Contract(_))));
    assert!(matches!(t_graph_loss(&a, &c), Err(Error::Contract(_))));
    assert!(total_loss(f64::NAN, 0.0).is_err());
    assert!(total_loss(-1.0, 0.0).is_err());
}

#[test]
fn graph_json_field_names() {
    let g = build_graph(&random_poses(3, 5), Representation::PairT);
    // random poses may be degenerate only with vanishing probability
    let g = normalize_graph(&g.unwrap()).unwrap();
    let v: serde_json::Value = serde_json::from_str(&serde_json::to_string(&g).unwrap()).unwrap();
    assert_eq!(v["representation"], "pair-t");
    assert_eq!(v["n"], 3);
    assert_eq!(v["normalized"], true);
    assert_eq!(v["edges"][2]["i"], 1);
    assert_eq!(v["edges"][2]["j"], 2);
    assert_eq!(v["edges"][0]["payload"].as_array().unwrap().len(), 6);
}
