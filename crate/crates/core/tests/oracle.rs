// SPDX-License-Identifier: Apache-2.0

//! The exact all-pairs oracle against an independent Floyd–Warshall, and
//! the metric properties every distance matrix must have.

mod common;

use proptest::prelude::*;
use sepapsd_core::{exact_apsd, exact_subgraph_apsd, hop_ball, DistanceMatrix, WeightedGraph};

fn floyd_warshall(g: &WeightedGraph) -> Vec<f64> {
    let n = g.n();
    let mut d = vec![f64::INFINITY; n * n];
    for v in 0..n {
        d[v * n + v] = 0.0;
    }
    for e in g.edges() {
        d[e.u * n + e.v] = d[e.u * n + e.v].min(e.w);
        d[e.v * n + e.u] = d[e.v * n + e.u].min(e.w);
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i * n + k] + d[k * n + j];
                if via < d[i * n + j] {
                    d[i * n + j] = via;
                }
            }
        }
    }
    d
}

fn random_graph(n: usize, extra: usize, seed: u64) -> WeightedGraph {
    use rand::Rng;
    let mut r = common::rng(seed);
    let mut edges = std::collections::BTreeMap::new();
    for v in 1..n {
        if r.gen_bool(0.9) {
            edges.insert((r.gen_range(0..v), v), r.gen_range(0.0..5.0));
        }
    }
    for _ in 0..extra {
        let (a, b) = (r.gen_range(0..n), r.gen_range(0..n));
        if a != b {
            edges.insert((a.min(b), a.max(b)), r.gen_range(0.0..5.0));
        }
    }
    WeightedGraph::new(n, edges.into_iter().map(|((u, v), w)| (u, v, w)), None).unwrap()
}

fn assert_metric(d: &DistanceMatrix) {
    let n = d.n();
    assert!(d.is_symmetric());
    for i in 0..n {
        assert_eq!(d.get(i, i), 0.0);
        for j in 0..n {
            for k in 0..n {
                assert!(d.get(i, j) <= d.get(i, k) + d.get(k, j) + 1e-9);
            }
        }
    }
}

#[test]
fn hundred_graphs_match_floyd_warshall_and_are_metrics() {
    for seed in 0..100u64 {
        let g = random_graph(1 + (seed as usize * 7) % 40, (seed as usize) % 30, seed);
        let d = exact_apsd(&g);
        let fw = floyd_warshall(&g);
        for (a, b) in d.as_slice().iter().zip(&fw) {
            assert!(a == b || (a - b).abs() < 1e-9, "seed {seed}: {a} vs {b}");
        }
        assert_metric(&d);
    }
}

#[test]
fn subgraph_distances_never_undercut_the_whole_graph() {
    let g = common::grid(5, 6, 1.0, 9);
    let full = exact_apsd(&g);
    let scope: Vec<usize> = (0..30).filter(|v| v % 4 != 1).collect();
    let local = exact_subgraph_apsd(&g, &scope).unwrap();
    for &u in &scope {
        for &v in &scope {
            assert!(local.get(u, v).unwrap() >= full.get(u, v) - 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn oracle_agrees_on_random_graphs(n in 1usize..30, extra in 0usize..40, seed in any::<u64>()) {
        let g = random_graph(n, extra, seed);
        let d = exact_apsd(&g);
        let fw = floyd_warshall(&g);
        for (a, b) in d.as_slice().iter().zip(&fw) {
            prop_assert!(a == b || (a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn hop_balls_are_nested(n in 1usize..60, seed in any::<u64>(), k in 0usize..5) {
        let g = common::random_tree(n, 1.0, seed);
        let small = hop_ball(&g, 0, k);
        let large = hop_ball(&g, 0, k + 1);
        prop_assert!(small.iter().all(|v| large.binary_search(v).is_ok()));
        prop_assert!(small.contains(&0));
    }

    #[test]
    fn text_format_round_trips(n in 1usize..40, seed in any::<u64>()) {
        let g = common::random_tree(n, 3.0, seed);
        let back = WeightedGraph::parse(&g.to_text()).unwrap();
        prop_assert_eq!(back, g);
    }
}
