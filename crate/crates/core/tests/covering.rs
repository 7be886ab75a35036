// SPDX-License-Identifier: Apache-2.0

//! Covering size bound and hop-error inequality, brute-forced.

mod common;

use proptest::prelude::*;
use rand::Rng;
use sepapsd_core::covering::covering_bound;
use sepapsd_core::{exact_subgraph_apsd, greedy_k_covering, Subgraph, WeightedGraph};

fn hops_within(g: &WeightedGraph, scope: &[usize], src: usize) -> Vec<usize> {
    let sub = Subgraph::induced(g, scope).unwrap();
    let mut hops = vec![usize::MAX; g.n()];
    hops[src] = 0;
    let mut queue = std::collections::VecDeque::from([src]);
    while let Some(v) = queue.pop_front() {
        for &(u, _) in g.neighbors(v) {
            if sub.contains(u) && hops[u] == usize::MAX {
                hops[u] = hops[v] + 1;
                queue.push_back(u);
            }
        }
    }
    hops
}

#[test]
fn greedy_coverings_meet_the_size_bound_on_200_graphs() {
    let mut r = common::rng(44);
    for i in 0..200 {
        let n = r.gen_range(1..=128);
        let seed = r.gen();
        let g = match i % 3 {
            0 => common::random_tree(n, 1.0, seed),
            1 => common::subgrid(r.gen_range(2..=11), r.gen_range(2..=11), 1.0, seed),
            _ => common::path(n, 1.0, seed),
        };
        // a random scope, possibly split into several components
        let scope: Vec<usize> = (0..g.n()).filter(|_| r.gen_bool(0.8)).collect();
        let k = r.gen_range(1..=6);
        let cov = greedy_k_covering(&g, &scope, k).unwrap();
        let comps = Subgraph::induced(&g, &scope).unwrap().components(&g).len();
        assert!(cov.len() <= covering_bound(scope.len(), comps, k), "graph {i}: {} > bound", cov.len());
        for &v in &scope {
            let z = cov.center_of(v).unwrap();
            assert!(hops_within(&g, &scope, z)[v] <= k, "graph {i}: {v} is far from its centre {z}");
        }
    }
}

#[test]
fn hop_error_holds_on_1000_covered_pairs() {
    let mut r = common::rng(45);
    let mut pairs = 0;
    let mut violations = 0;
    while pairs < 1000 {
        let w = r.gen_range(0.5..3.0);
        let g = common::subgrid(r.gen_range(3..=10), r.gen_range(3..=10), w, r.gen());
        let k = r.gen_range(1..=3);
        let scope: Vec<usize> = (0..g.n()).collect();
        let cov = greedy_k_covering(&g, &scope, k).unwrap();
        let d = exact_subgraph_apsd(&g, &scope).unwrap();
        for _ in 0..50 {
            let (a, b) = (r.gen_range(0..g.n()), r.gen_range(0..g.n()));
            let (za, zb) = (cov.center_of(a).unwrap(), cov.center_of(b).unwrap());
            let err = (d.get(a, b).unwrap() - d.get(za, zb).unwrap()).abs();
            if err > 2.0 * k as f64 * w + 1e-9 {
                violations += 1;
            }
            pairs += 1;
        }
    }
    assert_eq!(violations, 0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_vertex_has_a_centre_within_k_hops(n in 1usize..80, seed in any::<u64>(), k in 1usize..5) {
        let g = common::random_tree(n, 1.0, seed);
        let scope: Vec<usize> = (0..n).collect();
        let cov = greedy_k_covering(&g, &scope, k).unwrap();
        prop_assert!(cov.len() <= covering_bound(n, 1, k));
        for v in 0..n {
            let z = cov.center_of(v).unwrap();
            prop_assert!(cov.centers.binary_search(&z).is_ok());
            prop_assert!(hops_within(&g, &scope, z)[v] <= k);
        }
    }
}
