// SPDX-License-Identifier: Apache-2.0

//! Distance reconstruction: zero-noise exactness, the covering slack,
//! agreement of the two evaluation orders and the absence of FAIL.

mod common;

use proptest::prelude::*;
use sepapsd_core::{
    apsd_all, build_shortcuts_covering, build_shortcuts_general, build_tree, exact_apsd, query_pair, NoiseSetting,
    PrivacyBudget, QueryContext, SeparatorStrategy, TreeParams, WeightedGraph,
};

fn budget() -> PrivacyBudget {
    PrivacyBudget::approximate(1.0, 1e-6)
}

#[test]
fn zero_noise_reproduces_the_oracle_on_the_corpus() {
    for (name, g, strategy) in common::corpus(60, 144, 11) {
        let t = build_tree(&g, &TreeParams::default(), &strategy).unwrap();
        let exact = exact_apsd(&g);
        let table = build_shortcuts_general(&g, &t, &budget(), 0, NoiseSetting::Zero).unwrap();
        let est = apsd_all(&QueryContext::new(&t, &table));
        assert!(est.max_abs_diff(&exact) <= 1e-9, "{name}: general off by {}", est.max_abs_diff(&exact));

        let k = 2;
        let table = build_shortcuts_covering(&g, &t, &budget(), k, 0, NoiseSetting::Zero).unwrap();
        let est = apsd_all(&QueryContext::new(&t, &table));
        let slack = 2.0 * t.h as f64 * k as f64 * g.weight_cap().unwrap();
        assert!(est.max_abs_diff(&exact) <= slack + 1e-9, "{name}: covering off by {}", est.max_abs_diff(&exact));
    }
}

#[test]
fn every_pair_is_answered_without_fail_and_evaluated_once() {
    for (name, g, strategy) in common::corpus(16, 128, 12) {
        let t = build_tree(&g, &TreeParams::default(), &strategy).unwrap();
        let table = build_shortcuts_covering(&g, &t, &budget(), 1, 4, NoiseSetting::Calibrated).unwrap();
        let mut ctx = QueryContext::new(&t, &table);
        let all = apsd_all(&ctx);
        for s in 0..g.n() {
            for u in 0..g.n() {
                let v = query_pair(&mut ctx, s, u).unwrap_or_else(|e| panic!("{name}: {e}"));
                assert_eq!(v.to_bits(), all.get(s, u).to_bits(), "{name}: ({s}, {u})");
            }
        }
        assert_eq!(ctx.evaluations as usize, ctx.memo_len(), "{name}");
        // repeating a query reuses the memo
        let before = ctx.evaluations;
        if g.n() > 1 {
            query_pair(&mut ctx, 0, g.n() - 1).unwrap();
        }
        assert_eq!(ctx.evaluations, before);
    }
}

#[test]
fn output_is_symmetric_with_zero_diagonal_and_infinite_across_components() {
    let g = WeightedGraph::new(10, [(0, 1, 1.0), (1, 2, 1.0), (3, 4, 1.0), (5, 6, 1.0), (6, 7, 1.0), (7, 8, 1.0)], Some(1.0))
        .unwrap();
    let t = build_tree(&g, &TreeParams::default(), &SeparatorStrategy::BfsLevel).unwrap();
    let table = build_shortcuts_general(&g, &t, &budget(), 2, NoiseSetting::Calibrated).unwrap();
    let est = apsd_all(&QueryContext::new(&t, &table));
    assert!(est.is_symmetric());
    for v in 0..10 {
        assert_eq!(est.get(v, v), 0.0);
    }
    assert_eq!(est.get(0, 4), f64::INFINITY);
    assert_eq!(est.get(9, 2), f64::INFINITY);
    assert!(est.get(5, 8).is_finite());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn zero_noise_general_is_exact_on_random_grids(a in 1usize..10, b in 1usize..10, seed in any::<u64>()) {
        let g = common::grid(a, b, 2.0, seed);
        let t = build_tree(&g, &TreeParams::default(), &SeparatorStrategy::GridAxis).unwrap();
        let table = build_shortcuts_general(&g, &t, &budget(), seed, NoiseSetting::Zero).unwrap();
        let est = apsd_all(&QueryContext::new(&t, &table));
        prop_assert!(est.max_abs_diff(&exact_apsd(&g)) <= 1e-9);
    }

    #[test]
    fn noisy_outputs_are_reproducible(n in 2usize..60, seed in any::<u64>()) {
        let g = common::random_tree(n, 1.0, seed);
        let t = build_tree(&g, &TreeParams::default(), &SeparatorStrategy::TreeCentroid).unwrap();
        let run = || {
            let table = build_shortcuts_general(&g, &t, &budget(), seed, NoiseSetting::Calibrated).unwrap();
            apsd_all(&QueryContext::new(&t, &table))
        };
        let (x, y) = (run(), run());
        prop_assert!(x.as_slice().iter().zip(y.as_slice()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }
}
