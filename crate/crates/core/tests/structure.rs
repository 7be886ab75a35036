// SPDX-License-Identifier: Apache-2.0

//! Structural invariants of the decomposition tree and the shortcut table
//! over a mixed corpus of generated graphs.

mod common;

use proptest::prelude::*;
use sepapsd_core::{
    build_shortcuts_covering, build_shortcuts_general, build_tree, max_releases_per_edge, validate_tree, DecompTree, NoiseSetting,
    PrivacyBudget, SeparatorStrategy, TreeParams,
};

#[test]
fn corpus_trees_validate_and_tables_respect_the_entry_bound() {
    let budget = PrivacyBudget::approximate(1.0, 1e-6);
    for (name, g, strategy) in common::corpus(100, 256, 7) {
        let t = build_tree(&g, &TreeParams::default(), &strategy).unwrap_or_else(|e| panic!("{name}: {e}"));
        let report = validate_tree(&g, &t);
        assert!(report.passed(), "{name}:\n{report}");
        assert!(report.max_edge_multiplicity <= t.depth() + 1, "{name}: {report}");
        assert!(max_releases_per_edge(&g, &t) <= 2 * t.h, "{name}");
        for table in [
            build_shortcuts_general(&g, &t, &budget, 1, NoiseSetting::Calibrated).unwrap(),
            build_shortcuts_covering(&g, &t, &budget, 2, 1, NoiseSetting::Calibrated).unwrap(),
        ] {
            assert!(table.len() as f64 <= table.entry_bound(), "{name}: {} entries", table.len());
        }
    }
}

#[test]
fn json_round_trip_preserves_every_corpus_tree() {
    for (name, g, strategy) in common::corpus(24, 100, 3) {
        let t = build_tree(&g, &TreeParams::default(), &strategy).unwrap();
        let back = DecompTree::from_json(&g, &t.to_json()).unwrap();
        assert_eq!(back, t, "{name}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn random_trees_separate_validly(n in 1usize..200, seed in any::<u64>(), c in 2usize..6) {
        let g = common::random_tree(n, 1.0, seed);
        let params = TreeParams::with_leaf_size(c);
        let t = build_tree(&g, &params, &SeparatorStrategy::TreeCentroid).unwrap();
        let report = validate_tree(&g, &t);
        prop_assert!(report.passed(), "{}", report);
        prop_assert!(t.max_leaf() <= c);
    }

    #[test]
    fn builds_are_deterministic(a in 1usize..12, b in 1usize..12, seed in any::<u64>()) {
        let g = common::subgrid(a.max(2), b.max(2), 1.0, seed);
        let x = build_tree(&g, &TreeParams::default(), &SeparatorStrategy::BfsLevel).unwrap();
        let y = build_tree(&g, &TreeParams::default(), &SeparatorStrategy::BfsLevel).unwrap();
        prop_assert_eq!(x.to_json(), y.to_json());
    }

    #[test]
    fn subgrids_validate(a in 2usize..16, b in 2usize..16, seed in any::<u64>()) {
        let g = common::subgrid(a, b, 1.0, seed);
        let t = build_tree(&g, &TreeParams::default(), &SeparatorStrategy::BfsLevel).unwrap();
        let report = validate_tree(&g, &t);
        prop_assert!(report.passed(), "{}", report);
    }
}
