// SPDX-License-Identifier: Apache-2.0

//! Sensitivity of the released vectors under neighbouring edits, sampler
//! statistics and the composition accountant.

mod common;

use rand::Rng;
use sepapsd_core::shortcuts::{true_release_values, ReleasePlan};
use sepapsd_core::{
    accountant_check, build_shortcuts_covering, build_shortcuts_general, build_tree, make_neighbor,
    max_releases_per_edge, sample_gaussian, sample_laplace, NeighborEdit, NoiseMode, NoiseSetting, PrivacyBudget,
    ReleaseKind, RngStream, SeparatorStrategy, ShortcutTable, TreeParams, Variant, WeightedGraph,
};

fn random_edit(g: &WeightedGraph, r: &mut impl Rng) -> NeighborEdit {
    let e = g.edges()[r.gen_range(0..g.edge_count())];
    let cap = g.weight_cap().unwrap();
    let lo = (-1.0f64).max(-e.w);
    let hi = 1.0f64.min(cap - e.w);
    NeighborEdit {
        u: e.u,
        v: e.v,
        delta: r.gen_range(lo..=hi),
    }
}

/// Largest (ℓ∞, ℓ2, ℓ1) change over the release vectors of each kind.
fn release_changes(g: &WeightedGraph, h: &WeightedGraph, table: &ShortcutTable) -> Vec<(ReleaseKind, f64, f64, f64)> {
    let t = build_tree(g, &TreeParams::default(), &SeparatorStrategy::GridAxis).unwrap();
    let plan = ReleasePlan::new(g, &t, table.variant);
    let a = true_release_values(g, &t, &plan);
    let b = true_release_values(h, &t, &plan);
    a.iter()
        .zip(&b)
        .map(|(x, y)| {
            assert_eq!(x.pairs, y.pairs);
            let diffs: Vec<f64> = x
                .values
                .iter()
                .zip(&y.values)
                .map(|(p, q)| if p == q { 0.0 } else { (p - q).abs() })
                .collect();
            let linf = diffs.iter().copied().fold(0.0, f64::max);
            let l2 = diffs.iter().map(|d| d * d).sum::<f64>().sqrt();
            let l1 = diffs.iter().sum::<f64>();
            (x.kind, linf, l2, l1)
        })
        .collect()
}

#[test]
fn fifty_neighbouring_edits_stay_within_calibrated_sensitivity() {
    let g = common::grid(8, 8, 4.0, 21);
    let t = build_tree(&g, &TreeParams::default(), &SeparatorStrategy::GridAxis).unwrap();
    let mut r = common::rng(5);
    for mode in [NoiseMode::ApproximateGaussian, NoiseMode::PureLaplace] {
        let budget = match mode {
            NoiseMode::ApproximateGaussian => PrivacyBudget::approximate(1.0, 1e-6),
            NoiseMode::PureLaplace => PrivacyBudget::pure(1.0),
        };
        let tables = [
            build_shortcuts_general(&g, &t, &budget, 1, NoiseSetting::Calibrated).unwrap(),
            build_shortcuts_covering(&g, &t, &budget, 2, 1, NoiseSetting::Calibrated).unwrap(),
        ];
        for table in &tables {
            for _ in 0..50 {
                let h = make_neighbor(&g, random_edit(&g, &mut r)).unwrap();
                for (kind, linf, l2, l1) in release_changes(&g, &h, table) {
                    assert!(linf <= 1.0 + 1e-9, "{kind:?}: ℓ∞ change {linf}");
                    let delta = match kind {
                        ReleaseKind::Leaf => table.params.sensitivity_leaf,
                        _ => table.params.sensitivity_internal,
                    };
                    match mode {
                        NoiseMode::ApproximateGaussian => assert!(l2 <= delta + 1e-9, "{kind:?}: ℓ2 {l2} > {delta}"),
                        NoiseMode::PureLaplace => assert!(l1 <= delta + 1e-9, "{kind:?}: ℓ1 {l1} > {delta}"),
                    }
                }
            }
            let report = accountant_check(&table.params, &budget, max_releases_per_edge(&g, &t));
            assert!(report.passed, "{report:?}");
        }
    }
}

#[test]
fn covering_table_keeps_its_variant() {
    let g = common::grid(4, 4, 1.0, 2);
    let t = build_tree(&g, &TreeParams::default(), &SeparatorStrategy::GridAxis).unwrap();
    let table = build_shortcuts_covering(&g, &t, &PrivacyBudget::pure(1.0), 3, 1, NoiseSetting::Zero).unwrap();
    assert_eq!(table.variant, Variant::Covering { k: 3 });
}

fn moments(draws: &[f64]) -> (f64, f64) {
    let n = draws.len() as f64;
    let mean = draws.iter().sum::<f64>() / n;
    let var = draws.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

#[test]
fn a_million_gaussian_draws_match_the_declared_variance() {
    let mut stream = RngStream::from_seed(2024);
    let sigma = 3.5;
    let draws: Vec<f64> = (0..1_000_000).map(|_| sample_gaussian(sigma, &mut stream).unwrap()).collect();
    let (mean, var) = moments(&draws);
    assert!(mean.abs() < 0.02, "mean {mean}");
    assert!((var / (sigma * sigma) - 1.0).abs() < 0.01, "variance {var}");
}

#[test]
fn a_million_laplace_draws_match_the_declared_variance() {
    let mut stream = RngStream::from_seed(2025);
    let b = 2.0;
    let draws: Vec<f64> = (0..1_000_000).map(|_| sample_laplace(b, &mut stream).unwrap()).collect();
    let (mean, var) = moments(&draws);
    assert!(mean.abs() < 0.02, "mean {mean}");
    assert!((var / (2.0 * b * b) - 1.0).abs() < 0.02, "variance {var}");
}

#[test]
fn accountant_passes_for_shipped_configurations_in_both_modes() {
    for (name, g, strategy) in common::corpus(40, 256, 31) {
        let t = build_tree(&g, &TreeParams::default(), &strategy).unwrap();
        let k = max_releases_per_edge(&g, &t);
        for budget in [
            PrivacyBudget::approximate(1.0, 1e-6),
            PrivacyBudget::approximate(0.5, 1e-5),
            PrivacyBudget::pure(1.0),
            PrivacyBudget::pure(0.1),
        ] {
            let table = build_shortcuts_general(&g, &t, &budget, 0, NoiseSetting::Calibrated).unwrap();
            let report = accountant_check(&table.params, &budget, k);
            assert!(report.passed, "{name}: {report:?}");
            if budget.mode == NoiseMode::PureLaplace {
                assert!(report.eps_total <= budget.epsilon * (1.0 + 1e-12));
                assert_eq!(report.delta_total, 0.0);
            }
        }
    }
}
