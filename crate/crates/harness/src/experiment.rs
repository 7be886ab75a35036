// SPDX-License-Identifier: Apache-2.0

//! The experiment runner: generate one graph, run a mechanism once per
//! seed, score every run against the exact oracle and write the reports.

use std::path::Path;
use std::time::Instant;

use sepapsd_core::baselines::edge_noise_apsd_with_scale;
use sepapsd_core::{
    accountant_check, apsd_all, basic_composition, build_shortcuts_covering, build_shortcuts_general, build_tree,
    error_envelope, exact_apsd, max_releases_per_edge, validate_tree, AccountantReport, DecompTree, DerivedNoiseParams,
    DistanceMatrix, NoiseMode, NoiseSetting, QueryContext, ShortcutTable, WeightedGraph,
};
use serde::Serialize;

use crate::config::{ExperimentConfig, Mechanism};
use crate::generate::{generate_graph, GenerateError};
use crate::metrics::{error_stats, median};

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
    #[error(transparent)]
    Generate(#[from] GenerateError),
    #[error(transparent)]
    Decomposition(#[from] sepapsd_core::DecompError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// One run. Every field is a function of the configuration and the seed,
/// so rows reproduce bit for bit; wall-clock times live in the metadata.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedRow {
    pub seed: u64,
    pub mechanism: &'static str,
    pub family: &'static str,
    pub n: usize,
    pub h: usize,
    pub k: usize,
    pub status: String,
    pub pairs: usize,
    pub max_error: f64,
    pub mean_error: f64,
    pub p50_error: f64,
    pub p95_error: f64,
    pub entries: usize,
    pub within_entries: usize,
    pub cross_entries: usize,
    pub leaf_entries: usize,
}

impl SeedRow {
    pub fn ok(&self) -> bool {
        self.status == "ok"
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRow {
    pub mechanism: &'static str,
    pub family: &'static str,
    pub n: usize,
    pub h: usize,
    pub k: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub mode: &'static str,
    pub seeds: usize,
    pub failed_seeds: usize,
    pub median_max_error: f64,
    pub median_mean_error: f64,
    /// High-probability bound `2(ζ₁ + hζ₂)` on the max error (plus the
    /// deterministic `2hkW` covering slack); NaN when not applicable.
    pub envelope: f64,
    pub seeds_over_envelope: usize,
    pub accountant_passed: bool,
}

/// Run header written to `meta.json`.
#[derive(Debug, Clone, Serialize)]
pub struct RunMeta {
    pub config: serde_json::Value,
    pub graph_vertices: usize,
    pub graph_edges: usize,
    pub strategy: String,
    pub h: usize,
    pub tree: Option<TreeSummary>,
    pub noise: Option<DerivedNoiseParams>,
    pub releases_per_edge: usize,
    pub accountant: Option<AccountantReport>,
    pub seconds_per_seed: Vec<f64>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TreeSummary {
    pub nodes: usize,
    pub depth: usize,
    pub max_separator: usize,
    pub max_leaf: usize,
    pub max_edge_multiplicity: usize,
    pub validation_passed: bool,
    pub violations: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub rows: Vec<SeedRow>,
    pub aggregate: AggregateRow,
    pub meta: RunMeta,
    /// Shortcut table of the first seed, for the optional audit dump.
    pub first_table: Option<String>,
}

impl ExperimentReport {
    pub fn max_errors(&self) -> Vec<f64> {
        self.rows.iter().filter(|r| r.ok()).map(|r| r.max_error).collect()
    }
}

const ZERO_NOISE_WARNING: &str = "zero-noise debug mode: every noise scale is 0 and the output is NOT private";

fn config_echo(cfg: &ExperimentConfig) -> serde_json::Value {
    serde_json::json!({
        "graph": cfg.graph,
        "graph_seed": cfg.graph_seed,
        "mechanism": cfg.mechanism,
        "params": cfg.params,
        "strategy": cfg.strategy().name(),
        "k": cfg.k,
        "budget": cfg.budget,
        "seeds": cfg.seeds,
        "zero_noise": cfg.zero_noise,
        "gamma": cfg.gamma,
    })
}

/// Runs the configured experiment in memory.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport, ExperimentError> {
    cfg.validate()?;
    let g = generate_graph(&cfg.graph, cfg.graph_seed)?;
    run_on_graph(cfg, &g)
}

/// Runs the configured mechanism on a given graph (the graph spec only
/// names the family and `W`).
pub fn run_on_graph(cfg: &ExperimentConfig, g: &WeightedGraph) -> Result<ExperimentReport, ExperimentError> {
    let mut warnings = Vec::new();
    if cfg.zero_noise {
        log::warn!("{ZERO_NOISE_WARNING}");
        warnings.push(ZERO_NOISE_WARNING.to_string());
    }
    let exact = exact_apsd(g);
    let strategy = cfg.strategy();
    let h = cfg.params.depth_bound(g.n());
    let k = if cfg.mechanism == Mechanism::Covering { cfg.resolve_k(g.n()) } else { 0 };
    let noise = if cfg.zero_noise { NoiseSetting::Zero } else { NoiseSetting::Calibrated };

    let tree = match cfg.mechanism {
        Mechanism::General | Mechanism::Covering => Some(build_tree(g, &cfg.params, &strategy)?),
        _ => None,
    };
    let tree_summary = tree.as_ref().map(|t| summarize(g, t));
    let releases_per_edge = match &tree {
        Some(t) => max_releases_per_edge(g, t),
        None if cfg.mechanism == Mechanism::EdgeNoise => 1,
        None => 0,
    };

    let mut rows = Vec::new();
    let mut seconds = Vec::new();
    let mut params: Option<DerivedNoiseParams> = None;
    let mut first_table = None;
    for &seed in &cfg.seeds {
        let start = Instant::now();
        let outcome = estimate(cfg, g, tree.as_ref(), &exact, k, noise, seed);
        seconds.push(start.elapsed().as_secs_f64());
        let mut row = SeedRow {
            seed,
            mechanism: cfg.mechanism.name(),
            family: cfg.graph.family.name(),
            n: g.n(),
            h,
            k,
            status: "ok".into(),
            pairs: 0,
            max_error: f64::NAN,
            mean_error: f64::NAN,
            p50_error: f64::NAN,
            p95_error: f64::NAN,
            entries: 0,
            within_entries: 0,
            cross_entries: 0,
            leaf_entries: 0,
        };
        match outcome {
            Ok((est, table)) => {
                if let Some(table) = &table {
                    row.entries = table.len();
                    [row.within_entries, row.cross_entries, row.leaf_entries] = table.counts;
                    params.get_or_insert(table.params);
                    if first_table.is_none() {
                        first_table = Some(table.to_csv());
                    }
                }
                match error_stats(&est, &exact) {
                    Ok(s) => {
                        row.pairs = s.pairs;
                        row.max_error = s.max;
                        row.mean_error = s.mean;
                        row.p50_error = s.p50;
                        row.p95_error = s.p95;
                    }
                    Err(e) => row.status = format!("error: {e}"),
                }
            }
            Err(e) => row.status = format!("error: {e}"),
        }
        rows.push(row);
    }

    let accountant = match cfg.mechanism {
        Mechanism::General | Mechanism::Covering => params.map(|p| accountant_check(&p, &cfg.budget, releases_per_edge)),
        Mechanism::EdgeNoise => {
            // one Laplace release of the weight vector, ℓ1 sensitivity 1
            let (eps_total, delta_total) = basic_composition(1, cfg.budget.epsilon, 0.0);
            Some(AccountantReport {
                passed: eps_total <= cfg.budget.epsilon && delta_total <= cfg.budget.delta,
                mode: NoiseMode::PureLaplace,
                releases_per_edge: 1,
                eps_total,
                delta_total,
                delta_slack: 0.0,
                epsilon: cfg.budget.epsilon,
                delta: cfg.budget.delta,
            })
        }
        Mechanism::Exact => None,
    };
    let envelope = match (&params, &tree) {
        (Some(p), Some(t)) => {
            let slack = 2.0 * t.h as f64 * k as f64 * cfg.graph.weights.cap();
            error_envelope(p, t.max_separator() as f64, cfg.params.c as f64, cfg.gamma) + slack
        }
        _ => f64::NAN,
    };
    let ok: Vec<&SeedRow> = rows.iter().filter(|r| r.ok()).collect();
    let maxima: Vec<f64> = ok.iter().map(|r| r.max_error).collect();
    let means: Vec<f64> = ok.iter().map(|r| r.mean_error).collect();
    let aggregate = AggregateRow {
        mechanism: cfg.mechanism.name(),
        family: cfg.graph.family.name(),
        n: g.n(),
        h,
        k,
        epsilon: cfg.budget.epsilon,
        delta: cfg.budget.delta,
        mode: match cfg.budget.mode {
            NoiseMode::ApproximateGaussian => "approximate",
            NoiseMode::PureLaplace => "pure",
        },
        seeds: rows.len(),
        failed_seeds: rows.len() - ok.len(),
        median_max_error: median(&maxima),
        median_mean_error: median(&means),
        envelope,
        seeds_over_envelope: maxima.iter().filter(|&&m| envelope.is_finite() && m > envelope).count(),
        accountant_passed: accountant.map_or(true, |a| a.passed),
    };
    let meta = RunMeta {
        config: config_echo(cfg),
        graph_vertices: g.n(),
        graph_edges: g.edge_count(),
        strategy: strategy.name().to_string(),
        h,
        tree: tree_summary,
        noise: params,
        releases_per_edge,
        accountant,
        seconds_per_seed: seconds,
        warnings,
    };
    Ok(ExperimentReport {
        rows,
        aggregate,
        meta,
        first_table,
    })
}

type Estimate = (DistanceMatrix, Option<ShortcutTable>);

fn estimate(
    cfg: &ExperimentConfig,
    g: &WeightedGraph,
    tree: Option<&DecompTree>,
    exact: &DistanceMatrix,
    k: usize,
    noise: NoiseSetting,
    seed: u64,
) -> Result<Estimate, String> {
    let table = match (cfg.mechanism, tree) {
        (Mechanism::Exact, _) => return Ok((exact.clone(), None)),
        (Mechanism::EdgeNoise, _) => {
            let scale = cfg.zero_noise.then_some(0.0);
            let r = edge_noise_apsd_with_scale(g, &cfg.budget, seed, scale).map_err(|e| e.to_string())?;
            return Ok((r.estimate, None));
        }
        (Mechanism::General, Some(t)) => build_shortcuts_general(g, t, &cfg.budget, seed, noise),
        (Mechanism::Covering, Some(t)) => build_shortcuts_covering(g, t, &cfg.budget, k, seed, noise),
        (_, None) => unreachable!("tree mechanisms always build a tree"),
    }
    .map_err(|e| e.to_string())?;
    let t = tree.expect("tree mechanism");
    let est = apsd_all(&QueryContext::new(t, &table));
    Ok((est, Some(table)))
}

fn summarize(g: &WeightedGraph, t: &DecompTree) -> TreeSummary {
    let report = validate_tree(g, t);
    TreeSummary {
        nodes: t.len(),
        depth: t.depth(),
        max_separator: t.max_separator(),
        max_leaf: t.max_leaf(),
        max_edge_multiplicity: report.max_edge_multiplicity,
        validation_passed: report.passed(),
        violations: report.violations.iter().map(|f| f.to_string()).collect(),
    }
}

/// Writes `report.csv`, `aggregate.csv`, `meta.json` and, when asked,
/// `shortcuts.csv` (the first seed's table) into `dir`.
pub fn write_report(report: &ExperimentReport, dir: &Path, dump_shortcuts: bool) -> Result<(), ExperimentError> {
    std::fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join("report.csv"))?;
    for row in &report.rows {
        w.serialize(row)?;
    }
    w.flush()?;
    let mut w = csv::Writer::from_path(dir.join("aggregate.csv"))?;
    w.serialize(&report.aggregate)?;
    w.flush()?;
    std::fs::write(dir.join("meta.json"), serde_json::to_string_pretty(&report.meta)?)?;
    if dump_shortcuts {
        if let Some(table) = &report.first_table {
            std::fs::write(dir.join("shortcuts.csv"), table)?;
        }
    }
    Ok(())
}
