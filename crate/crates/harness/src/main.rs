// SPDX-License-Identifier: Apache-2.0

//! `sepapsd`: generate graphs, build and query private distance releases,
//! run experiments and validate decomposition trees.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use sepapsd_core::{
    accountant_check, apsd_all, build_shortcuts_covering, build_shortcuts_general, build_tree, max_releases_per_edge,
    query_pair, validate_tree, DecompTree, DerivedNoiseParams, NoiseMode, NoiseSetting, PrivacyBudget, QueryContext,
    SeparatorStrategy, ShortcutTable, TreeDecomposition, TreeParams, Variant, WeightedGraph,
};
use sepapsd_harness::config::{parse_pairs, parse_shape, planar_k};
use sepapsd_harness::generate::auto_strategy;
use sepapsd_harness::{generate_graph, run_experiment, run_on_graph, write_report, ExperimentConfig, Family, GraphSpec, Weights};
use serde::{Deserialize, Serialize};

const ZERO_NOISE_BANNER: &str = "WARNING: --zero-noise disables all noise. The output is NOT differentially private \
                                 and exists only for debugging.";

#[derive(Parser)]
#[command(name = "sepapsd", version, about = "Differentially private all-pairs shortest distances")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a graph and write it in the text edge-list format.
    Generate(GenerateArgs),
    /// Build the decomposition tree and the noisy shortcut table.
    Build(BuildArgs),
    /// Answer one pair from a persisted build.
    Query(QueryArgs),
    /// Run an experiment described by a config file.
    Experiment(ExperimentArgs),
    /// Check a decomposition tree against a graph.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// path, random-tree, grid or subgrid-planar
    #[arg(long)]
    family: Family,
    /// Vertex count (paths and trees).
    #[arg(long)]
    n: Option<usize>,
    /// Grid shape AxB (grid families).
    #[arg(long)]
    shape: Option<String>,
    /// unit or uniform
    #[arg(long, default_value = "unit")]
    weights: String,
    /// Weight cap W for uniform weights.
    #[arg(long, default_value_t = 1.0)]
    cap: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BuildArgs {
    #[arg(long)]
    graph: PathBuf,
    /// general or covering
    #[arg(long, default_value = "general")]
    mechanism: String,
    #[arg(long, default_value_t = 1.0)]
    epsilon: f64,
    #[arg(long, default_value_t = 1e-6)]
    delta: f64,
    /// approximate (Gaussian) or pure (Laplace)
    #[arg(long, default_value = "approximate")]
    mode: NoiseMode,
    /// Covering radius; defaults to round(n^{1/3}/(εW)^{2/3}).
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 4)]
    leaf_size: usize,
    /// Separator strategy; chosen from the topology when omitted.
    #[arg(long)]
    strategy: Option<String>,
    /// Tree decomposition file for the supplied-tree-decomposition strategy.
    #[arg(long)]
    tree_decomposition: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Debug only: force every noise scale to 0.
    #[arg(long)]
    zero_noise: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct QueryArgs {
    /// Directory written by `build`.
    #[arg(long, default_value = ".")]
    build: PathBuf,
    s: usize,
    t: usize,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    /// Run on this graph file instead of generating one from the config.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Run only this seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    mechanism: Option<String>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    leaf_size: Option<usize>,
    #[arg(long)]
    strategy: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Debug only: force every noise scale to 0.
    #[arg(long)]
    zero_noise: bool,
    /// Also write the first seed's shortcut table.
    #[arg(long)]
    dump_shortcuts: bool,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    tree: PathBuf,
}

/// Everything `query` needs besides the graph topology and the tree.
#[derive(Serialize, Deserialize)]
struct BuildHeader {
    variant: Variant,
    noise: NoiseSetting,
    params: DerivedNoiseParams,
    budget: PrivacyBudget,
    seed: u64,
    strategy: String,
    accountant_passed: bool,
    releases_per_edge: usize,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Generate(a) => generate(a),
        Command::Build(a) => build(a),
        Command::Query(a) => query(a),
        Command::Experiment(a) => experiment(a),
        Command::Validate(a) => validate(a),
    }
}

fn generate(a: GenerateArgs) -> Result<ExitCode> {
    let weights = Weights::parse(&a.weights, a.cap)?;
    let spec = match a.family {
        Family::Path | Family::RandomTree => {
            let n = a.n.context("--n is required for paths and trees")?;
            if a.family == Family::Path {
                GraphSpec::path(n, weights)
            } else {
                GraphSpec::random_tree(n, weights)
            }
        }
        Family::Grid | Family::SubgridPlanar => {
            let shape = a.shape.context("--shape AxB is required for grids")?;
            let (rows, cols) = parse_shape(&shape).context("--shape must look like 8x8")?;
            if let Some(n) = a.n {
                if n != rows * cols {
                    bail!("--n {n} does not match --shape {shape}");
                }
            }
            if a.family == Family::Grid {
                GraphSpec::grid(rows, cols, weights)
            } else {
                GraphSpec::subgrid_planar(rows, cols, weights)
            }
        }
    };
    let g = generate_graph(&spec, a.seed)?;
    g.write(&a.out).with_context(|| format!("writing {}", a.out.display()))?;
    println!("wrote {} ({} vertices, {} edges)", a.out.display(), g.n(), g.edge_count());
    Ok(ExitCode::SUCCESS)
}

fn read_graph(path: &Path) -> Result<WeightedGraph> {
    WeightedGraph::read(path).with_context(|| format!("reading graph {}", path.display()))
}

fn build(a: BuildArgs) -> Result<ExitCode> {
    let g = read_graph(&a.graph)?;
    let strategy = match (&a.strategy, &a.tree_decomposition) {
        (_, Some(path)) => SeparatorStrategy::SuppliedTreeDecomposition(
            TreeDecomposition::read(path).map_err(anyhow::Error::msg).context("reading tree decomposition")?,
        ),
        (Some(name), None) => name.parse().map_err(anyhow::Error::msg)?,
        (None, None) => auto_strategy(&g),
    };
    let budget = match a.mode {
        NoiseMode::ApproximateGaussian => PrivacyBudget::approximate(a.epsilon, a.delta),
        NoiseMode::PureLaplace => PrivacyBudget::pure(a.epsilon),
    };
    if a.zero_noise {
        eprintln!("{ZERO_NOISE_BANNER}");
    }
    let noise = if a.zero_noise { NoiseSetting::Zero } else { NoiseSetting::Calibrated };
    let tree = build_tree(&g, &TreeParams::with_leaf_size(a.leaf_size), &strategy)?;
    let table = match a.mechanism.as_str() {
        "general" => build_shortcuts_general(&g, &tree, &budget, a.seed, noise)?,
        "covering" => {
            let w = g.weight_cap().context("the covering mechanism needs a graph with a weight cap")?;
            let k = a.k.unwrap_or_else(|| planar_k(g.n(), w, a.epsilon));
            build_shortcuts_covering(&g, &tree, &budget, k, a.seed, noise)?
        }
        other => bail!("unknown mechanism `{other}` (expected general or covering)"),
    };
    let releases = max_releases_per_edge(&g, &tree);
    let accountant = accountant_check(&table.params, &budget, releases);
    if !accountant.passed {
        log::warn!("composition accountant failed: {accountant:?}");
    }
    let estimate = apsd_all(&QueryContext::new(&tree, &table));

    std::fs::create_dir_all(&a.out)?;
    g.write(a.out.join("graph.txt"))?;
    std::fs::write(a.out.join("tree.json"), tree.to_json())?;
    std::fs::write(a.out.join("shortcuts.csv"), table.to_csv())?;
    std::fs::write(a.out.join("estimate.csv"), estimate.to_csv())?;
    let header = BuildHeader {
        variant: table.variant,
        noise,
        params: table.params,
        budget,
        seed: a.seed,
        strategy: strategy.name().to_string(),
        accountant_passed: accountant.passed,
        releases_per_edge: releases,
    };
    std::fs::write(a.out.join("build.json"), serde_json::to_string_pretty(&header)?)?;
    println!(
        "built {} ({} nodes, h = {}, {} shortcuts) into {}",
        table.variant.name(),
        tree.len(),
        tree.h,
        table.len(),
        a.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn query(a: QueryArgs) -> Result<ExitCode> {
    let dir = &a.build;
    let g = read_graph(&dir.join("graph.txt"))?;
    let tree = DecompTree::from_json(&g, &std::fs::read_to_string(dir.join("tree.json"))?)?;
    let header: BuildHeader = serde_json::from_str(&std::fs::read_to_string(dir.join("build.json"))?)?;
    let table = ShortcutTable::from_csv(
        &g,
        &tree,
        header.variant,
        header.noise,
        header.params,
        header.seed,
        &std::fs::read_to_string(dir.join("shortcuts.csv"))?,
    )?;
    let mut ctx = QueryContext::new(&tree, &table);
    let d = query_pair(&mut ctx, a.s, a.t)?;
    println!("{}", if d.is_infinite() { "inf".to_string() } else { d.to_string() });
    Ok(ExitCode::SUCCESS)
}

fn experiment(a: ExperimentArgs) -> Result<ExitCode> {
    let text = std::fs::read_to_string(&a.config).with_context(|| format!("reading {}", a.config.display()))?;
    let mut pairs = parse_pairs(&text)?;
    let mut set = |key: &str, value: String| pairs.push((key.to_string(), value));
    if let Some(v) = a.seed {
        set("seeds", v.to_string());
    }
    if let Some(v) = a.mechanism {
        set("mechanism", v);
    }
    if let Some(v) = a.epsilon {
        set("epsilon", v.to_string());
    }
    if let Some(v) = a.delta {
        set("delta", v.to_string());
    }
    if let Some(v) = a.mode {
        set("mode", v);
    }
    if let Some(v) = a.k {
        set("k", v);
    }
    if let Some(v) = a.leaf_size {
        set("c", v.to_string());
    }
    if let Some(v) = a.strategy {
        set("strategy", v);
    }
    if let Some(v) = &a.out {
        set("out", v.display().to_string());
    }
    if a.zero_noise {
        set("zero_noise", "true".into());
    }
    if a.dump_shortcuts {
        set("dump_shortcuts", "true".into());
    }
    let mut cfg = ExperimentConfig::from_pairs(&pairs)?;
    let graph = a.graph.as_deref().map(read_graph).transpose()?;
    if let (Some(g), None) = (&graph, &cfg.strategy) {
        cfg.strategy = Some(auto_strategy(g));
    }
    if cfg.zero_noise {
        eprintln!("{ZERO_NOISE_BANNER}");
    }
    let report = match &graph {
        Some(g) => run_on_graph(&cfg, g)?,
        None => run_experiment(&cfg)?,
    };
    write_report(&report, &cfg.out, cfg.dump_shortcuts)?;
    let agg = &report.aggregate;
    println!(
        "{} on {} (n = {}): median max error {:.4} over {} seeds ({} failed), envelope {:.4}, accountant {}",
        agg.mechanism,
        agg.family,
        agg.n,
        agg.median_max_error,
        agg.seeds,
        agg.failed_seeds,
        agg.envelope,
        if agg.accountant_passed { "passed" } else { "FAILED" }
    );
    println!("reports written to {}", cfg.out.display());
    Ok(ExitCode::SUCCESS)
}

fn validate(a: ValidateArgs) -> Result<ExitCode> {
    let g = read_graph(&a.graph)?;
    let text = std::fs::read_to_string(&a.tree).with_context(|| format!("reading {}", a.tree.display()))?;
    let tree = DecompTree::from_json(&g, &text)?;
    let report = validate_tree(&g, &tree);
    println!("{report}");
    println!("{}", if report.passed() { "PASSED" } else { "FAILED" });
    Ok(if report.passed() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}
