// SPDX-License-Identifier: Apache-2.0

//! Experiment configuration in a flat `key = value` text format.
//!
//! ```text
//! # comment
//! family = grid
//! shape = 64x64
//! weights = unit
//! mechanism = covering
//! k = auto
//! epsilon = 1
//! delta = 1e-6
//! seeds = 0..10
//! ```

use std::path::PathBuf;
use std::str::FromStr;

use sepapsd_core::{NoiseMode, PrivacyBudget, SeparatorStrategy, TreeParams};
use serde::{Deserialize, Serialize};

use crate::generate::{Family, GraphSpec, Weights};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("bad value for `{key}`: {msg}")]
    Value { key: String, msg: String },
    #[error("missing key `{0}`")]
    Missing(&'static str),
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mechanism {
    Exact,
    General,
    Covering,
    EdgeNoise,
}

impl Mechanism {
    pub fn name(self) -> &'static str {
        match self {
            Mechanism::Exact => "exact",
            Mechanism::General => "general",
            Mechanism::Covering => "covering",
            Mechanism::EdgeNoise => "edge-noise",
        }
    }
}

impl FromStr for Mechanism {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "exact" => Ok(Mechanism::Exact),
            "general" => Ok(Mechanism::General),
            "covering" => Ok(Mechanism::Covering),
            "edge-noise" => Ok(Mechanism::EdgeNoise),
            other => Err(format!("unknown mechanism `{other}`")),
        }
    }
}

/// The covering radius: fixed, or derived from `n`, `W` and `ε`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KChoice {
    Auto,
    Fixed(usize),
}

impl FromStr for KChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "auto" {
            return Ok(KChoice::Auto);
        }
        s.parse().map(KChoice::Fixed).map_err(|_| format!("expected `auto` or an integer, got `{s}`"))
    }
}

/// Grid rule `k = round(n^{1/4} / √(W·ε))`, at least 1.
pub fn grid_k(n: usize, w: f64, epsilon: f64) -> usize {
    ((n as f64).powf(0.25) / (w * epsilon).sqrt()).round().max(1.0) as usize
}

/// Planar / minor-free rule `k = round(n^{1/3} / (ε·W)^{2/3})`, at least 1.
pub fn planar_k(n: usize, w: f64, epsilon: f64) -> usize {
    ((n as f64).cbrt() / (epsilon * w).powf(2.0 / 3.0)).round().max(1.0) as usize
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub graph: GraphSpec,
    /// Seed of the graph itself; the same graph is used for every run seed.
    pub graph_seed: u64,
    pub mechanism: Mechanism,
    pub params: TreeParams,
    /// `None` picks the family's strategy.
    pub strategy: Option<SeparatorStrategy>,
    pub k: KChoice,
    pub budget: PrivacyBudget,
    pub seeds: Vec<u64>,
    pub out: PathBuf,
    /// Debug only: all noise scales forced to 0, output is not private.
    pub zero_noise: bool,
    /// Failure probability of the reported error envelope.
    pub gamma: f64,
    /// Also write the first seed's shortcut table as `shortcuts.csv`.
    pub dump_shortcuts: bool,
}

impl ExperimentConfig {
    pub fn new(graph: GraphSpec, mechanism: Mechanism, budget: PrivacyBudget, seeds: Vec<u64>) -> Self {
        ExperimentConfig {
            graph,
            graph_seed: 0,
            mechanism,
            params: TreeParams::default(),
            strategy: None,
            k: KChoice::Auto,
            budget,
            seeds,
            out: PathBuf::from("out"),
            zero_noise: false,
            gamma: 0.01,
            dump_shortcuts: false,
        }
    }

    pub fn strategy(&self) -> SeparatorStrategy {
        self.strategy.clone().unwrap_or_else(|| self.graph.family.strategy())
    }

    /// The covering radius for this configuration on a graph of `n`
    /// vertices.
    pub fn resolve_k(&self, n: usize) -> usize {
        match self.k {
            KChoice::Fixed(k) => k,
            KChoice::Auto => {
                let w = self.graph.weights.cap();
                match self.graph.family {
                    Family::Grid => grid_k(n, w, self.budget.epsilon),
                    _ => planar_k(n, w, self.budget.epsilon),
                }
            }
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.params.check().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.budget.check().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.seeds.is_empty() {
            return Err(ConfigError::Invalid("no seeds".into()));
        }
        if self.mechanism == Mechanism::Covering {
            if !(self.graph.weights.cap() > 0.0) {
                return Err(ConfigError::Invalid("the covering mechanism needs a weight cap W > 0".into()));
            }
            if self.k == KChoice::Fixed(0) {
                return Err(ConfigError::Invalid("the covering mechanism needs k ≥ 1".into()));
            }
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(ConfigError::Invalid(format!("gamma must lie in (0, 1), got {}", self.gamma)));
        }
        Ok(())
    }

    pub fn read(path: impl AsRef<std::path::Path>) -> Result<Self, ConfigError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Self::from_pairs(&parse_pairs(text)?)
    }

    /// Builds a configuration from `(key, value)` pairs; later pairs win.
    pub fn from_pairs(pairs: &[(String, String)]) -> Result<Self, ConfigError> {
        let get = |key: &str| pairs.iter().rev().find(|(k, _)| k == key).map(|(_, v)| v.as_str());
        for (key, _) in pairs {
            if !KEYS.contains(&key.as_str()) {
                return Err(ConfigError::UnknownKey(key.clone()));
            }
        }
        let family: Family = parse_value("family", get("family").ok_or(ConfigError::Missing("family"))?)?;
        let cap: f64 = get("cap").map(|v| parse_value("cap", v)).transpose()?.unwrap_or(1.0);
        let weights = Weights::parse(get("weights").unwrap_or("unit"), cap).map_err(|e| value_error("weights", e))?;
        let graph = match family {
            Family::Path | Family::RandomTree => {
                let n: usize = parse_value("n", get("n").ok_or(ConfigError::Missing("n"))?)?;
                if family == Family::Path {
                    GraphSpec::path(n, weights)
                } else {
                    GraphSpec::random_tree(n, weights)
                }
            }
            Family::Grid | Family::SubgridPlanar => {
                let shape = get("shape").ok_or(ConfigError::Missing("shape"))?;
                let (rows, cols) = parse_shape(shape).ok_or_else(|| value_error("shape", "expected AxB"))?;
                if let Some(n) = get("n") {
                    let n: usize = parse_value("n", n)?;
                    if n != rows * cols {
                        return Err(value_error("n", format!("{n} does not match shape {rows}x{cols}")));
                    }
                }
                if family == Family::Grid {
                    GraphSpec::grid(rows, cols, weights)
                } else {
                    GraphSpec::subgrid_planar(rows, cols, weights)
                }
            }
        };
        let mechanism: Mechanism = parse_value("mechanism", get("mechanism").unwrap_or("general"))?;
        let epsilon: f64 = parse_value("epsilon", get("epsilon").unwrap_or("1"))?;
        let mode: NoiseMode = parse_value("mode", get("mode").unwrap_or("approximate"))?;
        let budget = match mode {
            NoiseMode::ApproximateGaussian => {
                PrivacyBudget::approximate(epsilon, parse_value("delta", get("delta").unwrap_or("1e-6"))?)
            }
            NoiseMode::PureLaplace => PrivacyBudget::pure(epsilon),
        };
        let seeds = parse_seeds(get("seeds").unwrap_or("0")).ok_or_else(|| value_error("seeds", "expected A..B or a comma list"))?;
        let mut cfg = ExperimentConfig::new(graph, mechanism, budget, seeds);
        if let Some(v) = get("graph_seed") {
            cfg.graph_seed = parse_value("graph_seed", v)?;
        }
        if let Some(v) = get("c") {
            cfg.params.c = parse_value("c", v)?;
        }
        if let Some(v) = get("q") {
            cfg.params.q = parse_value("q", v)?;
        }
        if let Some(v) = get("q_prime") {
            cfg.params.q_prime = parse_value("q_prime", v)?;
        }
        if let Some(v) = get("p") {
            cfg.params.p = parse_value("p", v)?;
        }
        if let Some(v) = get("strategy") {
            cfg.strategy = Some(parse_value("strategy", v)?);
        }
        if let Some(v) = get("k") {
            cfg.k = parse_value("k", v)?;
        }
        if let Some(v) = get("out") {
            cfg.out = PathBuf::from(v);
        }
        if let Some(v) = get("zero_noise") {
            cfg.zero_noise = parse_value("zero_noise", v)?;
        }
        if let Some(v) = get("gamma") {
            cfg.gamma = parse_value("gamma", v)?;
        }
        if let Some(v) = get("dump_shortcuts") {
            cfg.dump_shortcuts = parse_value("dump_shortcuts", v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// The `(key, value)` lines of a configuration text, in order.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line: i + 1,
            msg: "expected `key = value`".into(),
        })?;
        pairs.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(pairs)
}

const KEYS: &[&str] = &[
    "family",
    "n",
    "shape",
    "weights",
    "cap",
    "graph_seed",
    "mechanism",
    "c",
    "q",
    "q_prime",
    "p",
    "strategy",
    "k",
    "epsilon",
    "delta",
    "mode",
    "seeds",
    "out",
    "zero_noise",
    "gamma",
    "dump_shortcuts",
];

fn value_error(key: &str, msg: impl ToString) -> ConfigError {
    ConfigError::Value {
        key: key.into(),
        msg: msg.to_string(),
    }
}

fn parse_value<T: FromStr>(key: &str, v: &str) -> Result<T, ConfigError>
where
    T::Err: ToString,
{
    v.parse::<T>().map_err(|e| value_error(key, e))
}

/// `AxB` (or `A×B`) into `(A, B)`.
pub fn parse_shape(s: &str) -> Option<(usize, usize)> {
    let (a, b) = s.split_once('x').or_else(|| s.split_once('×'))?;
    Some((a.trim().parse().ok()?, b.trim().parse().ok()?))
}

/// `A..B` (half-open) or a comma-separated list.
pub fn parse_seeds(s: &str) -> Option<Vec<u64>> {
    if let Some((a, b)) = s.split_once("..") {
        let (a, b): (u64, u64) = (a.trim().parse().ok()?, b.trim().parse().ok()?);
        return (a < b).then(|| (a..b).collect());
    }
    s.split(',').map(|x| x.trim().parse().ok()).collect()
}
