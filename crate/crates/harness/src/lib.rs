// SPDX-License-Identifier: Apache-2.0

//! Graph generators, the experiment runner and error metrics behind the
//! `sepapsd` command-line tool.

pub mod config;
pub mod experiment;
pub mod generate;
pub mod metrics;

pub use config::{ExperimentConfig, KChoice, Mechanism};
pub use experiment::{run_experiment, run_on_graph, write_report, AggregateRow, ExperimentReport, SeedRow};
pub use generate::{generate_graph, Family, GraphSpec, Weights};
pub use metrics::{error_stats, median, ErrorStats};
