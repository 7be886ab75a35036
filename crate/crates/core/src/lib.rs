// SPDX-License-Identifier: Apache-2.0

//! Differentially private all-pairs shortest distances on recursively
//! separable graphs.
//!
//! The pipeline is: build a separator decomposition tree from the public
//! topology ([`decomposition`]), release noisy distances between separator
//! vertices and inside leaves ([`shortcuts`]), then reconstruct every pair
//! by post-processing ([`apsd`]). [`covering`] supplies the k-covering
//! refinement that shrinks the released separator sets, [`privacy`] holds
//! the samplers and the composition accountant, and [`baselines`] the
//! edge-noise comparison mechanism.

pub mod apsd;
pub mod baselines;
pub mod covering;
pub mod decomposition;
pub mod graph;
pub mod privacy;
pub mod shortcuts;
mod treedec;

pub use apsd::{apsd_all, query_pair, recursive_apsd, ApsdError, QueryContext};
pub use baselines::{edge_noise_apsd, BaselineResult};
pub use covering::{
    cluster_partition, contract_clusters, greedy_k_covering, separator_covering, ClusterPartition, Covering,
};
pub use decomposition::{
    build_tree, find_separator, validate_tree, DecompError, DecompNode, DecompTree, SeparatorResult,
    SeparatorStrategy, TreeParams, ValidationReport,
};
pub use graph::{
    exact_apsd, exact_subgraph_apsd, hop_ball, make_neighbor, DistanceMatrix, GraphError, NeighborEdit,
    Subgraph, Vertex, WeightedGraph,
};
pub use privacy::{
    accountant_check, advanced_composition_bound, derive_noise_params, basic_composition, error_envelope, sample_gaussian, sample_laplace,
    AccountantReport, DerivedNoiseParams, NoiseMode, PrivacyBudget, PrivacyError, ReleaseKind, RngStream,
};
pub use shortcuts::{
    build_shortcuts_covering, build_shortcuts_general, lookup, max_releases_per_edge, NoiseSetting, ShortcutError, ShortcutTable,
    Variant,
};
pub use treedec::TreeDecomposition;
