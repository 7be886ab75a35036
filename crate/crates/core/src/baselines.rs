// SPDX-License-Identifier: Apache-2.0

//! The edge-noise baseline: perturb every edge weight with Laplace noise,
//! then answer all pairs exactly on the perturbed graph.

use crate::graph::{exact_apsd, DistanceMatrix, WeightedGraph};
use crate::privacy::{sample_laplace, PrivacyBudget, PrivacyError, ReleaseKind, RngStream};

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineResult {
    pub estimate: DistanceMatrix,
    pub mechanism: &'static str,
    pub budget: PrivacyBudget,
    pub seed: u64,
}

/// Adds `Lap(1/ε)` to each weight (ℓ1 sensitivity of the weight vector is
/// 1, so this is ε-DP), clamps negative results to 0 so Dijkstra applies,
/// and returns the exact APSD of the noisy graph. `noise_scale_override`
/// replaces `1/ε` and exists for tests of the limit behaviour.
pub fn edge_noise_apsd_with_scale(
    g: &WeightedGraph,
    budget: &PrivacyBudget,
    seed: u64,
    noise_scale_override: Option<f64>,
) -> Result<BaselineResult, PrivacyError> {
    if !(budget.epsilon > 0.0 && budget.epsilon.is_finite()) {
        return Err(PrivacyError::Epsilon(budget.epsilon));
    }
    let scale = noise_scale_override.unwrap_or(1.0 / budget.epsilon);
    let mut stream = RngStream::new(seed, "edge-noise", ReleaseKind::EdgeNoise);
    let mut weights = Vec::with_capacity(g.edge_count());
    for e in g.edges() {
        let noise = if scale == 0.0 { 0.0 } else { sample_laplace(scale, &mut stream)? };
        weights.push((e.w + noise).max(0.0));
    }
    let noisy = g
        .with_weights(&weights, None)
        .expect("clamped finite weights are valid");
    Ok(BaselineResult {
        estimate: exact_apsd(&noisy),
        mechanism: "edge-noise",
        budget: *budget,
        seed,
    })
}

pub fn edge_noise_apsd(g: &WeightedGraph, budget: &PrivacyBudget, seed: u64) -> Result<BaselineResult, PrivacyError> {
    edge_noise_apsd_with_scale(g, budget, seed, None)
}
