// SPDX-License-Identifier: Apache-2.0

//! Noise samplers, per-release noise calibration and composition
//! accounting.
//!
//! Approximate mode splits `(ε, δ)` over `2h` Gaussian releases per edge
//! with advanced composition: `δ′ = δ/(4h)`, `ε′ = ε/√(4h·ln(1/δ′))` and
//! `σ = Δ·√(2·ln(1.25/δ′))/ε′`. Pure mode splits `ε` evenly over the same
//! `2h` releases with basic composition and uses Laplace noise. All
//! logarithms are natural.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PrivacyError {
    #[error("epsilon must be positive and finite, got {0}")]
    Epsilon(f64),
    #[error("delta must be in (0, 1) for approximate DP, got {0}")]
    Delta(f64),
    #[error("depth bound h must be at least 1")]
    Depth,
    #[error("sensitivity must be at least 1, got {0}")]
    Sensitivity(f64),
    #[error("noise scale must be positive and finite, got {0}")]
    Scale(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseMode {
    ApproximateGaussian,
    PureLaplace,
}

impl std::str::FromStr for NoiseMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "approximate-gaussian" | "approximate" | "gaussian" => Ok(NoiseMode::ApproximateGaussian),
            "pure-laplace" | "laplace" | "pure" => Ok(NoiseMode::PureLaplace),
            other => Err(format!("unknown noise mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyBudget {
    pub epsilon: f64,
    pub delta: f64,
    pub mode: NoiseMode,
}

impl PrivacyBudget {
    pub fn approximate(epsilon: f64, delta: f64) -> Self {
        PrivacyBudget {
            epsilon,
            delta,
            mode: NoiseMode::ApproximateGaussian,
        }
    }

    pub fn pure(epsilon: f64) -> Self {
        PrivacyBudget {
            epsilon,
            delta: 0.0,
            mode: NoiseMode::PureLaplace,
        }
    }

    /// Rejects budgets that make the formulas meaningless; budgets at or
    /// above 1 are accepted with a warning since sweeps routinely use ε = 1.
    pub fn check(&self) -> Result<(), PrivacyError> {
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(PrivacyError::Epsilon(self.epsilon));
        }
        if self.mode == NoiseMode::ApproximateGaussian {
            if !(self.delta > 0.0 && self.delta.is_finite()) {
                return Err(PrivacyError::Delta(self.delta));
            }
            if self.delta >= 1.0 {
                log::warn!("delta = {} is outside (0, 1); the guarantee is vacuous", self.delta);
            }
        }
        if self.epsilon >= 1.0 {
            // every build re-checks the budget; one warning per process is enough
            static WARNED: std::sync::Once = std::sync::Once::new();
            WARNED.call_once(|| log::warn!("epsilon = {} is outside (0, 1) assumed by the analysis", self.epsilon));
        }
        Ok(())
    }
}

/// Per-release parameters. In pure mode `sigma_*` are Laplace scales and
/// `delta_prime` is 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedNoiseParams {
    pub mode: NoiseMode,
    pub h: usize,
    pub eps_prime: f64,
    pub delta_prime: f64,
    pub sensitivity_internal: f64,
    pub sensitivity_leaf: f64,
    pub sigma_internal: f64,
    pub sigma_leaf: f64,
}

impl DerivedNoiseParams {
    /// Standard deviation of one internal-node noise draw.
    pub fn std_internal(&self) -> f64 {
        self.std(self.sigma_internal)
    }

    pub fn std_leaf(&self) -> f64 {
        self.std(self.sigma_leaf)
    }

    fn std(&self, scale: f64) -> f64 {
        match self.mode {
            NoiseMode::ApproximateGaussian => scale,
            NoiseMode::PureLaplace => scale * std::f64::consts::SQRT_2,
        }
    }
}

/// Derives `(ε′, δ′, σ)` for a tree of depth bound `h`.
///
/// `sensitivity_internal` is the separator-size sensitivity (`p`, or the
/// covering size `f` in the covering variant) and `leaf_size` is `c`. In
/// pure mode the ℓ1 sensitivities of the released vectors are used, which
/// are the squares of these sizes.
pub fn derive_noise_params(
    budget: &PrivacyBudget,
    h: usize,
    sensitivity_internal: f64,
    leaf_size: f64,
) -> Result<DerivedNoiseParams, PrivacyError> {
    budget.check()?;
    if h == 0 {
        return Err(PrivacyError::Depth);
    }
    for s in [sensitivity_internal, leaf_size] {
        if !(s >= 1.0 && s.is_finite()) {
            return Err(PrivacyError::Sensitivity(s));
        }
    }
    let hf = h as f64;
    Ok(match budget.mode {
        NoiseMode::ApproximateGaussian => {
            let delta_prime = budget.delta / (4.0 * hf);
            let eps_prime = budget.epsilon / (4.0 * hf * (1.0 / delta_prime).ln()).sqrt();
            let factor = (2.0 * (1.25 / delta_prime).ln()).sqrt() / eps_prime;
            DerivedNoiseParams {
                mode: budget.mode,
                h,
                eps_prime,
                delta_prime,
                sensitivity_internal,
                sensitivity_leaf: leaf_size,
                sigma_internal: sensitivity_internal * factor,
                sigma_leaf: leaf_size * factor,
            }
        }
        NoiseMode::PureLaplace => {
            let eps_prime = budget.epsilon / (2.0 * hf);
            let l1_internal = sensitivity_internal * sensitivity_internal;
            let l1_leaf = leaf_size * leaf_size;
            DerivedNoiseParams {
                mode: budget.mode,
                h,
                eps_prime,
                delta_prime: 0.0,
                sensitivity_internal: l1_internal,
                sensitivity_leaf: l1_leaf,
                sigma_internal: l1_internal / eps_prime,
                sigma_leaf: l1_leaf / eps_prime,
            }
        }
    })
}

/// Which release of a node a noise stream feeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReleaseKind {
    Within,
    Cross,
    Leaf,
    EdgeNoise,
}

impl ReleaseKind {
    fn tag(self) -> u64 {
        match self {
            ReleaseKind::Within => 1,
            ReleaseKind::Cross => 2,
            ReleaseKind::Leaf => 3,
            ReleaseKind::EdgeNoise => 4,
        }
    }
}

/// A deterministic noise stream derived from a master seed and a stream id
/// `(node label, release kind)`. Streams for different ids are independent,
/// so one node's releases never shift another node's noise.
#[derive(Debug, Clone)]
pub struct RngStream {
    rng: ChaCha20Rng,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(seed: u64, label: &str, kind: ReleaseKind) -> Self {
        // FNV-1a over the label bits, then mixed with the seed and kind
        let mut label_hash: u64 = 0xcbf2_9ce4_8422_2325;
        for byte in label.bytes().chain(std::iter::once(b'|')) {
            label_hash ^= u64::from(byte);
            label_hash = label_hash.wrapping_mul(0x0000_0100_0000_01b3);
        }
        let mut key = [0u8; 32];
        let words = [
            splitmix(seed),
            splitmix(seed ^ label_hash),
            splitmix(label_hash.wrapping_add(kind.tag())),
            splitmix(seed.rotate_left(17) ^ kind.tag()),
        ];
        for (chunk, w) in key.chunks_mut(8).zip(words) {
            chunk.copy_from_slice(&w.to_le_bytes());
        }
        RngStream {
            rng: ChaCha20Rng::from_seed(key),
        }
    }

    pub fn from_seed(seed: u64) -> Self {
        Self::new(seed, "", ReleaseKind::Within)
    }

    /// Draw from the given mode's distribution at `scale`.
    pub fn sample(&mut self, mode: NoiseMode, scale: f64) -> Result<f64, PrivacyError> {
        match mode {
            NoiseMode::ApproximateGaussian => sample_gaussian(scale, self),
            NoiseMode::PureLaplace => sample_laplace(scale, self),
        }
    }
}

fn check_scale(scale: f64) -> Result<(), PrivacyError> {
    if scale > 0.0 && scale.is_finite() {
        Ok(())
    } else {
        Err(PrivacyError::Scale(scale))
    }
}

/// One draw from `N(0, scale²)`.
pub fn sample_gaussian(scale: f64, rng: &mut RngStream) -> Result<f64, PrivacyError> {
    check_scale(scale)?;
    let normal = Normal::new(0.0, scale).map_err(|_| PrivacyError::Scale(scale))?;
    Ok(normal.sample(&mut rng.rng))
}

/// One draw from `Lap(scale)` (variance `2·scale²`) by inverting the CDF.
pub fn sample_laplace(scale: f64, rng: &mut RngStream) -> Result<f64, PrivacyError> {
    check_scale(scale)?;
    loop {
        let u: f64 = rng.rng.gen::<f64>() - 0.5;
        let tail = 1.0 - 2.0 * u.abs();
        if tail > 0.0 {
            return Ok(-scale * u.signum() * tail.ln());
        }
    }
}

/// Advanced composition of `k` releases at `(eps_each, delta_each)`:
/// `(√(2k·ln(1/slack))·ε + k·ε·(e^ε − 1), k·δ + slack)`.
pub fn advanced_composition_bound(k: usize, eps_each: f64, delta_each: f64, delta_slack: f64) -> (f64, f64) {
    let kf = k as f64;
    let eps = (2.0 * kf * (1.0 / delta_slack).ln()).sqrt() * eps_each + kf * eps_each * eps_each.exp_m1();
    (eps, kf * delta_each + delta_slack)
}

/// Basic composition: privacy parameters add up.
pub fn basic_composition(k: usize, eps_each: f64, delta_each: f64) -> (f64, f64) {
    (k as f64 * eps_each, k as f64 * delta_each)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccountantReport {
    pub passed: bool,
    pub mode: NoiseMode,
    pub releases_per_edge: usize,
    pub eps_total: f64,
    pub delta_total: f64,
    pub delta_slack: f64,
    pub epsilon: f64,
    pub delta: f64,
}

/// Checks that `k = max_releases_per_edge` releases at `(ε′, δ′)` compose
/// to at most the budget.
///
/// Approximate mode uses advanced composition with slack `δ − k·δ′`, the
/// whole remaining δ budget. Pure mode uses basic composition.
pub fn accountant_check(
    params: &DerivedNoiseParams,
    budget: &PrivacyBudget,
    max_releases_per_edge: usize,
) -> AccountantReport {
    let k = max_releases_per_edge;
    let tol = 1e-12;
    let (eps_total, delta_total, slack) = if k == 0 {
        (0.0, 0.0, 0.0)
    } else {
        match params.mode {
            NoiseMode::ApproximateGaussian => {
                let slack = budget.delta - k as f64 * params.delta_prime;
                if slack <= 0.0 {
                    (f64::INFINITY, f64::INFINITY, slack)
                } else {
                    let (e, d) = advanced_composition_bound(k, params.eps_prime, params.delta_prime, slack);
                    (e, d, slack)
                }
            }
            NoiseMode::PureLaplace => {
                let (e, d) = basic_composition(k, params.eps_prime, 0.0);
                (e, d, 0.0)
            }
        }
    };
    AccountantReport {
        passed: eps_total <= budget.epsilon * (1.0 + tol) && delta_total <= budget.delta * (1.0 + tol),
        mode: params.mode,
        releases_per_edge: k,
        eps_total,
        delta_total,
        delta_slack: slack,
        epsilon: budget.epsilon,
        delta: budget.delta,
    }
}

/// Lemma-style tail constant `σ·√(2(h + 3·ln max{p, c} + ln(1/(2γ))))`.
pub fn tail_constant(sigma: f64, h: usize, p: f64, c: f64, gamma: f64) -> f64 {
    sigma * (2.0 * (h as f64 + 3.0 * p.max(c).ln() + (1.0 / (2.0 * gamma)).ln())).sqrt()
}

/// High-probability envelope `2(ζ₁ + h·ζ₂)` on the max-over-pairs error,
/// with `ζ₁` from the leaf scale and `ζ₂` from the internal scale.
pub fn error_envelope(params: &DerivedNoiseParams, p: f64, c: f64, gamma: f64) -> f64 {
    let z1 = tail_constant(params.std_leaf(), params.h, p, c, gamma);
    let z2 = tail_constant(params.std_internal(), params.h, p, c, gamma);
    2.0 * (z1 + params.h as f64 * z2)
}
