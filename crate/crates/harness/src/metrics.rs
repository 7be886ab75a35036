// SPDX-License-Identifier: Apache-2.0

//! Error statistics of an estimated distance matrix against the exact one.

use sepapsd_core::DistanceMatrix;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MetricsError {
    #[error("matrix sizes differ: {0} vs {1}")]
    Shape(usize, usize),
    #[error("pair ({s}, {t}) is finite in one matrix and infinite in the other")]
    Reachability { s: usize, t: usize },
    #[error("pair ({s}, {t}) has a NaN estimate")]
    NotANumber { s: usize, t: usize },
}

/// `|d̂ − d|` over the unordered pairs with finite exact distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    pub pairs: usize,
    pub max: f64,
    pub mean: f64,
    pub p50: f64,
    pub p95: f64,
}

/// Scores `estimate` against `exact`. Pairs at infinite distance are not
/// scored, but both matrices must agree on which pairs they are.
pub fn error_stats(estimate: &DistanceMatrix, exact: &DistanceMatrix) -> Result<ErrorStats, MetricsError> {
    let n = exact.n();
    if estimate.n() != n {
        return Err(MetricsError::Shape(estimate.n(), n));
    }
    let mut errors = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for s in 0..n {
        let (est, ex) = (estimate.row(s), exact.row(s));
        for t in s + 1..n {
            let (a, b) = (est[t], ex[t]);
            if a.is_nan() {
                return Err(MetricsError::NotANumber { s, t });
            }
            match (a.is_infinite(), b.is_infinite()) {
                (false, false) => errors.push((a - b).abs()),
                (true, true) => {}
                _ => return Err(MetricsError::Reachability { s, t }),
            }
        }
    }
    let pairs = errors.len();
    if pairs == 0 {
        return Ok(ErrorStats {
            pairs,
            max: 0.0,
            mean: 0.0,
            p50: 0.0,
            p95: 0.0,
        });
    }
    let max = errors.iter().copied().fold(0.0, f64::max);
    let mean = errors.iter().sum::<f64>() / pairs as f64;
    let p50 = quantile(&mut errors, 0.5);
    let p95 = quantile(&mut errors, 0.95);
    Ok(ErrorStats {
        pairs,
        max,
        mean,
        p50,
        p95,
    })
}

/// Nearest-rank quantile; reorders `values`.
pub fn quantile(values: &mut [f64], q: f64) -> f64 {
    assert!(!values.is_empty(), "quantile of nothing");
    let rank = ((q * values.len() as f64).ceil() as usize).clamp(1, values.len()) - 1;
    let (_, v, _) = values.select_nth_unstable_by(rank, f64::total_cmp);
    *v
}

/// Median (mean of the two middle values for even counts).
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}
