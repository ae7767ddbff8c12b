//! Decision thresholds that meet a target recall, and the false-negative cost
//! they imply.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_THRESHOLD: f64 = 1e-6;
pub const MAX_THRESHOLD: f64 = 1.0 - 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecallSolve {
    pub target_recall: f64,
    pub threshold: f64,
    pub implied_fn_cost: f64,
    /// Cross-validated class-1 scores of the positive training samples, one
    /// vector per covariate set.
    pub positive_scores: Vec<Vec<f64>>,
}

impl RecallSolve {
    /// Solves the joint threshold over all score vectors and converts it.
    pub fn new(
        positive_scores: Vec<Vec<f64>>,
        target_recall: f64,
        fp_cost: f64,
        correct_cost: f64,
    ) -> Result<Self> {
        let threshold = solve_threshold_adaptive(&positive_scores, target_recall)?;
        let shifted_fn = implicit_fn_cost(threshold, fp_cost - correct_cost);
        Ok(Self {
            target_recall,
            threshold,
            implied_fn_cost: shifted_fn + correct_cost,
            positive_scores,
        })
    }
}

/// Fraction of `scores` at or above `t`.
pub fn empirical_recall(scores: &[f64], t: f64) -> f64 {
    scores.iter().filter(|&&s| s >= t).count() as f64 / scores.len() as f64
}

/// Largest `t` with `(1/n₁) Σ 1[score >= t] >= r`: the `⌈r n₁⌉`-th largest score.
pub fn solve_threshold(positive_scores: &[f64], r: f64) -> Result<f64> {
    if positive_scores.is_empty() {
        return Err(Error::NoPositives);
    }
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::InvalidInput(format!("target recall {r} outside (0, 1]")));
    }
    if positive_scores.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidInput("NaN score".into()));
    }
    let mut sorted = positive_scores.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let n1 = sorted.len();
    // smallest m with m / n₁ >= r, computed without trusting ceil on r·n₁
    let mut m = (crate::math::ceil(r * n1 as f64) as usize).clamp(1, n1);
    while m > 1 && (m - 1) as f64 / n1 as f64 >= r {
        m -= 1;
    }
    while (m as f64) / (n1 as f64) < r && m < n1 {
        m += 1;
    }
    Ok(sorted[m - 1])
}

/// `c_{1,0} = (1 - t) / t · c_{0,1}`; `t` is clamped to `[1e-6, 1 - 1e-6]`.
pub fn implicit_fn_cost(t_star: f64, fp_cost: f64) -> f64 {
    let t = t_star.clamp(MIN_THRESHOLD, MAX_THRESHOLD);
    if t != t_star {
        log::warn!("threshold {t_star} clamped to {t} before converting to a cost");
    }
    (1.0 - t) / t * fp_cost
}

/// Joint threshold over several covariate sets: a positive sample counts as
/// recalled at `t` only if every set scores it at least `t`, so the threshold
/// is solved on the per-sample minima.
pub fn solve_threshold_adaptive(per_set_scores: &[Vec<f64>], r: f64) -> Result<f64> {
    let first = per_set_scores
        .first()
        .ok_or_else(|| Error::InvalidInput("no score sets".into()))?;
    if per_set_scores.iter().any(|s| s.len() != first.len()) {
        return Err(Error::InvalidInput(
            "score sets cover different numbers of samples".into(),
        ));
    }
    let minima: Vec<f64> = (0..first.len())
        .map(|k| {
            per_set_scores
                .iter()
                .map(|s| s[k])
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    solve_threshold(&minima, r)
}
