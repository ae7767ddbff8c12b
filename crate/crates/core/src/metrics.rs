//! Evaluation metrics over classification traces.

use crate::dataset::CostModel;
use crate::error::{Error, Result};
use crate::policy::AcquisitionTrace;
use crate::Label;

/// Weight of a true positive in [`weighted_accuracy`].
pub const POSITIVE_WEIGHT: f64 = 10.0;

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a == 0 {
        return Err(Error::InvalidInput("no samples to evaluate".into()));
    }
    if a != b {
        return Err(Error::InvalidInput("predictions and labels differ in length".into()));
    }
    Ok(())
}

/// `(1/n) Σ (c_{y,ŷ} + Σ_{i∈S} c_i)`.
pub fn avg_total_cost(traces: &[AcquisitionTrace], labels: &[Label], costs: &CostModel) -> Result<f64> {
    check_lengths(traces.len(), labels.len())?;
    let mut total = 0.0;
    for (t, &y) in traces.iter().zip(labels) {
        total += costs.misclassification_cost(y, t.label)? + t.covariate_cost;
    }
    Ok(total / traces.len() as f64)
}

/// `(1/n) Σ c_{y,ŷ}`.
pub fn avg_misclassification_cost(traces: &[AcquisitionTrace], labels: &[Label], costs: &CostModel) -> Result<f64> {
    check_lengths(traces.len(), labels.len())?;
    let mut total = 0.0;
    for (t, &y) in traces.iter().zip(labels) {
        total += costs.misclassification_cost(y, t.label)?;
    }
    Ok(total / traces.len() as f64)
}

/// `(1/n) Σ ((1 - y) ŷ c_{0,1} + Σ_{i∈S} c_i)`: false positives and acquisitions only.
pub fn avg_operation_costs(traces: &[AcquisitionTrace], labels: &[Label], costs: &CostModel) -> Result<f64> {
    check_lengths(traces.len(), labels.len())?;
    let total: f64 = traces
        .iter()
        .zip(labels)
        .map(|(t, &y)| {
            let fp = if y == 0 && t.label == 1 { costs.fp_cost } else { 0.0 };
            fp + t.covariate_cost
        })
        .sum();
    Ok(total / traces.len() as f64)
}

pub fn avg_covariate_cost(traces: &[AcquisitionTrace]) -> f64 {
    if traces.is_empty() {
        return 0.0;
    }
    traces.iter().map(|t| t.covariate_cost).sum::<f64>() / traces.len() as f64
}

pub fn avg_num_covariates(traces: &[AcquisitionTrace]) -> f64 {
    if traces.is_empty() {
        return 0.0;
    }
    traces.iter().map(|t| t.num_covariates() as f64).sum::<f64>() / traces.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl Confusion {
    pub fn new(preds: &[Label], labels: &[Label]) -> Result<Self> {
        check_lengths(preds.len(), labels.len())?;
        let mut c = Self::default();
        for (&p, &y) in preds.iter().zip(labels) {
            match (y, p) {
                (1, 1) => c.tp += 1,
                (0, 1) => c.fp += 1,
                (1, _) => c.fn_ += 1,
                _ => c.tn += 1,
            }
        }
        Ok(c)
    }
}

/// `(10 TP + TN) / (10 · positives + negatives)`.
pub fn weighted_accuracy(preds: &[Label], labels: &[Label]) -> Result<f64> {
    let c = Confusion::new(preds, labels)?;
    let num = POSITIVE_WEIGHT * c.tp as f64 + c.tn as f64;
    let den = POSITIVE_WEIGHT * (c.tp + c.fn_) as f64 + (c.tn + c.fp) as f64;
    Ok(num / den)
}

/// `FP / (FP + TP)`; 0 when nothing is predicted positive.
pub fn fdr(preds: &[Label], labels: &[Label]) -> Result<f64> {
    let c = Confusion::new(preds, labels)?;
    if c.tp + c.fp == 0 {
        return Ok(0.0);
    }
    Ok(c.fp as f64 / (c.fp + c.tp) as f64)
}

/// `TP / (TP + FN)`; 1 when there are no positives.
pub fn recall(preds: &[Label], labels: &[Label]) -> Result<f64> {
    let c = Confusion::new(preds, labels)?;
    if c.tp + c.fn_ == 0 {
        return Ok(1.0);
    }
    Ok(c.tp as f64 / (c.tp + c.fn_) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rates() {
        assert_eq!(weighted_accuracy(&[1, 0], &[1, 0]).unwrap(), 1.0);
        assert_eq!(weighted_accuracy(&[0, 1], &[1, 0]).unwrap(), 0.0);
        assert!((weighted_accuracy(&[1, 1], &[1, 0]).unwrap() - 10.0 / 11.0).abs() < 1e-15);
        assert_eq!(fdr(&[0, 0], &[1, 0]).unwrap(), 0.0);
        assert_eq!(fdr(&[1, 1], &[0, 0]).unwrap(), 1.0);
        assert_eq!(fdr(&[1, 1], &[1, 0]).unwrap(), 0.5);
        assert_eq!(recall(&[1, 0, 1], &[1, 1, 0]).unwrap(), 0.5);
        assert!(weighted_accuracy(&[], &[]).is_err());
        assert!(fdr(&[1], &[1, 0]).is_err());
    }
}
