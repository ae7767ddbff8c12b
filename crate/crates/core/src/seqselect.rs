//! Nested covariate sequences `S_1 ⊂ S_2 ⊂ … ⊂ S_q`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::dataset::{CostModel, FoldAssignment};
use crate::error::{Error, Result};
use crate::gam::{self, GamModel, LassoPath};
use crate::policy::bayes_classify;
use crate::splines::Features;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SequenceOrigin {
    GroupLasso,
    ForwardSelection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariateSequence {
    /// Each set sorted ascending; strictly nested.
    pub sets: Vec<Vec<usize>>,
    pub origin: SequenceOrigin,
    /// Covariates in the order they join the sequence.
    pub order: Vec<usize>,
    /// Group lasso only: λ at which each entry of `order` first became active.
    pub activation_lambdas: Vec<f64>,
    /// Refit classifier per set; empty until [`CovariateSequence::refit`].
    pub models: Vec<GamModel>,
}

impl CovariateSequence {
    /// Builds the prefix sets of `order`, optionally starting from `∅`.
    pub fn from_order(order: Vec<usize>, include_empty: bool, origin: SequenceOrigin) -> Self {
        let mut sets = Vec::with_capacity(order.len() + 1);
        if include_empty || order.is_empty() {
            sets.push(Vec::new());
        }
        for k in 1..=order.len() {
            let mut s = order[..k].to_vec();
            s.sort_unstable();
            sets.push(s);
        }
        Self {
            sets,
            origin,
            order,
            activation_lambdas: Vec::new(),
            models: Vec::new(),
        }
    }

    pub fn q(&self) -> usize {
        self.sets.len()
    }

    pub fn set(&self, k: usize) -> &[usize] {
        &self.sets[k]
    }

    /// `S_j \ S_i`.
    pub fn difference(&self, i: usize, j: usize) -> Vec<usize> {
        self.sets[j]
            .iter()
            .copied()
            .filter(|c| !self.sets[i].contains(c))
            .collect()
    }

    pub fn model(&self, k: usize) -> Result<&GamModel> {
        self.models
            .get(k)
            .ok_or_else(|| Error::InvalidInput(format!("no classifier fitted for set {k}")))
    }

    /// Fits the dense per-set classifiers.
    pub fn refit(
        &mut self,
        features: &Features,
        rows: &[usize],
        smooth_penalty: f64,
        ridge: f64,
    ) -> Result<()> {
        self.models = self
            .sets
            .iter()
            .map(|s| gam::fit_gam(features, rows, s, smooth_penalty, ridge))
            .collect::<Result<_>>()?;
        Ok(())
    }

    /// Checks strict nesting and index bounds.
    pub fn validate(&self, p: usize) -> Result<()> {
        if self.sets.is_empty() {
            return Err(Error::InvalidInput("empty covariate sequence".into()));
        }
        for s in &self.sets {
            if s.iter().any(|&c| c >= p) {
                return Err(Error::InvalidInput(format!("covariate index out of range in {s:?}")));
            }
        }
        for w in self.sets.windows(2) {
            let nested = w[0].iter().all(|c| w[1].contains(c));
            if !nested || w[1].len() <= w[0].len() {
                return Err(Error::InvalidInput(format!(
                    "sets {:?} and {:?} are not strictly nested",
                    w[0], w[1]
                )));
            }
        }
        Ok(())
    }
}

/// Orders covariates by first activation along the decreasing-λ path.
///
/// Covariates activating at the same λ go by larger `||β_i||` there, then by
/// index. Never-active covariates are left out; if none activates the
/// sequence is `[∅]`.
pub fn nested_sets_from_path(path: &LassoPath) -> Result<CovariateSequence> {
    if path.solutions.is_empty() {
        return Err(Error::InvalidInput("empty regularization path".into()));
    }
    let p = path.solutions[0].coefficients.len();
    let mut order = Vec::new();
    let mut lambdas = Vec::new();
    let mut seen = vec![false; p];
    for sol in &path.solutions {
        let mut fresh: Vec<usize> = (0..p).filter(|&i| !seen[i] && sol.is_active(i)).collect();
        fresh.sort_by(|&a, &b| {
            sol.group_norm(b)
                .total_cmp(&sol.group_norm(a))
                .then(a.cmp(&b))
        });
        for i in fresh {
            seen[i] = true;
            order.push(i);
            lambdas.push(sol.lambda);
        }
    }
    let mut seq = CovariateSequence::from_order(order, false, SequenceOrigin::GroupLasso);
    seq.activation_lambdas = lambdas;
    Ok(seq)
}

/// Cross-validated expected total cost of classifying with the Bayes rule on
/// `set`: the plain average over folds of the per-fold mean misclassification
/// cost, plus the acquisition cost of `set`.
pub fn cv_total_cost(
    probs: &[f64],
    labels: &[u8],
    folds: &FoldAssignment,
    set: &[usize],
    costs: &CostModel,
) -> Result<f64> {
    let mut fold_means = Vec::with_capacity(folds.k);
    for f in 0..folds.k {
        let test = folds.test_indices(f);
        if test.is_empty() {
            continue;
        }
        let mut total = 0.0;
        for &i in &test {
            let pred = bayes_classify(probs[i], costs)?;
            total += costs.misclassification_cost(labels[i], pred)?;
        }
        fold_means.push(total / test.len() as f64);
    }
    let risk = fold_means.iter().sum::<f64>() / fold_means.len() as f64;
    Ok(risk + costs.set_cost(set))
}

/// Greedy forward selection: `S_1 = ∅`, then each step adds the covariate
/// minimizing the cross-validated expected total cost; `q = p + 1`.
/// Equal estimates go to the lower covariate index.
///
/// `folds` assigns the positions of `rows`. The returned sequence has no
/// fitted models.
pub fn forward_select(
    features: &Features,
    rows: &[usize],
    costs: &CostModel,
    folds: &FoldAssignment,
    smooth_penalty: f64,
    ridge: f64,
) -> Result<CovariateSequence> {
    costs.fn_cost()?;
    let p = features.p();
    let labels: Vec<u8> = rows.iter().map(|&k| features.labels()[k]).collect();
    let mut current: Vec<usize> = Vec::new();
    let mut order = Vec::with_capacity(p);
    while order.len() < p {
        let mut best: Option<(usize, f64)> = None;
        for j in (0..p).filter(|j| !current.contains(j)) {
            let mut candidate = current.clone();
            candidate.push(j);
            let probs = gam::cv_predict(features, rows, folds, &candidate, smooth_penalty, ridge)?;
            let estimate = cv_total_cost(&probs, &labels, folds, &candidate, costs)?;
            if best.is_none_or(|(_, e)| estimate < e) {
                best = Some((j, estimate));
            }
        }
        let (j, _) = best.expect("at least one candidate remains");
        current.push(j);
        order.push(j);
    }
    Ok(CovariateSequence::from_order(order, true, SequenceOrigin::ForwardSelection))
}
