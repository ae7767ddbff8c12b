//! Training of everything the decision procedures need from one training set.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::dataset::{make_folds, ColumnMeans, CostModel, Dataset};
use crate::error::{Error, Result};
use crate::gam::{self, GamModel, LassoOptions, DEFAULT_RIDGE, SMOOTH_PENALTY_GRID};
use crate::policy::{self, AcquisitionTrace, AdaptivePolicy};
use crate::recall::RecallSolve;
use crate::riskcore::DEFAULT_SEGMENTS;
use crate::seqselect::{self, CovariateSequence};
use crate::splines::{Features, DEFAULT_BASIS_SIZE, DEFAULT_DEGREE};
use crate::Label;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    Lasso,
    Forward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Adacos,
    Cos,
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub basis_size: usize,
    pub degree: usize,
    pub xi: usize,
    /// Folds of the inner cross-validation (smoothing, selection, recall).
    pub inner_folds: usize,
    pub seed: u64,
    pub selection: Selection,
    pub path_grid_size: usize,
    pub smooth_grid: Vec<f64>,
    /// Skips the smoothing search when set.
    pub smooth_penalty: Option<f64>,
    pub ridge: f64,
    pub target_recall: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            basis_size: DEFAULT_BASIS_SIZE,
            degree: DEFAULT_DEGREE,
            xi: DEFAULT_SEGMENTS,
            inner_folds: 10,
            seed: 0,
            selection: Selection::Lasso,
            path_grid_size: 50,
            smooth_grid: SMOOTH_PENALTY_GRID.to_vec(),
            smooth_penalty: None,
            ridge: DEFAULT_RIDGE,
            target_recall: None,
        }
    }
}

/// Trained artifacts for one training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bundle {
    pub config: TrainConfig,
    pub names: Vec<String>,
    pub column_means: ColumnMeans,
    pub smooth_penalty: f64,
    pub policy: AdaptivePolicy,
    /// Sequence position chosen by the static selection.
    pub cos_index: usize,
    pub full_model: GamModel,
    /// Costs for the sequence-based procedures (false-negative cost resolved).
    pub costs: CostModel,
    /// Costs for the full model; differs from `costs` only in recall mode.
    pub full_costs: CostModel,
    /// Joint threshold over all sequence sets, in recall mode.
    pub recall: Option<RecallSolve>,
    /// Threshold for the full model alone, in recall mode.
    pub full_recall: Option<RecallSolve>,
}

impl Bundle {
    pub fn sequence(&self) -> &CovariateSequence {
        &self.policy.sequence
    }

    pub fn costs_for(&self, mode: Mode) -> &CostModel {
        match mode {
            Mode::Full => &self.full_costs,
            _ => &self.costs,
        }
    }

    /// Fills missing cells of a raw row with the training means.
    pub fn impute_row(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.column_means.means.len() {
            return Err(Error::InvalidInput(format!(
                "row has {} covariates, model expects {}",
                x.len(),
                self.column_means.means.len()
            )));
        }
        Ok(x.iter()
            .zip(&self.column_means.means)
            .map(|(&v, &m)| if v.is_nan() { m } else { v })
            .collect())
    }

    pub fn classify(&self, mode: Mode, x: &[f64], sample: usize) -> Result<AcquisitionTrace> {
        let x = self.impute_row(x)?;
        let costs = self.costs_for(mode);
        match mode {
            Mode::Adacos => policy::adacos_classify(&self.policy, &x, costs, sample),
            Mode::Cos => policy::cos_classify(self.sequence(), self.cos_index, &x, costs, sample),
            Mode::Full => policy::full_model_classify(&self.full_model, &x, costs, sample),
        }
    }

    /// Classifies every row of `d` and settles the traces against its labels.
    pub fn classify_dataset(&self, mode: Mode, d: &Dataset) -> Result<Vec<AcquisitionTrace>> {
        let costs = self.costs_for(mode);
        (0..d.n())
            .map(|k| {
                let mut t = self.classify(mode, d.row(k), k)?;
                t.settle(d.label(k), costs)?;
                Ok(t)
            })
            .collect()
    }
}

/// Cross-validated class-1 scores of the positive rows for covariate set `set`.
fn positive_scores(probs: &[f64], labels: &[Label]) -> Vec<f64> {
    probs
        .iter()
        .zip(labels)
        .filter(|(_, &y)| y == 1)
        .map(|(&p, _)| p)
        .collect()
}

/// Trains the covariate sequence, per-set classifiers, conditionals, static
/// set choice and full model on `train`.
///
/// In recall mode `costs.fn_cost` must be unset; it is derived from the
/// cross-validated threshold. Forward selection needs the false-negative cost
/// up front and cannot be combined with recall mode.
pub fn train_bundle(train: &Dataset, costs: &CostModel, config: &TrainConfig) -> Result<Bundle> {
    if costs.p() != train.p() {
        return Err(Error::InvalidInput(format!(
            "{} covariate costs for {} covariates",
            costs.p(),
            train.p()
        )));
    }
    match (config.target_recall, costs.fn_cost) {
        (Some(_), Some(_)) => {
            return Err(Error::InvalidInput(
                "give either a false-negative cost or a target recall, not both".into(),
            ))
        }
        (None, None) => return Err(Error::MissingFnCost),
        (Some(_), None) if config.selection == Selection::Forward => {
            return Err(Error::InvalidInput(
                "forward selection needs an explicit false-negative cost".into(),
            ))
        }
        _ => {}
    }

    let column_means = ColumnMeans::fit(train)?;
    let data = column_means.apply(train);
    let features = Features::build(&data, config.basis_size, config.degree)?;
    let rows: Vec<usize> = (0..data.n()).collect();
    let folds = make_folds(data.n(), config.inner_folds, config.seed)?;
    let labels = data.labels().to_vec();

    let smooth = match config.smooth_penalty {
        Some(s) => s,
        None => gam::select_smooth_penalty(&features, &rows, &folds, &config.smooth_grid, config.ridge)?,
    };
    log::debug!("smoothing penalty {smooth}");

    let mut sequence = match config.selection {
        Selection::Forward => {
            seqselect::forward_select(&features, &rows, costs, &folds, smooth, config.ridge)?
        }
        Selection::Lasso => {
            let opts = LassoOptions {
                grid_size: config.path_grid_size,
                ridge: config.ridge,
                ..LassoOptions::default()
            };
            let path = gam::fit_group_lasso_path(&features, &rows, costs, opts)?;
            seqselect::nested_sets_from_path(&path)?
        }
    };
    sequence.refit(&features, &rows, smooth, config.ridge)?;
    let all: Vec<usize> = (0..data.p()).collect();
    let full_model = gam::fit_gam(&features, &rows, &all, smooth, config.ridge)?;

    let cv_probs = sequence
        .sets
        .iter()
        .map(|s| gam::cv_predict(&features, &rows, &folds, s, smooth, config.ridge))
        .collect::<Result<Vec<_>>>()?;

    let (resolved, full_costs, recall_solve, full_recall) = match config.target_recall {
        None => (costs.clone(), costs.clone(), None, None),
        Some(r) => {
            let per_set: Vec<Vec<f64>> = cv_probs.iter().map(|p| positive_scores(p, &labels)).collect();
            let solve = RecallSolve::new(per_set, r, costs.fp_cost, costs.correct_cost)?;
            let full_probs = gam::cv_predict(&features, &rows, &folds, &all, smooth, config.ridge)?;
            let full = RecallSolve::new(
                alloc::vec![positive_scores(&full_probs, &labels)],
                r,
                costs.fp_cost,
                costs.correct_cost,
            )?;
            log::debug!(
                "recall {r}: joint threshold {} (fn cost {}), full-model threshold {}",
                solve.threshold,
                solve.implied_fn_cost,
                full.threshold
            );
            (
                costs.with_fn_cost(solve.implied_fn_cost)?,
                costs.with_fn_cost(full.implied_fn_cost)?,
                Some(solve),
                Some(full),
            )
        }
    };

    let estimates = sequence
        .sets
        .iter()
        .zip(&cv_probs)
        .map(|(s, p)| seqselect::cv_total_cost(p, &labels, &folds, s, &resolved))
        .collect::<Result<Vec<_>>>()?;
    let cos_index = policy::cos_select_from_estimates(&estimates)?;

    let policy = AdaptivePolicy::fit(sequence, &features, &rows, config.xi)?;
    Ok(Bundle {
        config: config.clone(),
        names: data.names().to_vec(),
        column_means,
        smooth_penalty: smooth,
        policy,
        cos_index,
        full_model,
        costs: resolved,
        full_costs,
        recall: recall_solve,
        full_recall,
    })
}
