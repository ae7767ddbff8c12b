//! Decision procedures: the Bayes classifier, the adaptive walk along the
//! covariate sequence, the static cost-optimal set, and the full model.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::condreg::{self, ConditionalGaussian};
use crate::dataset::{CostModel, FoldAssignment};
use crate::error::{Error, Result};
use crate::gam::{self, GamModel};
use crate::riskcore::{self, PiecewiseSigmoid};
use crate::seqselect::{self, CovariateSequence};
use crate::splines::Features;
use crate::Label;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Classify(Label),
    /// Covariates to acquire next; never already observed.
    Acquire(Vec<usize>),
}

/// Future-cost comparison made at one stage of the adaptive walk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageEvaluation {
    pub stage: usize,
    /// `F(∅)`.
    pub classify_now: f64,
    /// `(j, F(S_j \ S_i))` for every later set.
    pub candidates: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionTrace {
    pub sample: usize,
    /// Covariates acquired at each step, in order.
    pub acquired: Vec<Vec<usize>>,
    pub evaluations: Vec<StageEvaluation>,
    /// Index of the classifier used (sequence position, if any).
    pub final_stage: Option<usize>,
    pub probability: f64,
    pub label: Label,
    pub covariate_cost: f64,
    /// Set by [`AcquisitionTrace::settle`] once the true label is known.
    pub misclassification_cost: Option<f64>,
}

impl AcquisitionTrace {
    fn new(sample: usize) -> Self {
        Self {
            sample,
            acquired: Vec::new(),
            evaluations: Vec::new(),
            final_stage: None,
            probability: f64::NAN,
            label: 0,
            covariate_cost: 0.0,
            misclassification_cost: None,
        }
    }

    fn acquire(&mut self, covariates: Vec<usize>, x: &[f64], observed: &mut [f64], costs: &CostModel) {
        for &c in &covariates {
            observed[c] = x[c];
        }
        self.covariate_cost += costs.set_cost(&covariates);
        self.acquired.push(covariates);
    }

    /// All acquired covariates, ascending.
    pub fn acquired_covariates(&self) -> Vec<usize> {
        let mut all: Vec<usize> = self.acquired.iter().flatten().copied().collect();
        all.sort_unstable();
        all
    }

    pub fn num_covariates(&self) -> usize {
        self.acquired.iter().map(Vec::len).sum()
    }

    /// Records `c_{y, ŷ}` for true label `y` and returns the total cost.
    pub fn settle(&mut self, y: Label, costs: &CostModel) -> Result<f64> {
        let c = costs.misclassification_cost(y, self.label)?;
        self.misclassification_cost = Some(c);
        Ok(c + self.covariate_cost)
    }

    pub fn total_cost(&self) -> Option<f64> {
        self.misclassification_cost.map(|c| c + self.covariate_cost)
    }
}

/// `argmin_{y*} Σ_y p(y|x) c_{y,y*}`: class 1 iff `p1 c'_{1,0} >= (1 - p1) c'_{0,1}`
/// with the correct-classification cost subtracted. Ties go to 1.
pub fn bayes_classify(p1: f64, costs: &CostModel) -> Result<Label> {
    let (fp, fnc) = costs.shifted()?;
    Ok(u8::from(p1 * fnc >= (1.0 - p1) * fp))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalPair {
    pub from: usize,
    pub to: usize,
    pub model: ConditionalGaussian,
}

/// A covariate sequence with its per-set classifiers and the conditional
/// Gaussians for every pair of stages `i < j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptivePolicy {
    pub sequence: CovariateSequence,
    pub conditionals: Vec<ConditionalPair>,
    pub sigmoid: PiecewiseSigmoid,
}

impl AdaptivePolicy {
    /// Fits the conditionals; `sequence` must carry fitted models.
    pub fn fit(sequence: CovariateSequence, features: &Features, rows: &[usize], xi: usize) -> Result<Self> {
        let q = sequence.q();
        if sequence.models.len() != q {
            return Err(Error::InvalidInput("sequence classifiers are not fitted".into()));
        }
        let mut conditionals = Vec::with_capacity(q * q.saturating_sub(1) / 2);
        for i in 0..q {
            for j in i + 1..q {
                let model = condreg::fit_conditional(
                    features,
                    rows,
                    sequence.set(i),
                    &sequence.difference(i, j),
                    &sequence.models[j],
                )?;
                conditionals.push(ConditionalPair { from: i, to: j, model });
            }
        }
        Ok(Self {
            sequence,
            conditionals,
            sigmoid: PiecewiseSigmoid::new(xi)?,
        })
    }

    pub fn conditional(&self, from: usize, to: usize) -> Result<&ConditionalGaussian> {
        self.conditionals
            .iter()
            .find(|c| c.from == from && c.to == to)
            .map(|c| &c.model)
            .ok_or_else(|| Error::InvalidInput(format!("no conditional for stages {from} -> {to}")))
    }

    /// Evaluates the stopping test at `stage` on the observed row.
    pub fn evaluate_stage(&self, observed: &[f64], stage: usize, costs: &CostModel) -> Result<StageEvaluation> {
        let seq = &self.sequence;
        let classify_now = riskcore::empty_future_cost(seq, observed, stage, costs)?;
        let candidates = (stage + 1..seq.q())
            .map(|j| {
                let cond = self.conditional(stage, j)?;
                riskcore::future_cost(seq, cond, observed, stage, j, costs, &self.sigmoid).map(|f| (j, f))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(StageEvaluation {
            stage,
            classify_now,
            candidates,
        })
    }

    /// One step of the adaptive procedure at `stage`, with `S_stage` observed.
    /// Classifies when every extension costs at least as much as stopping.
    pub fn decide(&self, observed: &[f64], stage: usize, costs: &CostModel) -> Result<(Decision, Option<StageEvaluation>)> {
        let seq = &self.sequence;
        if stage + 1 >= seq.q() {
            let p1 = seq.model(stage)?.predict_prob(observed)?;
            return Ok((Decision::Classify(bayes_classify(p1, costs)?), None));
        }
        let eval = self.evaluate_stage(observed, stage, costs)?;
        let stop = eval.candidates.iter().all(|&(_, f)| f >= eval.classify_now);
        let decision = if stop {
            let p1 = seq.model(stage)?.predict_prob(observed)?;
            Decision::Classify(bayes_classify(p1, costs)?)
        } else {
            Decision::Acquire(seq.difference(stage, stage + 1))
        };
        Ok((decision, Some(eval)))
    }
}

/// Walks the sequence for one sample. Only acquired entries of `x` are read.
pub fn adacos_classify(
    policy: &AdaptivePolicy,
    x: &[f64],
    costs: &CostModel,
    sample: usize,
) -> Result<AcquisitionTrace> {
    let seq = &policy.sequence;
    let mut observed = vec![f64::NAN; x.len()];
    let mut trace = AcquisitionTrace::new(sample);
    trace.acquire(seq.set(0).to_vec(), x, &mut observed, costs);
    let mut stage = 0;
    loop {
        let (decision, eval) = policy.decide(&observed, stage, costs)?;
        if let Some(e) = eval {
            trace.evaluations.push(e);
        }
        match decision {
            Decision::Classify(label) => {
                trace.probability = seq.model(stage)?.predict_prob(&observed)?;
                trace.label = label;
                trace.final_stage = Some(stage);
                return Ok(trace);
            }
            Decision::Acquire(covariates) => {
                if covariates.iter().any(|&c| !observed[c].is_nan()) {
                    return Err(Error::InvalidAction(format!("re-acquiring {covariates:?}")));
                }
                trace.acquire(covariates, x, &mut observed, costs);
                stage += 1;
            }
        }
    }
}

/// Index minimizing the cross-validated expected total cost; ties go to the
/// smaller index.
pub fn cos_select_from_estimates(estimates: &[f64]) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (k, &e) in estimates.iter().enumerate() {
        if best.is_none_or(|(_, b)| e < b) {
            best = Some((k, e));
        }
    }
    best.map(|(k, _)| k)
        .ok_or_else(|| Error::InvalidInput("no candidate sets".into()))
}

/// Static covariate set of the sequence with the lowest cross-validated
/// expected total cost. `folds` assigns the positions of `rows`.
pub fn cos_select(
    features: &Features,
    rows: &[usize],
    seq: &CovariateSequence,
    costs: &CostModel,
    folds: &FoldAssignment,
    smooth_penalty: f64,
    ridge: f64,
) -> Result<usize> {
    let labels: Vec<Label> = rows.iter().map(|&k| features.labels()[k]).collect();
    let estimates = seq
        .sets
        .iter()
        .map(|s| {
            let probs = gam::cv_predict(features, rows, folds, s, smooth_penalty, ridge)?;
            seqselect::cv_total_cost(&probs, &labels, folds, s, costs)
        })
        .collect::<Result<Vec<_>>>()?;
    cos_select_from_estimates(&estimates)
}

/// Acquires `S_k` and classifies with its model.
pub fn cos_classify(
    seq: &CovariateSequence,
    k: usize,
    x: &[f64],
    costs: &CostModel,
    sample: usize,
) -> Result<AcquisitionTrace> {
    let mut observed = vec![f64::NAN; x.len()];
    let mut trace = AcquisitionTrace::new(sample);
    trace.acquire(seq.set(k).to_vec(), x, &mut observed, costs);
    let p1 = seq.model(k)?.predict_prob(&observed)?;
    trace.probability = p1;
    trace.label = bayes_classify(p1, costs)?;
    trace.final_stage = Some(k);
    Ok(trace)
}

/// Acquires every covariate and classifies with `model`.
pub fn full_model_classify(
    model: &GamModel,
    x: &[f64],
    costs: &CostModel,
    sample: usize,
) -> Result<AcquisitionTrace> {
    let mut observed = vec![f64::NAN; x.len()];
    let mut trace = AcquisitionTrace::new(sample);
    trace.acquire((0..x.len()).collect(), x, &mut observed, costs);
    let p1 = model.predict_prob(&observed)?;
    trace.probability = p1;
    trace.label = bayes_classify(p1, costs)?;
    Ok(trace)
}
