//! Cross-validated evaluation of the decision procedures.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use adacos_core::dataset::make_folds;
use adacos_core::metrics;
use adacos_core::pipeline::train_bundle;
use adacos_core::{AcquisitionTrace, CostModel, Dataset, Mode, TrainConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub modes: Vec<Mode>,
    pub outer_folds: usize,
    pub seed: u64,
    pub train: TrainConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            modes: vec![Mode::Adacos, Mode::Cos, Mode::Full],
            outer_folds: 5,
            seed: 0,
            train: TrainConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub fold: usize,
    pub n_test: usize,
    pub avg_total_cost: f64,
    pub avg_misclassification_cost: f64,
    pub weighted_accuracy: f64,
    pub avg_num_covariates: f64,
    pub avg_covariate_cost: f64,
    pub avg_operation_costs: f64,
    pub fdr: f64,
    pub recall: f64,
    /// False-negative cost used (derived in recall mode).
    pub fn_cost: f64,
    /// Decision threshold from the recall solve, if any.
    pub threshold: Option<f64>,
}

impl FoldMetrics {
    /// Metric names paired with their values, in report order.
    pub fn values(&self) -> [(&'static str, f64); 9] {
        [
            ("avg_total_cost", self.avg_total_cost),
            ("avg_misclassification_cost", self.avg_misclassification_cost),
            ("weighted_accuracy", self.weighted_accuracy),
            ("avg_num_covariates", self.avg_num_covariates),
            ("avg_covariate_cost", self.avg_covariate_cost),
            ("avg_operation_costs", self.avg_operation_costs),
            ("fdr", self.fdr),
            ("recall", self.recall),
            ("fn_cost", self.fn_cost),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    /// Sample standard deviation over folds.
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeReport {
    pub mode: Mode,
    pub folds: Vec<FoldMetrics>,
    pub aggregate: BTreeMap<String, MetricSummary>,
    /// Test-set recall over all folds pooled.
    pub pooled_recall: f64,
}

impl ModeReport {
    pub fn mean(&self, metric: &str) -> f64 {
        self.aggregate[metric].mean
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub dataset: String,
    pub n: usize,
    pub p: usize,
    pub costs: CostModel,
    pub config: ExperimentConfig,
    pub modes: Vec<ModeReport>,
    /// Smallest joint cross-validated recall at the trained threshold, per fold
    /// (recall mode only).
    pub training_joint_recall: Vec<f64>,
}

impl ExperimentReport {
    pub fn mode(&self, mode: Mode) -> Option<&ModeReport> {
        self.modes.iter().find(|m| m.mode == mode)
    }
}

/// One classified test sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub mode: Mode,
    pub fold: usize,
    /// Row index in the full dataset.
    pub sample: usize,
    pub label: u8,
    pub trace: AcquisitionTrace,
}

pub struct ExperimentRun {
    pub report: ExperimentReport,
    pub traces: Vec<TraceRecord>,
}

fn summarize(values: &[f64]) -> MetricSummary {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    MetricSummary { mean, sd }
}

fn fold_metrics(
    fold: usize,
    traces: &[AcquisitionTrace],
    labels: &[u8],
    costs: &CostModel,
    threshold: Option<f64>,
) -> adacos_core::Result<FoldMetrics> {
    let preds: Vec<u8> = traces.iter().map(|t| t.label).collect();
    Ok(FoldMetrics {
        fold,
        n_test: traces.len(),
        avg_total_cost: metrics::avg_total_cost(traces, labels, costs)?,
        avg_misclassification_cost: metrics::avg_misclassification_cost(traces, labels, costs)?,
        weighted_accuracy: metrics::weighted_accuracy(&preds, labels)?,
        avg_num_covariates: metrics::avg_num_covariates(traces),
        avg_covariate_cost: metrics::avg_covariate_cost(traces),
        avg_operation_costs: metrics::avg_operation_costs(traces, labels, costs)?,
        fdr: metrics::fdr(&preds, labels)?,
        recall: metrics::recall(&preds, labels)?,
        fn_cost: costs.fn_cost()?,
        threshold,
    })
}

struct FoldOutcome {
    metrics: Vec<FoldMetrics>,
    traces: Vec<TraceRecord>,
    joint_recall: Option<f64>,
}

/// Trains on each outer training split and evaluates every requested mode on
/// the held-out split. Folds run in parallel; results do not depend on
/// scheduling.
pub fn run_experiment(
    name: &str,
    data: &Dataset,
    costs: &CostModel,
    config: &ExperimentConfig,
) -> adacos_core::Result<ExperimentRun> {
    let folds = make_folds(data.n(), config.outer_folds, config.seed)?;
    let outcomes: Vec<FoldOutcome> = (0..config.outer_folds)
        .into_par_iter()
        .map(|f| -> adacos_core::Result<FoldOutcome> {
            let train_idx = folds.train_indices(f);
            let test_idx = folds.test_indices(f);
            let train = data.select_rows(&train_idx);
            let test = data.select_rows(&test_idx);
            let mut train_config = config.train.clone();
            train_config.seed = config.seed.wrapping_mul(1000).wrapping_add(f as u64 + 1);
            let bundle = train_bundle(&train, costs, &train_config)?;
            log::info!(
                "fold {f}: sequence {:?}, static set {}, smoothing {}",
                bundle.sequence().sets,
                bundle.cos_index,
                bundle.smooth_penalty
            );
            let joint_recall = bundle.recall.as_ref().map(|r| {
                let minima: Vec<f64> = (0..r.positive_scores[0].len())
                    .map(|k| r.positive_scores.iter().map(|s| s[k]).fold(f64::INFINITY, f64::min))
                    .collect();
                adacos_core::recall::empirical_recall(&minima, r.threshold)
            });
            let mut metrics_out = Vec::new();
            let mut traces_out = Vec::new();
            for &mode in &config.modes {
                let traces = bundle.classify_dataset(mode, &test)?;
                let threshold = match mode {
                    Mode::Full => bundle.full_recall.as_ref().map(|r| r.threshold),
                    _ => bundle.recall.as_ref().map(|r| r.threshold),
                };
                metrics_out.push(fold_metrics(f, &traces, test.labels(), bundle.costs_for(mode), threshold)?);
                for (local, mut trace) in traces.into_iter().enumerate() {
                    trace.sample = test_idx[local];
                    traces_out.push(TraceRecord {
                        mode,
                        fold: f,
                        sample: test_idx[local],
                        label: test.label(local),
                        trace,
                    });
                }
            }
            Ok(FoldOutcome {
                metrics: metrics_out,
                traces: traces_out,
                joint_recall,
            })
        })
        .collect::<adacos_core::Result<_>>()?;

    let mut modes = Vec::new();
    for (m, &mode) in config.modes.iter().enumerate() {
        let per_fold: Vec<FoldMetrics> = outcomes.iter().map(|o| o.metrics[m].clone()).collect();
        let mut aggregate = BTreeMap::new();
        for (k, (metric, _)) in per_fold[0].values().iter().enumerate() {
            let vals: Vec<f64> = per_fold.iter().map(|fm| fm.values()[k].1).collect();
            aggregate.insert(metric.to_string(), summarize(&vals));
        }
        let (tp, pos) = outcomes
            .iter()
            .flat_map(|o| o.traces.iter())
            .filter(|t| t.mode == mode && t.label == 1)
            .fold((0usize, 0usize), |(tp, pos), t| (tp + usize::from(t.trace.label == 1), pos + 1));
        modes.push(ModeReport {
            mode,
            folds: per_fold,
            aggregate,
            pooled_recall: if pos == 0 { 1.0 } else { tp as f64 / pos as f64 },
        });
    }
    let report = ExperimentReport {
        dataset: name.to_string(),
        n: data.n(),
        p: data.p(),
        costs: costs.clone(),
        config: config.clone(),
        modes,
        training_joint_recall: outcomes.iter().filter_map(|o| o.joint_recall).collect(),
    };
    let traces = outcomes.into_iter().flat_map(|o| o.traces).collect();
    Ok(ExperimentRun { report, traces })
}

const SUMMARY_METRICS: [&str; 8] = [
    "avg_total_cost",
    "weighted_accuracy",
    "avg_num_covariates",
    "avg_covariate_cost",
    "avg_operation_costs",
    "fdr",
    "recall",
    "fn_cost",
];

/// Aligned plain-text table of aggregate metrics.
pub fn text_summary(report: &ExperimentReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} (n = {}, p = {}), {} folds, seed {}",
        report.dataset, report.n, report.p, report.config.outer_folds, report.config.seed
    );
    let _ = write!(out, "{:<28}", "metric");
    for m in &report.modes {
        let _ = write!(out, "{:>22}", format!("{:?}", m.mode).to_lowercase());
    }
    out.push('\n');
    for metric in SUMMARY_METRICS {
        let _ = write!(out, "{metric:<28}");
        for m in &report.modes {
            let s = m.aggregate[metric];
            let _ = write!(out, "{:>22}", format!("{:.4} ({:.4})", s.mean, s.sd));
        }
        out.push('\n');
    }
    out
}

/// Long-format CSV of aggregate metrics, one row per (x, mode, metric);
/// `x` is the swept parameter value of each report.
pub fn write_series_csv<W: Write>(writer: W, series: &[(f64, &ExperimentReport)]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["x", "dataset", "mode", "metric", "mean", "sd"])?;
    for (x, report) in series {
        for m in &report.modes {
            for (metric, s) in &m.aggregate {
                w.write_record([
                    x.to_string(),
                    report.dataset.clone(),
                    format!("{:?}", m.mode).to_lowercase(),
                    metric.clone(),
                    s.mean.to_string(),
                    s.sd.to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// One row per classified sample.
pub fn write_traces_csv<W: Write>(writer: W, traces: &[TraceRecord], names: &[String]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "mode",
        "fold",
        "sample",
        "acquired",
        "label",
        "predicted",
        "covariate_cost",
        "misclassification_cost",
        "total_cost",
    ])?;
    for r in traces {
        let acquired: Vec<&str> = r
            .trace
            .acquired
            .iter()
            .flatten()
            .map(|&i| names.get(i).map_or("?", String::as_str))
            .collect();
        w.write_record([
            format!("{:?}", r.mode).to_lowercase(),
            r.fold.to_string(),
            r.sample.to_string(),
            acquired.join(" "),
            r.label.to_string(),
            r.trace.label.to_string(),
            r.trace.covariate_cost.to_string(),
            r.trace.misclassification_cost.map_or(String::new(), |c| c.to_string()),
            r.trace.total_cost().map_or(String::new(), |c| c.to_string()),
        ])?;
    }
    w.flush()?;
    Ok(())
}
