//! Labeled tabular data, acquisition costs and cross-validation folds.
//!
//! Missing cells are stored as `NaN` until [`impute_missing`] (or
//! [`ColumnMeans::apply`]) replaces them.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Label;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    n: usize,
    p: usize,
    /// Row-major `n x p`; `NaN` marks a missing cell.
    values: Vec<f64>,
    labels: Vec<Label>,
    names: Vec<String>,
}

impl Dataset {
    pub fn new(values: Vec<f64>, labels: Vec<Label>, names: Vec<String>) -> Result<Self> {
        let n = labels.len();
        let p = names.len();
        if n == 0 || p == 0 {
            return Err(Error::InvalidInput(format!(
                "dataset needs at least one row and one covariate (got n={n}, p={p})"
            )));
        }
        if values.len() != n * p {
            return Err(Error::InvalidInput(format!(
                "value count {} does not match {n} x {p}",
                values.len()
            )));
        }
        if let Some(row) = labels.iter().position(|&y| y > 1) {
            return Err(Error::NonBinaryLabel {
                row,
                value: labels[row] as f64,
            });
        }
        if values.iter().any(|v| v.is_infinite()) {
            return Err(Error::InvalidInput("covariate values must be finite".into()));
        }
        let unique: BTreeSet<&str> = names.iter().map(String::as_str).collect();
        if unique.len() != p {
            return Err(Error::InvalidInput("covariate names must be unique".into()));
        }
        Ok(Self {
            n,
            p,
            values,
            labels,
            names,
        })
    }

    /// Builds a dataset with generated names `x0, x1, ...`.
    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<Label>) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::InvalidInput("rows have different lengths".into()));
        }
        let values = rows.iter().flatten().copied().collect();
        let names = (0..p).map(|j| format!("x{j}")).collect();
        Self::new(values, labels, names)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn label(&self, k: usize) -> Label {
        self.labels[k]
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.values[k * self.p..(k + 1) * self.p]
    }

    pub fn get(&self, k: usize, j: usize) -> f64 {
        self.values[k * self.p + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|k| self.get(k, j)).collect()
    }

    pub fn is_missing(&self, k: usize, j: usize) -> bool {
        self.get(k, j).is_nan()
    }

    pub fn has_missing(&self) -> bool {
        self.values.iter().any(|v| v.is_nan())
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&y| y == 1).count()
    }

    /// New dataset holding the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        let mut values = Vec::with_capacity(rows.len() * self.p);
        let mut labels = Vec::with_capacity(rows.len());
        for &k in rows {
            values.extend_from_slice(self.row(k));
            labels.push(self.labels[k]);
        }
        Dataset {
            n: rows.len(),
            p: self.p,
            values,
            labels,
            names: self.names.clone(),
        }
    }
}

/// Per-column means over observed cells, used to fill missing cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnMeans {
    pub means: Vec<f64>,
}

impl ColumnMeans {
    pub fn fit(d: &Dataset) -> Result<Self> {
        let mut means = Vec::with_capacity(d.p());
        for j in 0..d.p() {
            let (sum, count) = (0..d.n())
                .map(|k| d.get(k, j))
                .filter(|v| !v.is_nan())
                .fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
            if count == 0 {
                return Err(Error::FullyMissingColumn(j));
            }
            means.push(sum / count as f64);
        }
        Ok(Self { means })
    }

    pub fn apply(&self, d: &Dataset) -> Dataset {
        let mut out = d.clone();
        for k in 0..out.n {
            for j in 0..out.p {
                let cell = &mut out.values[k * out.p + j];
                if cell.is_nan() {
                    *cell = self.means[j];
                }
            }
        }
        out
    }
}

/// Replaces every missing cell by the mean of the observed cells in its column.
pub fn impute_missing(d: &Dataset) -> Result<Dataset> {
    Ok(ColumnMeans::fit(d)?.apply(d))
}

/// Acquisition and misclassification costs.
///
/// `fp_cost` is `c_{0,1}` (true 0, predicted 1), `fn_cost` is `c_{1,0}`.
/// Correct classifications cost `correct_cost` for both classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub covariate_costs: Vec<f64>,
    pub fp_cost: f64,
    pub fn_cost: Option<f64>,
    pub correct_cost: f64,
}

impl CostModel {
    pub fn new(
        covariate_costs: Vec<f64>,
        fp_cost: f64,
        fn_cost: Option<f64>,
        correct_cost: f64,
    ) -> Result<Self> {
        if let Some(i) = covariate_costs.iter().position(|&c| !(c >= 0.0 && c.is_finite())) {
            return Err(Error::InvalidCosts(format!(
                "covariate cost {i} must be finite and nonnegative"
            )));
        }
        if !(fp_cost >= 0.0 && fp_cost.is_finite()) {
            return Err(Error::InvalidCosts("fp_cost must be finite and nonnegative".into()));
        }
        if let Some(c) = fn_cost {
            if !(c >= 0.0 && c.is_finite()) {
                return Err(Error::InvalidCosts("fn_cost must be finite and nonnegative".into()));
            }
        }
        if !correct_cost.is_finite() {
            return Err(Error::InvalidCosts("correct_cost must be finite".into()));
        }
        let model = Self {
            covariate_costs,
            fp_cost,
            fn_cost,
            correct_cost,
        };
        if fn_cost.is_some() {
            model.shifted()?;
        } else if fp_cost - correct_cost < 0.0 {
            return Err(Error::InvalidCosts(
                "fp_cost must not be below correct_cost".into(),
            ));
        }
        Ok(model)
    }

    /// Symmetric misclassification costs, no correct-classification cost.
    pub fn symmetric(covariate_costs: Vec<f64>, fp_cost: f64, fn_cost: f64) -> Result<Self> {
        Self::new(covariate_costs, fp_cost, Some(fn_cost), 0.0)
    }

    pub fn p(&self) -> usize {
        self.covariate_costs.len()
    }

    pub fn fn_cost(&self) -> Result<f64> {
        self.fn_cost.ok_or(Error::MissingFnCost)
    }

    pub fn with_fn_cost(&self, fn_cost: f64) -> Result<Self> {
        Self::new(
            self.covariate_costs.clone(),
            self.fp_cost,
            Some(fn_cost),
            self.correct_cost,
        )
    }

    /// `c_{y, predicted}`.
    pub fn misclassification_cost(&self, y: Label, predicted: Label) -> Result<f64> {
        Ok(match (y, predicted) {
            (0, 1) => self.fp_cost,
            (1, 0) => self.fn_cost()?,
            _ => self.correct_cost,
        })
    }

    /// `(c_{0,1} - k, c_{1,0} - k)` for correct cost `k`; the Bayes risk
    /// under the original costs is `k` plus the risk under these.
    pub fn shifted(&self) -> Result<(f64, f64)> {
        let fp = self.fp_cost - self.correct_cost;
        let fnc = self.fn_cost()? - self.correct_cost;
        if fp < 0.0 || fnc < 0.0 {
            return Err(Error::InvalidCosts(format!(
                "misclassification costs must not be below the correct-classification cost {}",
                self.correct_cost
            )));
        }
        Ok((fp, fnc))
    }

    pub fn set_cost(&self, set: &[usize]) -> f64 {
        set.iter().map(|&i| self.covariate_costs[i]).sum()
    }

    pub fn total_covariate_cost(&self) -> f64 {
        self.covariate_costs.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub fold_of_sample: Vec<usize>,
    pub k: usize,
    pub seed: u64,
}

impl FoldAssignment {
    pub fn n(&self) -> usize {
        self.fold_of_sample.len()
    }

    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.n())
            .filter(|&i| self.fold_of_sample[i] == fold)
            .collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.n())
            .filter(|&i| self.fold_of_sample[i] != fold)
            .collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = alloc::vec![0; self.k];
        for &f in &self.fold_of_sample {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Shuffled assignment of `n` samples to `k` folds of near-equal size.
pub fn make_folds(n: usize, k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 || k > n {
        return Err(Error::InvalidFoldCount { n, k });
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let mut fold_of_sample = alloc::vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        fold_of_sample[i] = pos % k;
    }
    Ok(FoldAssignment {
        fold_of_sample,
        k,
        seed,
    })
}
