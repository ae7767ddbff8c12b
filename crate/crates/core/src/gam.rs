//! Logistic generalized additive models on spline features.
//!
//! Dense fits minimize the negative log-likelihood plus a second-difference
//! smoothness penalty and a small ridge term by damped Newton steps
//! (iteratively reweighted least squares). The cost-scaled group-lasso path
//! `NLL + λ Σ_i c_i ||β_i||_2` is solved by block coordinate descent, each
//! block taking a proximal Newton step with backtracking.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::dataset::{CostModel, FoldAssignment};
use crate::error::{Error, Result};
use crate::math;
use crate::splines::{Features, SplineBasis};

pub const DEFAULT_RIDGE: f64 = 1e-6;
pub const SMOOTH_PENALTY_GRID: [f64; 4] = [0.01, 0.1, 1.0, 10.0];
/// Penalty weight used for covariates whose acquisition cost is zero.
pub const COST_FLOOR: f64 = 1e-6;

// Largest probability strictly below 1 and a positive floor, so predictions
// stay inside (0, 1).
const P_MAX: f64 = 1.0 - f64::EPSILON / 2.0;
const P_MIN: f64 = f64::MIN_POSITIVE;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GamTerm {
    pub covariate: usize,
    pub basis: SplineBasis,
    pub coefficients: Vec<f64>,
}

impl GamTerm {
    /// `β_iᵀ f_i(x_i)`.
    pub fn contribution(&self, x: f64) -> f64 {
        math::dot(&self.coefficients, &self.basis.transform(x))
    }
}

/// `p(y = 1 | x_S) = g(τ + Σ_{i∈S} β_iᵀ f_i(x_i))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GamModel {
    pub intercept: f64,
    /// One term per active covariate, ordered by covariate index.
    pub terms: Vec<GamTerm>,
    pub smooth_penalty: f64,
    pub ridge: f64,
}

impl GamModel {
    pub fn intercept_only(intercept: f64) -> Self {
        Self {
            intercept,
            terms: Vec::new(),
            smooth_penalty: 0.0,
            ridge: 0.0,
        }
    }

    pub fn active_set(&self) -> Vec<usize> {
        self.terms.iter().map(|t| t.covariate).collect()
    }

    pub fn term(&self, covariate: usize) -> Option<&GamTerm> {
        self.terms.iter().find(|t| t.covariate == covariate)
    }

    /// Sum of the term contributions over `covariates` (intercept excluded).
    /// Covariates outside the active set contribute nothing.
    pub fn partial_predictor(&self, x: &[f64], covariates: &[usize]) -> Result<f64> {
        let mut total = 0.0;
        for term in self.terms.iter().filter(|t| covariates.contains(&t.covariate)) {
            let value = *x
                .get(term.covariate)
                .ok_or(Error::MissingCovariate(term.covariate))?;
            if value.is_nan() {
                return Err(Error::MissingCovariate(term.covariate));
            }
            total += term.contribution(value);
        }
        Ok(total)
    }

    /// `τ + Σ β_iᵀ f_i(x_i)`. `x` is indexed by covariate; `NaN` means not observed.
    pub fn linear_predictor(&self, x: &[f64]) -> Result<f64> {
        let all = self.active_set();
        Ok(self.intercept + self.partial_predictor(x, &all)?)
    }

    pub fn predict_prob(&self, x: &[f64]) -> Result<f64> {
        Ok(probability(self.linear_predictor(x)?))
    }
}

/// Logistic link, kept strictly inside (0, 1).
pub fn probability(eta: f64) -> f64 {
    math::sigmoid(eta).clamp(P_MIN, P_MAX)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_iter: usize,
    /// Converged when `|ΔF| <= tol * max(|F|, 1)`.
    pub tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            tol: 1e-8,
        }
    }
}

/// Dense design for one covariate set: intercept column plus feature blocks.
struct Design {
    covariates: Vec<usize>,
    offsets: Vec<usize>,
    widths: Vec<usize>,
    dim: usize,
    n: usize,
    x: Vec<f64>,
    y: Vec<f64>,
}

impl Design {
    fn new(features: &Features, rows: &[usize], set: &[usize]) -> Self {
        let mut covariates = Vec::new();
        let mut offsets = Vec::new();
        let mut widths = Vec::new();
        let mut dim = 1;
        let mut sorted = set.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        for &j in &sorted {
            let w = features.width(j);
            if w > 0 {
                covariates.push(j);
                offsets.push(dim);
                widths.push(w);
                dim += w;
            }
        }
        let n = rows.len();
        let mut x = vec![0.0; n * dim];
        for (r, &k) in rows.iter().enumerate() {
            let row = &mut x[r * dim..(r + 1) * dim];
            row[0] = 1.0;
            for ((&j, &off), &w) in covariates.iter().zip(&offsets).zip(&widths) {
                row[off..off + w].copy_from_slice(features.row_block(j, k));
            }
        }
        let y = rows.iter().map(|&k| features.labels()[k] as f64).collect();
        Self {
            covariates,
            offsets,
            widths,
            dim,
            n,
            x,
            y,
        }
    }

    fn row(&self, r: usize) -> &[f64] {
        &self.x[r * self.dim..(r + 1) * self.dim]
    }

    fn predictor(&self, theta: &[f64]) -> Vec<f64> {
        (0..self.n).map(|r| math::dot(self.row(r), theta)).collect()
    }
}

fn nll(eta: &[f64], y: &[f64]) -> f64 {
    eta.iter().zip(y).map(|(&e, &t)| math::softplus(e) - t * e).sum()
}

/// Block-diagonal `smooth D₂ᵀD₂ + ridge I` over the coefficient blocks.
fn penalty_matrix(design: &Design, smooth: f64, ridge: f64) -> Vec<f64> {
    let d = design.dim;
    let mut p = vec![0.0; d * d];
    for (&off, &w) in design.offsets.iter().zip(&design.widths) {
        for a in 0..w {
            p[(off + a) * d + off + a] += ridge;
        }
        if w >= 3 && smooth > 0.0 {
            for r in 0..w - 2 {
                let stencil = [(r, 1.0), (r + 1, -2.0), (r + 2, 1.0)];
                for &(a, ca) in &stencil {
                    for &(b, cb) in &stencil {
                        p[(off + a) * d + off + b] += smooth * ca * cb;
                    }
                }
            }
        }
    }
    p
}

fn quad_form(m: &[f64], v: &[f64]) -> f64 {
    let d = v.len();
    let mut total = 0.0;
    for a in 0..d {
        if v[a] == 0.0 {
            continue;
        }
        total += v[a] * math::dot(&m[a * d..(a + 1) * d], v);
    }
    total
}

fn solve_spd(h: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let d = rhs.len();
    let max_diag = (0..d).map(|a| h[a * d + a].abs()).fold(0.0, f64::max);
    let mut jitter = 0.0;
    for _ in 0..12 {
        let mut m = DMatrix::from_row_slice(d, d, h);
        for a in 0..d {
            m[(a, a)] += jitter;
        }
        if let Some(chol) = m.cholesky() {
            let sol = chol.solve(&DVector::from_column_slice(rhs));
            if sol.iter().all(|v| v.is_finite()) {
                return Ok(sol.iter().copied().collect());
            }
        }
        jitter = if jitter == 0.0 {
            1e-12 * (1.0 + max_diag)
        } else {
            jitter * 100.0
        };
    }
    Err(Error::Numerical("Newton system is not positive definite".into()))
}

/// Penalized logistic GAM on covariate set `set` over training `rows`.
///
/// Minimizes `NLL + smooth Σ_i ||D₂ β_i||² + ridge ||β||²`; the intercept is
/// unpenalized. Covariates without a basis (constant columns) are skipped.
pub fn fit_gam(
    features: &Features,
    rows: &[usize],
    set: &[usize],
    smooth_penalty: f64,
    ridge: f64,
) -> Result<GamModel> {
    fit_gam_with(features, rows, set, smooth_penalty, ridge, FitOptions::default())
}

pub fn fit_gam_with(
    features: &Features,
    rows: &[usize],
    set: &[usize],
    smooth_penalty: f64,
    ridge: f64,
    opts: FitOptions,
) -> Result<GamModel> {
    if rows.is_empty() {
        return Err(Error::InvalidInput("cannot fit a model on zero rows".into()));
    }
    if !(smooth_penalty >= 0.0 && ridge >= 0.0) {
        return Err(Error::InvalidInput("penalties must be nonnegative".into()));
    }
    let design = Design::new(features, rows, set);
    let d = design.dim;
    let penalty = penalty_matrix(&design, smooth_penalty, ridge);

    let n = design.n as f64;
    let base = (design.y.iter().sum::<f64>() / n).clamp(0.5 / n, 1.0 - 0.5 / n);
    let mut theta = vec![0.0; d];
    theta[0] = math::logit(base);
    let mut eta = design.predictor(&theta);
    let mut objective = nll(&eta, &design.y) + quad_form(&penalty, &theta);

    let mut grad = vec![0.0; d];
    let mut hess = vec![0.0; d * d];
    for _ in 0..opts.max_iter {
        grad.iter_mut().for_each(|g| *g = 0.0);
        hess.iter_mut().for_each(|h| *h = 0.0);
        for r in 0..design.n {
            let row = design.row(r);
            let p = math::sigmoid(eta[r]);
            let resid = p - design.y[r];
            let w = p * (1.0 - p);
            for a in 0..d {
                grad[a] += row[a] * resid;
                let wa = w * row[a];
                if wa == 0.0 {
                    continue;
                }
                let h_row = &mut hess[a * d..(a + 1) * d];
                for b in a..d {
                    h_row[b] += wa * row[b];
                }
            }
        }
        for a in 0..d {
            for b in 0..a {
                hess[a * d + b] = hess[b * d + a];
            }
        }
        for a in 0..d {
            grad[a] += 2.0 * math::dot(&penalty[a * d..(a + 1) * d], &theta);
            for b in 0..d {
                hess[a * d + b] += 2.0 * penalty[a * d + b];
            }
        }
        let neg: Vec<f64> = grad.iter().map(|g| -g).collect();
        let step = solve_spd(&hess, &neg)?;
        let slope = math::dot(&grad, &step);

        let mut alpha = 1.0;
        let (new_theta, new_eta, new_objective) = loop {
            let cand: Vec<f64> = theta.iter().zip(&step).map(|(t, s)| t + alpha * s).collect();
            let cand_eta = design.predictor(&cand);
            let cand_obj = nll(&cand_eta, &design.y) + quad_form(&penalty, &cand);
            if cand_obj <= objective + 1e-4 * alpha * slope || alpha < 1e-10 {
                break (cand, cand_eta, cand_obj);
            }
            alpha *= 0.5;
        };
        let change = objective - new_objective;
        if new_objective <= objective {
            theta = new_theta;
            eta = new_eta;
            objective = new_objective;
        }
        if change.abs() <= opts.tol * objective.abs().max(1.0) {
            return Ok(model_from_theta(features, &design, &theta, smooth_penalty, ridge));
        }
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iter,
        gradient_norm: math::norm2(&grad),
    })
}

fn model_from_theta(
    features: &Features,
    design: &Design,
    theta: &[f64],
    smooth_penalty: f64,
    ridge: f64,
) -> GamModel {
    let terms = design
        .covariates
        .iter()
        .zip(design.offsets.iter().zip(&design.widths))
        .map(|(&j, (&off, &w))| GamTerm {
            covariate: j,
            basis: features.basis(j).cloned().expect("covariate with features has a basis"),
            coefficients: theta[off..off + w].to_vec(),
        })
        .collect();
    GamModel {
        intercept: theta[0],
        terms,
        smooth_penalty,
        ridge,
    }
}

/// Out-of-fold probabilities for `rows`; `folds` assigns positions in `rows`.
pub fn cv_predict(
    features: &Features,
    rows: &[usize],
    folds: &FoldAssignment,
    set: &[usize],
    smooth_penalty: f64,
    ridge: f64,
) -> Result<Vec<f64>> {
    if folds.n() != rows.len() {
        return Err(Error::InvalidInput(format!(
            "fold assignment covers {} samples, expected {}",
            folds.n(),
            rows.len()
        )));
    }
    let mut out = vec![0.0; rows.len()];
    for f in 0..folds.k {
        let train: Vec<usize> = folds.train_indices(f).iter().map(|&i| rows[i]).collect();
        let model = fit_gam(features, &train, set, smooth_penalty, ridge)?;
        for i in folds.test_indices(f) {
            out[i] = predict_row(&model, features, rows[i]);
        }
    }
    Ok(out)
}

/// Probability for a training row using its cached features.
pub fn predict_row(model: &GamModel, features: &Features, row: usize) -> f64 {
    let eta = model.intercept
        + model
            .terms
            .iter()
            .map(|t| math::dot(&t.coefficients, features.row_block(t.covariate, row)))
            .sum::<f64>();
    probability(eta)
}

/// Smoothness penalty from `grid` minimizing the cross-validated deviance of
/// the model on every covariate. Ties go to the earlier grid value.
pub fn select_smooth_penalty(
    features: &Features,
    rows: &[usize],
    folds: &FoldAssignment,
    grid: &[f64],
    ridge: f64,
) -> Result<f64> {
    let all: Vec<usize> = (0..features.p()).collect();
    let mut best: Option<(f64, f64)> = None;
    for &lambda in grid {
        let probs = cv_predict(features, rows, folds, &all, lambda, ridge)?;
        let deviance: f64 = rows
            .iter()
            .zip(&probs)
            .map(|(&k, &p)| {
                if features.labels()[k] == 1 {
                    -2.0 * math::ln(p)
                } else {
                    -2.0 * math::ln(1.0 - p)
                }
            })
            .sum();
        if best.is_none_or(|(_, d)| deviance < d) {
            best = Some((lambda, deviance));
        }
    }
    best.map(|(l, _)| l)
        .ok_or_else(|| Error::InvalidInput("empty smoothness grid".into()))
}

// ---------------------------------------------------------------------------
// Cost-scaled group lasso

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LassoOptions {
    pub grid_size: usize,
    /// Smallest λ as a fraction of λ_max.
    pub min_ratio: f64,
    /// Stationarity residual at which a path point counts as solved.
    pub tol: f64,
    pub max_sweeps: usize,
    pub ridge: f64,
}

impl Default for LassoOptions {
    fn default() -> Self {
        Self {
            grid_size: 50,
            min_ratio: 1e-3,
            tol: 1e-6,
            max_sweeps: 2000,
            ridge: DEFAULT_RIDGE,
        }
    }
}

/// Solution at one λ. `coefficients[i]` is empty for covariates without features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSolution {
    pub lambda: f64,
    pub intercept: f64,
    pub coefficients: Vec<Vec<f64>>,
    pub objective: f64,
    pub kkt_residual: f64,
    pub sweeps: usize,
}

impl PathSolution {
    pub fn is_active(&self, covariate: usize) -> bool {
        self.coefficients[covariate].iter().any(|&b| b != 0.0)
    }

    pub fn active_groups(&self) -> Vec<usize> {
        (0..self.coefficients.len()).filter(|&i| self.is_active(i)).collect()
    }

    pub fn group_norm(&self, covariate: usize) -> f64 {
        math::norm2(&self.coefficients[covariate])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LassoPath {
    /// Decreasing: `lambdas[0]` is λ_max.
    pub lambdas: Vec<f64>,
    pub solutions: Vec<PathSolution>,
    /// Per-covariate penalty weights (acquisition costs with the zero floor).
    pub penalty_weights: Vec<f64>,
    /// Set when a path point failed to converge; the path stops before it.
    pub truncated_at: Option<f64>,
}

impl LassoPath {
    pub fn lambda_max(&self) -> f64 {
        self.lambdas[0]
    }

    pub fn objective_values(&self) -> Vec<f64> {
        self.solutions.iter().map(|s| s.objective).collect()
    }
}

/// Data of the penalized problem `NLL + ridge ||β||² + λ Σ w_i ||β_i||`.
pub struct GroupLassoProblem {
    n: usize,
    /// Per covariate: row-major `n x s_i` block.
    blocks: Vec<Vec<f64>>,
    widths: Vec<usize>,
    y: Vec<f64>,
    weights: Vec<f64>,
    ridge: f64,
}

impl GroupLassoProblem {
    pub fn new(features: &Features, rows: &[usize], costs: &CostModel, ridge: f64) -> Result<Self> {
        if costs.p() != features.p() {
            return Err(Error::InvalidInput(format!(
                "{} covariate costs for {} covariates",
                costs.p(),
                features.p()
            )));
        }
        let widths: Vec<usize> = (0..features.p()).map(|j| features.width(j)).collect();
        let blocks = (0..features.p())
            .map(|j| {
                rows.iter()
                    .flat_map(|&k| features.row_block(j, k).iter().copied())
                    .collect()
            })
            .collect();
        let y: Vec<f64> = rows.iter().map(|&k| features.labels()[k] as f64).collect();
        let positives = y.iter().filter(|&&v| v == 1.0).count();
        if positives == 0 || positives == y.len() {
            return Err(Error::InvalidInput(
                "group-lasso path needs both classes in the training rows".into(),
            ));
        }
        let weights = costs.covariate_costs.iter().map(|&c| c.max(COST_FLOOR)).collect();
        Ok(Self {
            n: rows.len(),
            blocks,
            widths,
            y,
            weights,
            ridge,
        })
    }

    pub fn p(&self) -> usize {
        self.widths.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn row(&self, group: usize, r: usize) -> &[f64] {
        let w = self.widths[group];
        &self.blocks[group][r * w..(r + 1) * w]
    }

    fn base_intercept(&self) -> f64 {
        let n1 = self.y.iter().sum::<f64>();
        math::ln(n1 / (self.n as f64 - n1))
    }

    fn predictor(&self, intercept: f64, coefficients: &[Vec<f64>]) -> Vec<f64> {
        (0..self.n)
            .map(|r| {
                intercept
                    + (0..self.p())
                        .filter(|&g| self.widths[g] > 0)
                        .map(|g| math::dot(self.row(g, r), &coefficients[g]))
                        .sum::<f64>()
            })
            .collect()
    }

    fn smooth_objective(&self, eta: &[f64], coefficients: &[Vec<f64>]) -> f64 {
        nll(eta, &self.y)
            + self.ridge * coefficients.iter().flatten().map(|b| b * b).sum::<f64>()
    }

    fn penalty(&self, lambda: f64, coefficients: &[Vec<f64>]) -> f64 {
        coefficients
            .iter()
            .zip(&self.weights)
            .map(|(b, w)| lambda * w * math::norm2(b))
            .sum()
    }

    /// Full objective `NLL + ridge ||β||² + λ Σ w_i ||β_i||`.
    pub fn objective(&self, lambda: f64, intercept: f64, coefficients: &[Vec<f64>]) -> f64 {
        let eta = self.predictor(intercept, coefficients);
        self.smooth_objective(&eta, coefficients) + self.penalty(lambda, coefficients)
    }

    fn group_gradient(&self, group: usize, resid: &[f64], beta: &[f64]) -> Vec<f64> {
        let w = self.widths[group];
        let mut g: Vec<f64> = beta.iter().map(|b| 2.0 * self.ridge * b).collect();
        for (r, &e) in resid.iter().enumerate() {
            if e == 0.0 {
                continue;
            }
            let row = self.row(group, r);
            for a in 0..w {
                g[a] += row[a] * e;
            }
        }
        g
    }

    /// `NLL + ridge ||β||²` at the given parameters.
    pub fn smooth_value(&self, intercept: f64, coefficients: &[Vec<f64>]) -> f64 {
        let eta = self.predictor(intercept, coefficients);
        self.smooth_objective(&eta, coefficients)
    }

    /// Gradient of [`Self::smooth_value`]: `(∂/∂τ, ∂/∂β_i per covariate)`.
    pub fn smooth_gradient(&self, intercept: f64, coefficients: &[Vec<f64>]) -> (f64, Vec<Vec<f64>>) {
        let eta = self.predictor(intercept, coefficients);
        let resid: Vec<f64> = eta
            .iter()
            .zip(&self.y)
            .map(|(&e, &y)| math::sigmoid(e) - y)
            .collect();
        let groups = (0..self.p())
            .map(|g| self.group_gradient(g, &resid, &coefficients[g]))
            .collect();
        (resid.iter().sum(), groups)
    }

    /// `λ_max = max_i ||∇_{β_i} NLL(β = 0, τ₀)|| / w_i` with τ₀ the base-rate intercept.
    pub fn lambda_max(&self) -> f64 {
        let tau = self.base_intercept();
        let p0 = math::sigmoid(tau);
        let resid: Vec<f64> = self.y.iter().map(|y| p0 - y).collect();
        (0..self.p())
            .filter(|&g| self.widths[g] > 0)
            .map(|g| {
                let zero = vec![0.0; self.widths[g]];
                math::norm2(&self.group_gradient(g, &resid, &zero)) / self.weights[g]
            })
            .fold(0.0, f64::max)
    }

    /// Largest violation of the stationarity conditions at `λ`.
    ///
    /// Zero groups need `||∇_i|| <= λ w_i`; nonzero groups need
    /// `∇_i + λ w_i β_i / ||β_i|| = 0`; the intercept gradient must vanish.
    pub fn kkt_residual(&self, lambda: f64, intercept: f64, coefficients: &[Vec<f64>]) -> f64 {
        let eta = self.predictor(intercept, coefficients);
        let resid: Vec<f64> = eta
            .iter()
            .zip(&self.y)
            .map(|(&e, &y)| math::sigmoid(e) - y)
            .collect();
        let mut worst = resid.iter().sum::<f64>().abs();
        for g in (0..self.p()).filter(|&g| self.widths[g] > 0) {
            let beta = &coefficients[g];
            let grad = self.group_gradient(g, &resid, beta);
            let norm = math::norm2(beta);
            let violation = if norm == 0.0 {
                (math::norm2(&grad) - lambda * self.weights[g]).max(0.0)
            } else {
                let scale = lambda * self.weights[g] / norm;
                let v: Vec<f64> = grad.iter().zip(beta).map(|(gr, b)| gr + scale * b).collect();
                math::norm2(&v)
            };
            worst = worst.max(violation);
        }
        worst
    }

    /// Solves the problem at one λ, optionally warm-started. When `trace` is
    /// given, the objective after every block update is appended to it.
    pub fn solve(
        &self,
        lambda: f64,
        warm: Option<&PathSolution>,
        tol: f64,
        max_sweeps: usize,
        mut trace: Option<&mut Vec<f64>>,
    ) -> Result<PathSolution> {
        let (mut intercept, mut coefficients) = match warm {
            Some(w) => (w.intercept, w.coefficients.clone()),
            None => (
                self.base_intercept(),
                self.widths.iter().map(|&w| vec![0.0; w]).collect::<Vec<_>>(),
            ),
        };
        let mut eta = self.predictor(intercept, &coefficients);
        let mut objective = self.smooth_objective(&eta, &coefficients) + self.penalty(lambda, &coefficients);
        if let Some(t) = trace.as_deref_mut() {
            t.push(objective);
        }

        for sweep in 1..=max_sweeps {
            // intercept: 1-D Newton step with backtracking
            {
                let (g, h) = eta.iter().zip(&self.y).fold((0.0, 0.0), |(g, h), (&e, &y)| {
                    let p = math::sigmoid(e);
                    (g + p - y, h + p * (1.0 - p))
                });
                if g != 0.0 {
                    let step = -g / h.max(1e-12);
                    let mut alpha = 1.0;
                    while alpha > 1e-12 {
                        let cand: Vec<f64> = eta.iter().map(|e| e + alpha * step).collect();
                        let cand_obj = self.smooth_objective(&cand, &coefficients)
                            + self.penalty(lambda, &coefficients);
                        if cand_obj <= objective + 1e-4 * alpha * g * step + rounding_slack(objective) {
                            intercept += alpha * step;
                            eta = cand;
                            objective = cand_obj;
                            break;
                        }
                        alpha *= 0.5;
                    }
                    if let Some(t) = trace.as_deref_mut() {
                        t.push(objective);
                    }
                }
            }

            for group in 0..self.p() {
                if self.widths[group] == 0 {
                    continue;
                }
                if let Some(update) = self.block_update(group, lambda, &eta, &coefficients[group], objective, &coefficients)? {
                    let (beta, new_eta, new_objective) = update;
                    coefficients[group] = beta;
                    eta = new_eta;
                    objective = new_objective;
                }
                if let Some(t) = trace.as_deref_mut() {
                    t.push(objective);
                }
            }

            let residual = self.kkt_residual(lambda, intercept, &coefficients);
            if residual <= tol {
                return Ok(PathSolution {
                    lambda,
                    intercept,
                    coefficients,
                    objective,
                    kkt_residual: residual,
                    sweeps: sweep,
                });
            }
        }
        Err(Error::NonConvergence {
            iterations: max_sweeps,
            gradient_norm: self.kkt_residual(lambda, intercept, &coefficients),
        })
    }

    /// Proximal Newton step on one block; `None` when the block does not move.
    #[allow(clippy::type_complexity)]
    fn block_update(
        &self,
        group: usize,
        lambda: f64,
        eta: &[f64],
        beta: &[f64],
        objective: f64,
        coefficients: &[Vec<f64>],
    ) -> Result<Option<(Vec<f64>, Vec<f64>, f64)>> {
        let w = self.widths[group];
        let mut resid = Vec::with_capacity(self.n);
        let mut hess = vec![0.0; w * w];
        for (r, &e) in eta.iter().enumerate() {
            let p = math::sigmoid(e);
            resid.push(p - self.y[r]);
            let weight = p * (1.0 - p);
            let row = self.row(group, r);
            for a in 0..w {
                let wa = weight * row[a];
                for b in a..w {
                    hess[a * w + b] += wa * row[b];
                }
            }
        }
        for a in 0..w {
            hess[a * w + a] += 2.0 * self.ridge;
            for b in 0..a {
                hess[a * w + b] = hess[b * w + a];
            }
        }
        let grad = self.group_gradient(group, &resid, beta);
        let threshold = lambda * self.weights[group];

        // u = Hβ - g; the minimizer of the quadratic model plus the group
        // penalty is zero iff ||u|| <= λ w.
        let u: Vec<f64> = (0..w)
            .map(|a| math::dot(&hess[a * w..(a + 1) * w], beta) - grad[a])
            .collect();
        let u_norm = math::norm2(&u);
        let target = if u_norm <= threshold * (1.0 + 1e-12) {
            vec![0.0; w]
        } else {
            solve_group_subproblem(&hess, &u, threshold, w)?
        };

        let direction: Vec<f64> = target.iter().zip(beta).map(|(t, b)| t - b).collect();
        let dir_norm = math::norm2(&direction);
        if dir_norm <= 1e-15 * (1.0 + math::norm2(beta)) {
            return Ok(None);
        }
        let old_pen = threshold * math::norm2(beta);
        let decrease = math::dot(&grad, &direction) + threshold * math::norm2(&target) - old_pen;

        let mut x_dir = vec![0.0; self.n];
        for (r, slot) in x_dir.iter_mut().enumerate() {
            *slot = math::dot(self.row(group, r), &direction);
        }
        let others = self.penalty(lambda, coefficients) - old_pen;
        let ridge_others: f64 = self.ridge
            * coefficients
                .iter()
                .enumerate()
                .filter(|(g, _)| *g != group)
                .flat_map(|(_, b)| b.iter())
                .map(|b| b * b)
                .sum::<f64>();

        let mut alpha = 1.0;
        while alpha > 1e-12 {
            let cand_beta: Vec<f64> = beta.iter().zip(&direction).map(|(b, d)| b + alpha * d).collect();
            let cand_eta: Vec<f64> = eta.iter().zip(&x_dir).map(|(e, x)| e + alpha * x).collect();
            let cand_obj = nll(&cand_eta, &self.y)
                + ridge_others
                + self.ridge * cand_beta.iter().map(|b| b * b).sum::<f64>()
                + others
                + threshold * math::norm2(&cand_beta);
            if cand_obj <= objective + 1e-4 * alpha * decrease.min(0.0) + rounding_slack(objective) {
                return Ok(Some((cand_beta, cand_eta, cand_obj)));
            }
            alpha *= 0.5;
        }
        Ok(None)
    }
}

// Near the optimum the predicted decrease drops below the rounding error of
// the summed objective; without this slack the line search rejects steps
// that still reduce the stationarity residual.
fn rounding_slack(objective: f64) -> f64 {
    1e-13 * (1.0 + objective.abs())
}

/// Minimizes `½ bᵀHb - uᵀb + c ||b||` for `||u|| > c`.
///
/// The minimizer is `b = (H + (c/r) I)⁻¹ u` with `r = ||b||`; in the
/// eigenbasis of `H` the radius solves `Σ ũ_k² / (λ_k r + c)² = 1`, which is
/// decreasing in `r` and bracketed by bisection.
fn solve_group_subproblem(hess: &[f64], u: &[f64], c: f64, w: usize) -> Result<Vec<f64>> {
    let eig = SymmetricEigen::new(DMatrix::from_row_slice(w, w, hess));
    let ut = eig.eigenvectors.transpose() * DVector::from_column_slice(u);
    let values: Vec<f64> = eig.eigenvalues.iter().map(|&l| l.max(0.0)).collect();
    let phi = |r: f64| -> f64 {
        values
            .iter()
            .zip(ut.iter())
            .map(|(&l, &v)| {
                let d = l * r + c;
                v * v / (d * d)
            })
            .sum::<f64>()
            - 1.0
    };
    let u_norm = math::norm2(u);
    let l_max = values.iter().copied().fold(0.0, f64::max);
    let mut lo = 0.0;
    let mut hi = if l_max > 0.0 { (u_norm - c) / l_max } else { 1.0 };
    hi = hi.max(1e-300);
    let mut doublings = 0;
    while phi(hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > 2000 || !hi.is_finite() {
            return Err(Error::Numerical("group subproblem has no bounded solution".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if phi(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let r = 0.5 * (lo + hi);
    let scaled = DVector::from_iterator(
        w,
        values.iter().zip(ut.iter()).map(|(&l, &v)| r * v / (l * r + c)),
    );
    let b = &eig.eigenvectors * scaled;
    Ok(b.iter().copied().collect())
}

/// Regularization path of the cost-scaled group lasso on a geometric grid
/// from λ_max down to `min_ratio · λ_max`, warm-started point to point.
pub fn fit_group_lasso_path(
    features: &Features,
    rows: &[usize],
    costs: &CostModel,
    opts: LassoOptions,
) -> Result<LassoPath> {
    if opts.grid_size < 2 {
        return Err(Error::InvalidInput("path grid needs at least two points".into()));
    }
    let problem = GroupLassoProblem::new(features, rows, costs, opts.ridge)?;
    let lambda_max = problem.lambda_max();
    if !(lambda_max > 0.0) {
        return Err(Error::Numerical("no covariate carries gradient signal".into()));
    }
    let steps = (opts.grid_size - 1) as f64;
    let lambdas: Vec<f64> = (0..opts.grid_size)
        .map(|t| lambda_max * libm::pow(opts.min_ratio, t as f64 / steps))
        .collect();

    let mut solutions: Vec<PathSolution> = Vec::with_capacity(lambdas.len());
    let mut truncated_at = None;
    for &lambda in &lambdas {
        match problem.solve(lambda, solutions.last(), opts.tol, opts.max_sweeps, None) {
            Ok(sol) => solutions.push(sol),
            Err(Error::NonConvergence { gradient_norm, .. }) => {
                log::warn!("group lasso stopped at lambda {lambda:e}: residual {gradient_norm:e}");
                truncated_at = Some(lambda);
                break;
            }
            Err(e) => return Err(e),
        }
    }
    let kept = solutions.len();
    Ok(LassoPath {
        lambdas: lambdas[..kept].to_vec(),
        solutions,
        penalty_weights: problem.weights.clone(),
        truncated_at,
    })
}
