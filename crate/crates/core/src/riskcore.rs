//! Closed-form conditional Bayes risk under a Gaussian for the unobserved part
//! of the linear predictor.
//!
//! The logistic sigmoid is replaced by a chord interpolation on `[-10, 10]`
//! with flat tails. Against a normal density each linear piece integrates to
//! normal CDF differences plus a first-moment term, so the expected
//! misclassification cost after acquiring more covariates needs no numerical
//! quadrature.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::condreg::ConditionalGaussian;
use crate::dataset::CostModel;
use crate::error::{Error, Result};
use crate::math;
use crate::seqselect::CovariateSequence;

pub const DEFAULT_SEGMENTS: usize = 40;

const RANGE: f64 = 10.0;

/// Piecewise-linear sigmoid with `xi` chords on `[-10, 10]` and constant tails.
///
/// Segment `t` (1-based, `1..=xi + 2`) covers `[b_{t-1}, b_t]` with
/// `b_0 = -inf`, `b_t = -10 + 20 (t - 1) / xi` and `b_{xi+2} = +inf`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SigmoidSpec", into = "SigmoidSpec")]
pub struct PiecewiseSigmoid {
    xi: usize,
    breakpoints: Vec<f64>,
    slopes: Vec<f64>,
    intercepts: Vec<f64>,
}

// Serialized as the segment count; the end breakpoints are infinite.
#[derive(Serialize, Deserialize)]
struct SigmoidSpec {
    xi: usize,
}

impl From<PiecewiseSigmoid> for SigmoidSpec {
    fn from(s: PiecewiseSigmoid) -> Self {
        Self { xi: s.xi }
    }
}

impl TryFrom<SigmoidSpec> for PiecewiseSigmoid {
    type Error = Error;

    fn try_from(s: SigmoidSpec) -> Result<Self> {
        Self::new(s.xi)
    }
}

impl PiecewiseSigmoid {
    pub fn new(xi: usize) -> Result<Self> {
        if xi < 2 {
            return Err(Error::InvalidInput("at least two linear pieces are required".into()));
        }
        let mut breakpoints = Vec::with_capacity(xi + 3);
        breakpoints.push(f64::NEG_INFINITY);
        for t in 1..=xi + 1 {
            breakpoints.push(-RANGE + 2.0 * RANGE / xi as f64 * (t - 1) as f64);
        }
        breakpoints.push(f64::INFINITY);

        let mut slopes = Vec::with_capacity(xi + 2);
        let mut intercepts = Vec::with_capacity(xi + 2);
        slopes.push(0.0);
        intercepts.push(math::sigmoid(breakpoints[1]));
        for t in 1..=xi {
            let (lo, hi) = (breakpoints[t], breakpoints[t + 1]);
            let m = (math::sigmoid(hi) - math::sigmoid(lo)) / (hi - lo);
            slopes.push(m);
            intercepts.push(math::sigmoid(lo) - m * lo);
        }
        slopes.push(0.0);
        intercepts.push(math::sigmoid(breakpoints[xi + 1]));
        Ok(Self {
            xi,
            breakpoints,
            slopes,
            intercepts,
        })
    }

    pub fn xi(&self) -> usize {
        self.xi
    }

    /// Breakpoints `b_0 ..= b_{xi+2}`, including the infinite ends.
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// `(lower, upper, slope, intercept)` for each of the `xi + 2` segments.
    pub fn segments(&self) -> impl Iterator<Item = (f64, f64, f64, f64)> + '_ {
        (0..self.xi + 2).map(move |t| {
            (
                self.breakpoints[t],
                self.breakpoints[t + 1],
                self.slopes[t],
                self.intercepts[t],
            )
        })
    }

    pub fn eval(&self, u: f64) -> f64 {
        // first segment whose upper breakpoint is >= u
        let t = self.breakpoints[1..].partition_point(|&b| b < u);
        let t = t.min(self.xi + 1);
        self.slopes[t] * u + self.intercepts[t]
    }
}

/// `∫_a^b approx(u) N(u; mu, sigma2) du`, exact per linear piece.
pub fn segment_gaussian_expectation(
    pw: &PiecewiseSigmoid,
    mu: f64,
    sigma2: f64,
    a: f64,
    b: f64,
) -> Result<f64> {
    if a > b {
        return Err(Error::InvalidInput("lower bound exceeds upper bound".into()));
    }
    if !(sigma2 > 0.0) {
        return Err(Error::InvalidInput("variance must be positive".into()));
    }
    let sigma = math::sqrt(sigma2);
    let mut total = 0.0;
    for (lo, hi, m, v) in pw.segments() {
        let l = if a > lo { a } else { lo };
        let o = if b < hi { b } else { hi };
        if !(l < o) {
            continue;
        }
        let lz = (l - mu) / sigma;
        let oz = (o - mu) / sigma;
        let mass = math::std_normal_mass(lz, oz);
        let piece = if m == 0.0 {
            v * mass
        } else {
            // ∫ u φ = σ (φ(lz) - φ(oz)) + μ Φ_l^o
            let first = sigma * (density(lz) - density(oz));
            m * first + (m * mu + v) * mass
        };
        total += piece;
    }
    Ok(total.clamp(0.0, 1.0))
}

fn density(z: f64) -> f64 {
    if z.is_infinite() {
        0.0
    } else {
        math::std_normal_pdf(z)
    }
}

/// Inputs of one conditional Bayes risk evaluation.
///
/// `z` is the unobserved part of the linear predictor with `z ~ N(mu_z, sigma2)`;
/// `offset` is the intercept plus the observed part, so the full predictor is
/// `z + offset`. The Bayes classifier picks class 1 iff `z >= z_star`.
/// Costs are the (shifted) misclassification costs `c_{0,1}` and `c_{1,0}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskQuery {
    pub z_star: f64,
    pub offset: f64,
    pub mu_z: f64,
    pub sigma2: f64,
    pub fp_cost: f64,
    pub fn_cost: f64,
}

impl RiskQuery {
    /// Fills in `z* = log(c_{0,1} / c_{1,0}) - offset`.
    pub fn new(offset: f64, mu_z: f64, sigma2: f64, fp_cost: f64, fn_cost: f64) -> Self {
        Self {
            z_star: decision_logit(fp_cost, fn_cost) - offset,
            offset,
            mu_z,
            sigma2,
            fp_cost,
            fn_cost,
        }
    }
}

/// `log(c_{0,1} / c_{1,0})`, with the zero-cost limits mapped to ±inf.
pub fn decision_logit(fp_cost: f64, fn_cost: f64) -> f64 {
    match (fp_cost == 0.0, fn_cost == 0.0) {
        (true, true) => 0.0,
        (true, false) => f64::NEG_INFINITY,
        (false, true) => f64::INFINITY,
        (false, false) => math::ln(fp_cost / fn_cost),
    }
}

/// Expected misclassification cost of the Bayes classifier once `z` is observed,
/// taken over `z ~ N(mu_z, sigma2)`:
///
/// `c_{1,0} ∫_{-inf}^{z*} g(z + offset) h(z) dz
///  + c_{0,1} [∫_{z*}^{inf} h(z) dz - ∫_{z*}^{inf} g(z + offset) h(z) dz]`.
pub fn conditional_bayes_risk(q: &RiskQuery, pw: &PiecewiseSigmoid) -> Result<f64> {
    if !(q.fp_cost >= 0.0 && q.fn_cost >= 0.0) {
        return Err(Error::InvalidCosts("misclassification costs must be nonnegative".into()));
    }
    if !(q.sigma2 > 0.0) {
        return Err(Error::InvalidInput("variance must be positive".into()));
    }
    if q.fp_cost == 0.0 && q.fn_cost == 0.0 {
        return Ok(0.0);
    }
    let mu = q.mu_z + q.offset;
    let threshold = q.z_star + q.offset;
    let mut risk = 0.0;
    if q.fn_cost > 0.0 {
        risk += q.fn_cost
            * segment_gaussian_expectation(pw, mu, q.sigma2, f64::NEG_INFINITY, threshold)?;
    }
    if q.fp_cost > 0.0 {
        let tail = math::std_normal_sf((threshold - mu) / math::sqrt(q.sigma2));
        let positive =
            segment_gaussian_expectation(pw, mu, q.sigma2, threshold, f64::INFINITY)?;
        risk += q.fp_cost * (tail - positive).max(0.0);
    }
    Ok(risk.max(0.0))
}

/// Bayes risk of classifying right now with class-1 probability `p1`:
/// `min(p1 c_{1,0}, (1 - p1) c_{0,1})`.
pub fn current_bayes_risk(p1: f64, fp_cost: f64, fn_cost: f64) -> f64 {
    let positive = (1.0 - p1) * fp_cost;
    let negative = p1 * fn_cost;
    if negative >= positive {
        positive
    } else {
        negative
    }
}

/// Expected total additional cost `F_{x_{S_i}}(S_j \ S_i)` of acquiring the
/// rest of `S_j` at stage `i` and then classifying with the `S_j` model:
/// the conditional Bayes risk plus the acquisition cost of `S_j \ S_i`.
/// Includes the correct-classification cost, like [`empty_future_cost`].
///
/// `cond` must model the unobserved part of `S_j`'s predictor given `S_i`.
pub fn future_cost(
    seq: &CovariateSequence,
    cond: &ConditionalGaussian,
    x: &[f64],
    stage: usize,
    target: usize,
    costs: &CostModel,
    pw: &PiecewiseSigmoid,
) -> Result<f64> {
    if target <= stage || target >= seq.q() {
        return Err(Error::InvalidStage {
            current: stage,
            target,
        });
    }
    let observed = seq.set(stage);
    if cond.design_set.as_slice() != observed {
        return Err(Error::InvalidInput(format!(
            "conditional observes {:?}, stage {stage} has {:?}",
            cond.design_set, observed
        )));
    }
    let model = seq.model(target)?;
    let offset = model.intercept + model.partial_predictor(x, observed)?;
    let (mu_z, sigma2) = cond.predict(x)?;
    let (fp, fnc) = costs.shifted()?;
    let risk = conditional_bayes_risk(&RiskQuery::new(offset, mu_z, sigma2, fp, fnc), pw)?;
    Ok(costs.correct_cost + risk + costs.set_cost(&seq.difference(stage, target)))
}

/// `F_{x_{S_i}}(∅)`: the Bayes risk of classifying now with the `S_i` model.
pub fn empty_future_cost(
    seq: &CovariateSequence,
    x: &[f64],
    stage: usize,
    costs: &CostModel,
) -> Result<f64> {
    let p1 = seq.model(stage)?.predict_prob(x)?;
    let (fp, fnc) = costs.shifted()?;
    Ok(costs.correct_cost + current_bayes_risk(p1, fp, fnc))
}
