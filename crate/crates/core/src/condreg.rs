//! Gaussian model of the unobserved part of the linear predictor given the
//! observed covariates, fit by conjugate Bayesian linear regression.
//!
//! For covariates `S` still to be acquired and observed covariates `A`, the
//! response is `z = Σ_{i∈S} β_iᵀ f_i(x_i)` under a fixed classifier, and the
//! regressors are the spline features of `A`. Weights get a
//! `N(0, g σ² I)` prior (flat on the intercept), the noise a scaled
//! inverse-χ² prior. The Student-t predictive is replaced by the Gaussian with
//! the same mean and variance.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gam::GamModel;
use crate::math;
use crate::splines::{Features, SplineBasis};

pub const PRIOR_SCALE_G: f64 = 100.0;
pub const PRIOR_NU: f64 = 3.0;
const MIN_PRIOR_VARIANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalGaussian {
    /// Observed covariates `A` (ascending).
    pub design_set: Vec<usize>,
    /// Covariates whose contribution is the response (ascending).
    pub target_set: Vec<usize>,
    /// Covariates of `A` that carry features, with their bases.
    pub regressors: Vec<(usize, SplineBasis)>,
    /// Posterior mean of `[intercept, weights…]`.
    pub weights: Vec<f64>,
    /// Inverse posterior precision, row-major.
    pub precision_inv: Vec<f64>,
    pub nu_n: f64,
    pub s2_n: f64,
}

impl ConditionalGaussian {
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// Design vector `[1, f_a(x_a)…]` for a full-length observation row.
    pub fn design_vector(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut phi = Vec::with_capacity(self.dim());
        phi.push(1.0);
        for (j, basis) in &self.regressors {
            let v = *x.get(*j).ok_or(Error::MissingCovariate(*j))?;
            if v.is_nan() {
                return Err(Error::MissingCovariate(*j));
            }
            phi.extend(basis.transform(v));
        }
        Ok(phi)
    }

    /// Posterior-mean noise variance `ν_n s_n² / (ν_n - 2)`.
    pub fn noise_variance(&self) -> f64 {
        self.nu_n / (self.nu_n - 2.0) * self.s2_n
    }

    /// `(μ_z, σ²)` of the predictive distribution.
    pub fn predict(&self, x: &[f64]) -> Result<(f64, f64)> {
        let phi = self.design_vector(x)?;
        self.predict_design(&phi)
    }

    fn predict_design(&self, phi: &[f64]) -> Result<(f64, f64)> {
        if self.nu_n <= 2.0 {
            return Err(Error::Numerical(format!(
                "predictive variance undefined for {} degrees of freedom",
                self.nu_n
            )));
        }
        let d = self.dim();
        let mu = math::dot(&self.weights, phi);
        let mut quad = 0.0;
        for a in 0..d {
            quad += phi[a] * math::dot(&self.precision_inv[a * d..(a + 1) * d], phi);
        }
        let sigma2 = self.noise_variance() * (1.0 + quad.max(0.0));
        Ok((mu, sigma2))
    }
}

/// `(μ_z, σ²)` for observation row `x`.
pub fn predict_conditional(c: &ConditionalGaussian, x: &[f64]) -> Result<(f64, f64)> {
    c.predict(x)
}

/// Fits `p(z | x_A)` on training `rows` with `z` built from `target`'s
/// coefficients on `target_set`. Labels are not read.
pub fn fit_conditional(
    features: &Features,
    rows: &[usize],
    design_set: &[usize],
    target_set: &[usize],
    target: &GamModel,
) -> Result<ConditionalGaussian> {
    if rows.is_empty() {
        return Err(Error::InvalidInput("cannot fit a conditional on zero rows".into()));
    }
    let mut design: Vec<usize> = design_set.to_vec();
    design.sort_unstable();
    design.dedup();
    let mut targets: Vec<usize> = target_set.to_vec();
    targets.sort_unstable();
    targets.dedup();
    if let Some(c) = design.iter().find(|c| targets.contains(c)) {
        return Err(Error::InvalidInput(format!(
            "covariate {c} is both observed and a regression target"
        )));
    }

    let z: Vec<f64> = rows
        .iter()
        .map(|&k| {
            target
                .terms
                .iter()
                .filter(|t| targets.contains(&t.covariate))
                .map(|t| math::dot(&t.coefficients, features.row_block(t.covariate, k)))
                .sum()
        })
        .collect();

    let regressors: Vec<(usize, SplineBasis)> = design
        .iter()
        .filter_map(|&j| features.basis(j).map(|b| (j, b.clone())))
        .collect();
    let d = 1 + regressors.iter().map(|(j, _)| features.width(*j)).sum::<usize>();
    let n = rows.len();

    let mut xtx = DMatrix::<f64>::zeros(d, d);
    let mut xtz = DVector::<f64>::zeros(d);
    let mut phi = vec![0.0; d];
    let fill = |k: usize, phi: &mut [f64]| {
        phi[0] = 1.0;
        let mut off = 1;
        for (j, _) in &regressors {
            let block = features.row_block(*j, k);
            phi[off..off + block.len()].copy_from_slice(block);
            off += block.len();
        }
    };
    for (r, &k) in rows.iter().enumerate() {
        fill(k, &mut phi);
        for a in 0..d {
            xtz[a] += phi[a] * z[r];
            for b in a..d {
                xtx[(a, b)] += phi[a] * phi[b];
            }
        }
    }
    for a in 0..d {
        for b in 0..a {
            xtx[(a, b)] = xtx[(b, a)];
        }
    }
    let mut precision = xtx;
    for a in 1..d {
        precision[(a, a)] += 1.0 / PRIOR_SCALE_G;
    }
    let chol = precision
        .cholesky()
        .ok_or_else(|| Error::Numerical("posterior precision is not positive definite".into()))?;
    let mean = chol.solve(&xtz);
    let inv = chol.inverse();

    // ν_n s_n² = ν₀ s₀² + ||z - X m||² + mᵀ P₀ m, which equals
    // ν₀ s₀² + zᵀz - mᵀ Λ_n m without the cancellation.
    let mut rss = 0.0;
    for (r, &k) in rows.iter().enumerate() {
        fill(k, &mut phi);
        let resid = z[r] - phi.iter().zip(mean.iter()).map(|(a, b)| a * b).sum::<f64>();
        rss += resid * resid;
    }
    let prior_term: f64 = mean.iter().skip(1).map(|m| m * m / PRIOR_SCALE_G).sum();
    let s0 = if n >= 2 {
        let sd = math::sample_sd(&z);
        sd * sd
    } else {
        0.0
    }
    .max(MIN_PRIOR_VARIANCE);
    let nu_n = PRIOR_NU + n as f64 - 1.0;
    let s2_n = (PRIOR_NU * s0 + rss + prior_term) / nu_n;

    let mut precision_inv = vec![0.0; d * d];
    for a in 0..d {
        for b in 0..d {
            precision_inv[a * d + b] = inv[(a, b)];
        }
    }
    Ok(ConditionalGaussian {
        design_set: design,
        target_set: targets,
        regressors,
        weights: mean.iter().copied().collect(),
        precision_inv,
        nu_n,
        s2_n,
    })
}
