//! Per-covariate B-spline transforms with quantile knots, standardized so each
//! basis column has mean 0 and standard deviation 1 on the training values.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::math;
use crate::Label;

pub const DEFAULT_BASIS_SIZE: usize = 10;
pub const DEFAULT_DEGREE: usize = 3;

const MAX_DEGREE: usize = 15;

// Raw basis columns with a smaller spread than this are treated as constant.
const MIN_SCALE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplineBasis {
    degree: usize,
    /// Clamped knot vector: boundary knots repeated `degree + 1` times.
    knots: Vec<f64>,
    /// Indices of the raw basis functions that survive standardization.
    kept: Vec<usize>,
    means: Vec<f64>,
    scales: Vec<f64>,
    domain: (f64, f64),
}

impl SplineBasis {
    /// Builds the basis for one training column.
    ///
    /// `s` is the requested number of basis functions. Columns with fewer
    /// than `s` distinct values get `s = distinct` (at least 2, so one
    /// non-constant direction remains after centering) and a degree capped at
    /// `s - 1`. Knots that collapse onto each other are merged and constant
    /// basis columns dropped, so [`Self::s`] can end up below the request.
    pub fn build(values: &[f64], s: usize, degree: usize) -> Result<Self> {
        if s == 0 {
            return Err(Error::InvalidInput("basis size must be at least 1".into()));
        }
        let mut sorted: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
        if sorted.is_empty() {
            return Err(Error::InvalidInput("no finite values to build a basis on".into()));
        }
        sorted.sort_by(f64::total_cmp);
        let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);
        let mut distinct = sorted.clone();
        distinct.dedup();
        if distinct.len() < 2 {
            return Err(Error::ConstantColumn);
        }

        let s_eff = s.min(distinct.len()).max(2);
        let degree = degree.min(s_eff - 1).min(MAX_DEGREE);
        let n_interior = s_eff - degree - 1;

        let tol = 1e-12 * (hi - lo);
        let mut interior: Vec<f64> = Vec::with_capacity(n_interior);
        for j in 1..=n_interior {
            let q = quantile(&sorted, j as f64 / (n_interior + 1) as f64);
            let fresh = interior.last().is_none_or(|&last| q - last > tol);
            if q - lo > tol && hi - q > tol && fresh {
                interior.push(q);
            }
        }

        let mut knots = vec![lo; degree + 1];
        knots.extend_from_slice(&interior);
        knots.extend(core::iter::repeat_n(hi, degree + 1));

        let mut basis = SplineBasis {
            degree,
            knots,
            kept: Vec::new(),
            means: Vec::new(),
            scales: Vec::new(),
            domain: (lo, hi),
        };
        let n_raw = basis.raw_len();
        let n = sorted.len() as f64;
        let mut sum = vec![0.0; n_raw];
        let mut sum_sq = vec![0.0; n_raw];
        let mut raw = vec![0.0; n_raw];
        for &v in values.iter().filter(|v| v.is_finite()) {
            basis.raw_into(v, &mut raw);
            for (t, r) in raw.iter().enumerate() {
                sum[t] += r;
                sum_sq[t] += r * r;
            }
        }
        for t in 0..n_raw {
            let mean = sum[t] / n;
            let var = (sum_sq[t] / n - mean * mean).max(0.0);
            let scale = math::sqrt(var);
            if scale > MIN_SCALE {
                basis.kept.push(t);
                basis.means.push(mean);
                basis.scales.push(scale);
            }
        }
        if basis.kept.is_empty() {
            return Err(Error::ConstantColumn);
        }
        Ok(basis)
    }

    /// Number of standardized basis functions.
    pub fn s(&self) -> usize {
        self.kept.len()
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    /// Number of raw (unstandardized) B-spline functions.
    pub fn raw_len(&self) -> usize {
        self.knots.len() - self.degree - 1
    }

    /// Unstandardized B-spline values at `x` (clamped to the domain).
    pub fn raw(&self, x: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.raw_len()];
        self.raw_into(x, &mut out);
        out
    }

    fn raw_into(&self, x: f64, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        let x = x.clamp(self.domain.0, self.domain.1);
        let p = self.degree;
        let span = self.find_span(x);
        // Cox-de Boor triangle for the p + 1 functions that are nonzero on `span`.
        let mut n = [0.0f64; 16];
        let mut left = [0.0f64; 16];
        let mut right = [0.0f64; 16];
        n[0] = 1.0;
        for j in 1..=p {
            left[j] = x - self.knots[span + 1 - j];
            right[j] = self.knots[span + j] - x;
            let mut saved = 0.0;
            for r in 0..j {
                let denom = right[r + 1] + left[j - r];
                let temp = if denom > 0.0 { n[r] / denom } else { 0.0 };
                n[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            n[j] = saved;
        }
        for (j, value) in n.iter().take(p + 1).enumerate() {
            out[span - p + j] = *value;
        }
    }

    fn find_span(&self, x: f64) -> usize {
        let n_raw = self.raw_len();
        if x >= self.knots[n_raw] {
            return n_raw - 1;
        }
        // last index i in [degree, n_raw - 1] with knots[i] <= x
        let mut span = self.degree;
        while span + 1 < n_raw && self.knots[span + 1] <= x {
            span += 1;
        }
        span
    }

    /// Standardized basis values `(raw(x) - mean) / scale` for the kept functions.
    pub fn transform(&self, x: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.s()];
        self.transform_into(x, &mut out);
        out
    }

    pub fn transform_into(&self, x: f64, out: &mut [f64]) {
        let raw = self.raw(x);
        for (slot, ((&t, &m), &sc)) in out
            .iter_mut()
            .zip(self.kept.iter().zip(&self.means).zip(&self.scales))
        {
            *slot = (raw[t] - m) / sc;
        }
    }
}

/// Spline bases for every covariate of a training set plus the standardized
/// feature blocks of its rows, computed once and shared by all fits.
#[derive(Debug, Clone)]
pub struct Features {
    bases: Vec<Option<SplineBasis>>,
    /// Per covariate: row-major `n x s_i` block (empty when the column is constant).
    blocks: Vec<Vec<f64>>,
    labels: Vec<Label>,
}

impl Features {
    /// Builds one basis per column. Constant columns get no basis and
    /// contribute no features.
    pub fn build(d: &Dataset, s: usize, degree: usize) -> Result<Self> {
        if d.has_missing() {
            return Err(Error::InvalidInput("impute missing cells before building features".into()));
        }
        let mut bases = Vec::with_capacity(d.p());
        for j in 0..d.p() {
            match SplineBasis::build(&d.column(j), s, degree) {
                Ok(b) => bases.push(Some(b)),
                Err(Error::ConstantColumn) => bases.push(None),
                Err(e) => return Err(e),
            }
        }
        Ok(Self::with_bases(d, bases))
    }

    /// Evaluates existing bases on the rows of `d`.
    pub fn with_bases(d: &Dataset, bases: Vec<Option<SplineBasis>>) -> Self {
        let blocks = bases
            .iter()
            .enumerate()
            .map(|(j, basis)| match basis {
                Some(b) => {
                    let mut block = vec![0.0; d.n() * b.s()];
                    for k in 0..d.n() {
                        b.transform_into(d.get(k, j), &mut block[k * b.s()..(k + 1) * b.s()]);
                    }
                    block
                }
                None => Vec::new(),
            })
            .collect();
        Self {
            bases,
            blocks,
            labels: d.labels().to_vec(),
        }
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn p(&self) -> usize {
        self.bases.len()
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn bases(&self) -> &[Option<SplineBasis>] {
        &self.bases
    }

    pub fn basis(&self, j: usize) -> Option<&SplineBasis> {
        self.bases[j].as_ref()
    }

    /// Number of features of covariate `j` (0 for constant columns).
    pub fn width(&self, j: usize) -> usize {
        self.bases[j].as_ref().map_or(0, SplineBasis::s)
    }

    /// Standardized features of covariate `j` for row `k`.
    pub fn row_block(&self, j: usize, k: usize) -> &[f64] {
        let w = self.width(j);
        &self.blocks[j][k * w..(k + 1) * w]
    }
}

/// Convenience wrapper with the default cubic degree.
pub fn build_basis(values: &[f64], s: usize, degree: usize) -> Result<SplineBasis> {
    SplineBasis::build(values, s, degree)
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let below = pos as usize;
    let frac = pos - below as f64;
    if below + 1 >= sorted.len() {
        sorted[sorted.len() - 1]
    } else {
        sorted[below] * (1.0 - frac) + sorted[below + 1] * frac
    }
}
