//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use adacos_core::dataset::CostModel;
use adacos_core::math;
use adacos_core::oracle::DiscreteInstance;
use adacos_core::riskcore::{PiecewiseSigmoid, RiskQuery};
use adacos_core::Dataset;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const KRONROD_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for the odd-indexed Kronrod nodes
const GAUSS_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// (Kronrod estimate, |Kronrod - Gauss|) on `[a, b]`.
fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut kronrod = 0.0;
    let mut gauss = 0.0;
    for (i, (&x, &wk)) in GK_NODES.iter().zip(&KRONROD_WEIGHTS).enumerate() {
        let fx = if x == 0.0 { f(c) } else { f(c - h * x) + f(c + h * x) };
        kronrod += wk * fx;
        if i % 2 == 1 {
            gauss += GAUSS_WEIGHTS[i / 2] * fx;
        }
    }
    (h * kronrod, (h * (kronrod - gauss)).abs())
}

fn adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let (k, err) = gk15(f, a, b);
    if err <= tol || depth == 0 {
        return k;
    }
    let m = 0.5 * (a + b);
    adaptive(f, a, m, tol / 2.0, depth - 1) + adaptive(f, m, b, tol / 2.0, depth - 1)
}

/// Adaptive Gauss-Kronrod quadrature of a smooth integrand on `[a, b]` to
/// relative accuracy `rel`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rel: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    // magnitude from a fixed 64-panel pass, so the tolerance stays relative
    let panels = 64;
    let w = (b - a) / panels as f64;
    let scale: f64 = (0..panels)
        .map(|i| gk15(&|u| f(u).abs(), a + w * i as f64, a + w * (i + 1) as f64).0)
        .sum();
    if scale == 0.0 {
        return 0.0;
    }
    adaptive(f, a, b, rel * scale, 40)
}

pub fn normal_pdf(u: f64, mu: f64, sigma: f64) -> f64 {
    let r = (u - mu) / sigma;
    (-0.5 * r * r).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
}

/// `∫_a^b approx(u) N(u; mu, sigma2) du` by quadrature, split at every
/// breakpoint so each piece is smooth; infinite bounds are cut at `mu ± 40σ`.
pub fn quadrature_expectation(pw: &PiecewiseSigmoid, mu: f64, sigma2: f64, a: f64, b: f64) -> f64 {
    let sigma = sigma2.sqrt();
    let lo = a.max(mu - 40.0 * sigma);
    let hi = b.min(mu + 40.0 * sigma);
    if hi <= lo {
        return 0.0;
    }
    let mut cuts = vec![lo];
    cuts.extend(pw.breakpoints().iter().copied().filter(|&t| t.is_finite() && t > lo && t < hi));
    cuts.push(hi);
    let f = |u: f64| pw.eval(u) * normal_pdf(u, mu, sigma);
    cuts.windows(2).map(|w| integrate(&f, w[0], w[1], 1e-12)).sum()
}

/// Monte-Carlo estimate of the conditional Bayes risk with the same
/// piecewise sigmoid: returns (mean, standard error).
pub fn mc_risk<R: Rng>(q: &RiskQuery, pw: &PiecewiseSigmoid, samples: usize, rng: &mut R) -> (f64, f64) {
    let sigma = q.sigma2.sqrt();
    let mut sum = 0.0;
    let mut sum2 = 0.0;
    for _ in 0..samples {
        let e: f64 = StandardNormal.sample(rng);
        let z = q.mu_z + sigma * e;
        let p1 = pw.eval(z + q.offset);
        let cost = if z >= q.z_star { (1.0 - p1) * q.fp_cost } else { p1 * q.fn_cost };
        sum += cost;
        sum2 += cost * cost;
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = (sum2 / n - mean * mean).max(0.0);
    (mean, (var / n).sqrt())
}

pub fn normal<R: Rng>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Random instance with binary alphabets and a Dirichlet(1)-like pmf.
pub fn random_binary_instance<R: Rng>(rng: &mut R, p: usize) -> DiscreteInstance {
    let cells = 2usize.pow(p as u32) * 2;
    let raw: Vec<f64> = (0..cells).map(|_| -rng.gen::<f64>().max(1e-300).ln()).collect();
    let total: f64 = raw.iter().sum();
    let mut pmf: Vec<f64> = raw.iter().map(|v| v / total).collect();
    let drift: f64 = 1.0 - pmf.iter().sum::<f64>();
    pmf[0] += drift;
    let costs = CostModel::new(
        (0..p).map(|_| rng.gen_range(0.0..3.0)).collect(),
        rng.gen_range(0.5..10.0),
        Some(rng.gen_range(0.5..10.0)),
        0.0,
    )
    .unwrap();
    DiscreteInstance::new(vec![2; p], pmf, costs).unwrap()
}

/// `y ~ Bernoulli(g(eta(x)))` with `x ~ Uniform(-2, 2)^p`.
pub fn additive_dataset<R: Rng>(rng: &mut R, n: usize, p: usize, eta: &dyn Fn(&[f64]) -> f64) -> Dataset {
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let x: Vec<f64> = (0..p).map(|_| rng.gen_range(-2.0..2.0)).collect();
        labels.push(u8::from(rng.gen::<f64>() < math::sigmoid(eta(&x))));
        rows.push(x);
    }
    Dataset::from_rows(&rows, labels).unwrap()
}
