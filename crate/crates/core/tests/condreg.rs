mod common;

use adacos_core::condreg::fit_conditional;
use adacos_core::gam::{GamModel, GamTerm};
use adacos_core::math;
use adacos_core::splines::Features;
use adacos_core::Dataset;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Rows `(x0, x1)` with `x1 = x0 + noise_sd · ε`; labels are random.
fn paired(rng: &mut ChaCha8Rng, n: usize, noise_sd: f64) -> Dataset {
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let x0: f64 = rng.gen_range(-2.0..2.0);
        rows.push(vec![x0, x0 + noise_sd * common::normal(rng)]);
        labels.push(u8::from(rng.gen_bool(0.4)));
    }
    Dataset::from_rows(&rows, labels).unwrap()
}

fn target_on(f: &Features, covariate: usize, rng: &mut ChaCha8Rng) -> GamModel {
    let basis = f.basis(covariate).unwrap().clone();
    let coefficients = (0..f.width(covariate)).map(|_| rng.gen_range(-0.5..0.5)).collect();
    GamModel {
        intercept: 0.3,
        terms: vec![GamTerm {
            covariate,
            basis,
            coefficients,
        }],
        smooth_penalty: 0.0,
        ridge: 0.0,
    }
}

#[test]
fn noiseless_target_is_recovered() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let d = paired(&mut rng, 1000, 0.0);
    let f = Features::build(&d, 10, 3).unwrap();
    let target = target_on(&f, 1, &mut rng);
    let rows: Vec<usize> = (0..d.n()).collect();
    let c = fit_conditional(&f, &rows, &[0], &[1], &target).unwrap();
    for k in 0..50 {
        let x = [-1.9 + 3.8 * k as f64 / 49.0, f64::NAN];
        let truth = target.terms[0].contribution(x[0]);
        let (mu, sigma2) = c.predict(&x).unwrap();
        assert!((mu - truth).abs() < 1e-3, "{mu} vs {truth}");
        assert!(sigma2 < 1e-2 && sigma2 > 0.0);
    }
}

#[test]
fn predictive_variance_shrinks_with_more_data() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let d = paired(&mut rng, 1000, 0.0);
    let f = Features::build(&d, 10, 3).unwrap();
    let target = target_on(&f, 1, &mut rng);
    let probe = [0.37, f64::NAN];
    let mut last = f64::INFINITY;
    for n in [50, 100, 200, 400, 800, 1000] {
        let rows: Vec<usize> = (0..n).collect();
        let (_, sigma2) = fit_conditional(&f, &rows, &[0], &[1], &target).unwrap().predict(&probe).unwrap();
        assert!(sigma2 <= last, "n = {n}: {sigma2} > {last}");
        last = sigma2;
    }
}

#[test]
fn predictive_mean_is_calibrated() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let noise = 0.3;
    let d = paired(&mut rng, 2000, noise);
    let f = Features::build(&d, 10, 3).unwrap();
    let target = target_on(&f, 1, &mut rng);
    let rows: Vec<usize> = (0..d.n()).collect();
    let c = fit_conditional(&f, &rows, &[0], &[1], &target).unwrap();
    let probes = 200;
    let mut inside = 0;
    for _ in 0..probes {
        let x0: f64 = rng.gen_range(-1.8..1.8);
        let (mu, sigma2) = c.predict(&[x0, f64::NAN]).unwrap();
        let draws = 400;
        let mean: f64 = (0..draws)
            .map(|_| {
                let x1 = x0 + noise * common::normal(&mut rng);
                target.terms[0].contribution(x1)
            })
            .sum::<f64>()
            / draws as f64;
        inside += usize::from((mean - mu).abs() <= 3.0 * sigma2.sqrt());
    }
    assert!(inside as f64 >= 0.95 * probes as f64, "{inside}/{probes}");
}

#[test]
fn mean_is_affine_in_design_vector() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let d = paired(&mut rng, 300, 0.5);
    let f = Features::build(&d, 10, 3).unwrap();
    let target = target_on(&f, 1, &mut rng);
    let rows: Vec<usize> = (0..d.n()).collect();
    let c = fit_conditional(&f, &rows, &[0], &[1], &target).unwrap();
    for _ in 0..20 {
        let x = [rng.gen_range(-2.0..2.0), f64::NAN];
        let phi = c.design_vector(&x).unwrap();
        let (mu, sigma2) = c.predict(&x).unwrap();
        assert!((mu - math::dot(&c.weights, &phi)).abs() < 1e-12);
        assert!(sigma2 >= c.noise_variance());
        assert_eq!(c.predict(&x).unwrap(), (mu, sigma2));
    }
}

#[test]
fn empty_design_predicts_mean_of_target() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let d = paired(&mut rng, 200, 0.5);
    let f = Features::build(&d, 10, 3).unwrap();
    let target = target_on(&f, 1, &mut rng);
    let rows: Vec<usize> = (0..d.n()).collect();
    let c = fit_conditional(&f, &rows, &[], &[1], &target).unwrap();
    let z_mean = rows.iter().map(|&k| target.terms[0].contribution(d.get(k, 1))).sum::<f64>() / d.n() as f64;
    let (mu, _) = c.predict(&[5.0, -5.0]).unwrap();
    assert!((mu - z_mean).abs() < 1e-9);
    assert_eq!(c.predict(&[f64::NAN, f64::NAN]).unwrap().0, mu);
}

#[test]
fn labels_are_never_read() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let d = paired(&mut rng, 200, 0.5);
    let flipped_labels: Vec<u8> = d.labels().iter().map(|&y| 1 - y).collect();
    let rows_x: Vec<Vec<f64>> = (0..d.n()).map(|k| d.row(k).to_vec()).collect();
    let flipped = Dataset::from_rows(&rows_x, flipped_labels).unwrap();
    let f = Features::build(&d, 10, 3).unwrap();
    let g = Features::build(&flipped, 10, 3).unwrap();
    let target = target_on(&f, 1, &mut rng);
    let rows: Vec<usize> = (0..d.n()).collect();
    let a = fit_conditional(&f, &rows, &[0], &[1], &target).unwrap();
    let b = fit_conditional(&g, &rows, &[0], &[1], &target).unwrap();
    assert_eq!(a, b);
}

#[test]
fn rejects_overlap_and_empty_rows() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let d = paired(&mut rng, 50, 0.5);
    let f = Features::build(&d, 10, 3).unwrap();
    let target = target_on(&f, 1, &mut rng);
    let rows: Vec<usize> = (0..d.n()).collect();
    assert!(fit_conditional(&f, &rows, &[0, 1], &[1], &target).is_err());
    assert!(fit_conditional(&f, &[], &[0], &[1], &target).is_err());
}
