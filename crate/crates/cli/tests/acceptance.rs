//! Acceptance checks. Each test prints one `PASS` or `FAIL` line and then
//! asserts, so `cargo test --test acceptance -- --nocapture` gives a summary.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::path::PathBuf;

use adacos::{load_costs, load_dataset, run_experiment, ExperimentConfig, ExperimentReport};
use adacos_core::dataset::ColumnMeans;
use adacos_core::gam::{fit_group_lasso_path, GroupLassoProblem, LassoOptions, DEFAULT_RIDGE};
use adacos_core::math;
use adacos_core::oracle::{fixed_subset_policy, policy_expected_loss, random_policy, solve_exact};
use adacos_core::pipeline::train_bundle;
use adacos_core::riskcore::{
    conditional_bayes_risk, decision_logit, segment_gaussian_expectation, PiecewiseSigmoid, RiskQuery,
};
use adacos_core::seqselect::nested_sets_from_path;
use adacos_core::splines::Features;
use adacos_core::{CostModel, Dataset, Mode, Selection, TrainConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(criterion: u32, ok: bool, detail: &str) {
    println!("{} criterion {criterion}: {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {criterion} failed: {detail}");
}

fn data_path(file: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(file)
}

fn pima() -> Dataset {
    load_dataset(&data_path("pima.csv"), "class").unwrap()
}

fn breast_cancer() -> Dataset {
    load_dataset(&data_path("breast_cancer.csv"), "class").unwrap()
}

fn evaluate(data: &Dataset, costs: &CostModel, modes: Vec<Mode>, train: TrainConfig) -> ExperimentReport {
    let config = ExperimentConfig {
        modes,
        outer_folds: 5,
        seed: 0,
        train,
    };
    run_experiment("acceptance", data, costs, &config).unwrap().report
}

#[test]
fn criterion_01_segment_integrals() {
    let pw = PiecewiseSigmoid::new(40).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let mu = rng.gen_range(-20.0..20.0);
        let sigma: f64 = rng.gen_range(0.05..20.0);
        let a = rng.gen_range(-30.0..30.0);
        let b = if rng.gen_bool(0.1) { f64::INFINITY } else { a + rng.gen_range(0.0..30.0) };
        let a = if rng.gen_bool(0.1) { f64::NEG_INFINITY } else { a };
        let closed = segment_gaussian_expectation(&pw, mu, sigma * sigma, a, b).unwrap();
        let quad = common::quadrature_expectation(&pw, mu, sigma * sigma, a, b);
        let err = (closed - quad).abs();
        // subnormal results carry fewer than 53 bits, so scale from the smallest normal
        let rel = err / closed.abs().max(quad.abs()).max(f64::MIN_POSITIVE);
        worst = worst.max(rel);
    }
    report(1, worst <= 1e-8, &format!("1000 segment integrals, worst relative error {worst:.2e} (limit 1e-8)"));
}

#[test]
fn criterion_02_sigmoid_approximation() {
    let pw = PiecewiseSigmoid::new(40).unwrap();
    let c = (std::f64::consts::PI / 8.0).sqrt();
    let (mut worst_pw, mut worst_probit) = (0.0f64, 0.0f64);
    let steps = 40_000;
    for i in 0..=steps {
        let u = -20.0 + 40.0 * i as f64 / steps as f64;
        let g = math::sigmoid(u);
        worst_pw = worst_pw.max((pw.eval(u) - g).abs());
        worst_probit = worst_probit.max((math::std_normal_cdf(c * u) - g).abs());
    }
    report(
        2,
        worst_pw < worst_probit,
        &format!("max error piecewise {worst_pw:.3e} vs probit {worst_probit:.3e}"),
    );
}

#[test]
fn criterion_03_bayes_risk_monte_carlo() {
    let pw = PiecewiseSigmoid::new(40).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut failures = 0;
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let q = RiskQuery::new(
            rng.gen_range(-3.0..3.0),
            rng.gen_range(-3.0..3.0),
            rng.gen_range(0.05..9.0),
            rng.gen_range(0.5..10.0),
            rng.gen_range(0.5..10.0),
        );
        let exact = conditional_bayes_risk(&q, &pw).unwrap();
        let (mc, _) = common::mc_risk(&q, &pw, 1_000_000, &mut rng);
        let err = (exact - mc).abs();
        let ok = err <= 0.01 * exact.abs() || err <= 1e-4;
        failures += usize::from(!ok);
        worst = worst.max(err / exact.abs().max(1e-4));
    }
    report(
        3,
        failures == 0,
        &format!("100 risk queries vs 1e6-sample Monte Carlo, {failures} outside 1% / 1e-4, worst scaled error {worst:.2e}"),
    );
}

#[test]
fn criterion_04_oracle_optimality() {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut violations = 0;
    for i in 0..100 {
        let p = 1 + i % 3;
        let inst = common::random_binary_instance(&mut rng, p);
        let opt = solve_exact(&inst).expected_loss;
        for subset in 0..(1u32 << p) {
            let loss = policy_expected_loss(&inst, &fixed_subset_policy(&inst, subset)).unwrap();
            violations += usize::from(opt > loss + 1e-10);
        }
        for _ in 0..1000 {
            let loss = policy_expected_loss(&inst, &random_policy(&inst, &mut rng)).unwrap();
            violations += usize::from(opt > loss + 1e-10);
        }
    }
    report(
        4,
        violations == 0,
        &format!("100 instances (p <= 3), fixed subsets and 1000 random policies each, {violations} beat the optimum"),
    );
}

fn kkt_check(name: &str, d: &Dataset, costs: &CostModel) -> (f64, bool) {
    let imputed = ColumnMeans::fit(d).unwrap().apply(d);
    let f = Features::build(&imputed, 10, 3).unwrap();
    let rows: Vec<usize> = (0..imputed.n()).collect();
    let path = fit_group_lasso_path(&f, &rows, costs, LassoOptions::default()).unwrap();
    let problem = GroupLassoProblem::new(&f, &rows, costs, DEFAULT_RIDGE).unwrap();
    let worst = path
        .solutions
        .iter()
        .map(|s| problem.kkt_residual(s.lambda, s.intercept, &s.coefficients).max(s.kkt_residual))
        .fold(0.0f64, f64::max);
    let empty_at_max = path.solutions[0].lambda == path.lambda_max() && path.solutions[0].active_groups().is_empty();
    nested_sets_from_path(&path).unwrap();
    println!("  {name}: {} path points, worst KKT residual {worst:.2e}", path.solutions.len());
    (worst, empty_at_max && path.truncated_at.is_none())
}

#[test]
fn criterion_05_group_lasso_kkt() {
    let pima = pima();
    let pima_costs = load_costs(&data_path("pima_costs.json"), pima.names()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let a = common::additive_dataset(&mut rng, 500, 5, &|x| 0.5 * x[0] - (1.3 * x[1]).sin() + 0.2 * x[3] * x[3]);
    let b = common::additive_dataset(&mut rng, 800, 8, &|x| -0.4 + x[2] + 0.5 * x[5] - 0.1 * x[7]);
    let cases = [
        ("pima", pima, pima_costs),
        ("synthetic A", a, CostModel::symmetric(vec![1.0, 2.0, 0.5, 1.0, 3.0], 1.0, 1.0).unwrap()),
        ("synthetic B", b, CostModel::symmetric(vec![1.0; 8], 1.0, 1.0).unwrap()),
    ];
    let mut worst = 0.0f64;
    let mut all_empty = true;
    for (name, d, c) in &cases {
        let (w, empty) = kkt_check(name, d, c);
        worst = worst.max(w);
        all_empty &= empty;
    }
    report(
        5,
        worst <= 1e-5 && all_empty,
        &format!("worst KKT residual {worst:.2e} (limit 1e-5), all groups zero at lambda_max: {all_empty}"),
    );
}

#[test]
fn criterion_06_pima_reproduction() {
    let data = pima();
    let base = load_costs(&data_path("pima_costs.json"), data.names()).unwrap();
    let train = TrainConfig {
        selection: Selection::Forward,
        ..TrainConfig::default()
    };
    let mut ok = true;
    let mut detail = Vec::new();
    for (cost, lo, hi) in [(400.0, 50.2, 87.5), (800.0, 120.84, 193.86)] {
        let costs = CostModel::new(base.covariate_costs.clone(), cost, Some(cost), -50.0).unwrap();
        let r = evaluate(&data, &costs, vec![Mode::Adacos], train.clone());
        let got = r.mode(Mode::Adacos).unwrap().mean("avg_total_cost");
        ok &= (lo..=hi).contains(&got);
        detail.push(format!("cost {cost}: {got:.2} in [{lo}, {hi}]"));
    }
    report(6, ok, &detail.join(", "));
}

#[test]
fn criterion_07_adacos_beats_full_model() {
    let data = pima();
    let mut wins = 0;
    let mut detail = Vec::new();
    for fp in [1.0, 5.0, 10.0, 50.0] {
        let costs = CostModel::symmetric(vec![1.0; 8], fp, 10.0 * fp).unwrap();
        let r = evaluate(&data, &costs, vec![Mode::Adacos, Mode::Full], TrainConfig::default());
        let ada = r.mode(Mode::Adacos).unwrap().mean("avg_total_cost");
        let full = r.mode(Mode::Full).unwrap().mean("avg_total_cost");
        wins += usize::from(ada <= full);
        detail.push(format!("fp {fp}: {ada:.3} vs {full:.3}"));
    }
    report(7, wins >= 3, &format!("AdaCOS <= full model at {wins}/4 points ({})", detail.join(", ")));
}

#[test]
fn criterion_08_recall_guarantee() {
    let mut ok = true;
    let mut detail = Vec::new();
    for (name, data) in [("pima", pima()), ("breast cancer", breast_cancer())] {
        for fp in [1.0, 10.0, 100.0] {
            let costs = CostModel::new(vec![1.0; data.p()], fp, None, 0.0).unwrap();
            let train = TrainConfig {
                target_recall: Some(0.95),
                ..TrainConfig::default()
            };
            let r = evaluate(&data, &costs, vec![Mode::Adacos], train);
            let joint = r.training_joint_recall.iter().copied().fold(f64::INFINITY, f64::min);
            let test = r.mode(Mode::Adacos).unwrap().mean("recall");
            ok &= r.training_joint_recall.len() == 5 && joint >= 0.95 && test >= 0.92;
            detail.push(format!("{name} fp {fp}: train {joint:.3}, test {test:.3}"));
        }
    }
    report(8, ok, &format!("joint training recall >= 0.95 and test recall >= 0.92 ({})", detail.join("; ")));
}

#[test]
fn criterion_09_adaptivity_benefit() {
    let data = pima();
    let costs = CostModel::symmetric(vec![1.0; 8], 50.0, 500.0).unwrap();
    let r = evaluate(&data, &costs, vec![Mode::Adacos, Mode::Cos], TrainConfig::default());
    let ada = r.mode(Mode::Adacos).unwrap();
    let cos = r.mode(Mode::Cos).unwrap();
    let (na, nc) = (ada.mean("avg_num_covariates"), cos.mean("avg_num_covariates"));
    let gap = (ada.mean("weighted_accuracy") - cos.mean("weighted_accuracy")).abs();
    report(
        9,
        na < nc && gap < 0.02,
        &format!("covariates AdaCOS {na:.3} vs COS {nc:.3}, weighted accuracy gap {gap:.4} (limit 0.02)"),
    );
}

#[test]
fn criterion_10_property_suite() {
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let mut checks = Vec::new();

    // decision rule: cost, probability and logit forms agree
    let mut agree = true;
    for _ in 0..10_000 {
        let p1: f64 = rng.gen_range(0.001..0.999);
        let fp = rng.gen_range(0.1..10.0);
        let fnc = rng.gen_range(0.1..10.0);
        if (p1 - fp / (fp + fnc)).abs() > 1e-12 {
            let by_costs = p1 * fnc >= (1.0 - p1) * fp;
            agree &= by_costs == (p1 >= fp / (fp + fnc));
            agree &= by_costs == (math::logit(p1) >= decision_logit(fp, fnc));
        }
    }
    checks.push(("decision rule equivalence", agree));

    // gradient of the smooth part against central differences
    let d = common::additive_dataset(&mut rng, 80, 3, &|x| x[0] - 0.5 * x[2]);
    let f = Features::build(&d, 6, 3).unwrap();
    let rows: Vec<usize> = (0..d.n()).collect();
    let costs = CostModel::symmetric(vec![1.0; 3], 1.0, 1.0).unwrap();
    let problem = GroupLassoProblem::new(&f, &rows, &costs, 0.01).unwrap();
    let beta: Vec<Vec<f64>> = (0..3).map(|j| (0..f.width(j)).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let (_, g) = problem.smooth_gradient(0.2, &beta);
    let mut grad_ok = true;
    for j in 0..3 {
        for k in 0..beta[j].len() {
            let (mut plus, mut minus) = (beta.clone(), beta.clone());
            plus[j][k] += 1e-5;
            minus[j][k] -= 1e-5;
            let fd = (problem.smooth_value(0.2, &plus) - problem.smooth_value(0.2, &minus)) / 2e-5;
            grad_ok &= (fd - g[j][k]).abs() <= 1e-5 * g[j][k].abs().max(1.0);
        }
    }
    checks.push(("gradient check", grad_ok));

    // nesting, trace additivity and determinism on a trained bundle
    let data = common::additive_dataset(&mut rng, 300, 4, &|x| 1.5 * x[0] + (2.0 * x[1]).sin() - 0.3);
    let costs = CostModel::symmetric(vec![1.0, 0.5, 2.0, 1.0], 10.0, 30.0).unwrap();
    let config = TrainConfig {
        inner_folds: 5,
        ..TrainConfig::default()
    };
    let bundle = train_bundle(&data, &costs, &config).unwrap();
    let sets = &bundle.sequence().sets;
    let nested = sets.windows(2).all(|w| w[0].iter().all(|c| w[1].contains(c)) && w[0].len() < w[1].len());
    checks.push(("nested sequence", nested));

    let mut additive = true;
    for mode in [Mode::Adacos, Mode::Cos, Mode::Full] {
        for mut t in bundle.classify_dataset(mode, &data).unwrap() {
            let total = t.settle(data.label(t.sample), &costs).unwrap();
            let bought = t.acquired_covariates();
            additive &= (t.covariate_cost - costs.set_cost(&bought)).abs() < 1e-12;
            additive &= (total - t.covariate_cost - t.misclassification_cost.unwrap()).abs() < 1e-12;
            if mode == Mode::Adacos {
                additive &= t.final_stage.map_or(bought.is_empty(), |s| {
                    let mut set = sets[s].clone();
                    set.sort_unstable();
                    set == bought
                });
            }
        }
    }
    checks.push(("trace additivity and prefix structure", additive));

    let again = train_bundle(&data, &costs, &config).unwrap();
    checks.push(("deterministic training", again == bundle));

    let failed: Vec<&str> = checks.iter().filter(|(_, ok)| !ok).map(|(n, _)| *n).collect();
    let names: Vec<&str> = checks.iter().map(|(n, _)| *n).collect();
    report(
        10,
        failed.is_empty(),
        &format!("{} property checks ({}), failed: {:?}", checks.len(), names.join(", "), failed),
    );
}
