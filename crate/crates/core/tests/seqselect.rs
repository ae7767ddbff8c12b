mod common;

use adacos_core::dataset::{make_folds, CostModel, FoldAssignment};
use adacos_core::gam::{fit_group_lasso_path, LassoOptions, DEFAULT_RIDGE};
use adacos_core::seqselect::{cv_total_cost, forward_select, nested_sets_from_path};
use adacos_core::splines::Features;
use adacos_core::Dataset;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn informative_and_noise(seed: u64, n: usize) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // covariate 1 drives y; covariates 0 and 2 are pure noise
    common::additive_dataset(&mut rng, n, 3, &|x| 2.0 * x[1])
}

#[test]
fn forward_selection_takes_the_informative_covariate_first() {
    let d = informative_and_noise(1, 300);
    let f = Features::build(&d, 10, 3).unwrap();
    let rows: Vec<usize> = (0..d.n()).collect();
    let folds = make_folds(d.n(), 10, 7).unwrap();
    let costs = CostModel::symmetric(vec![1.0, 0.5, 1.0], 20.0, 20.0).unwrap();
    let seq = forward_select(&f, &rows, &costs, &folds, 1.0, DEFAULT_RIDGE).unwrap();
    assert_eq!(seq.order[0], 1);
    assert_eq!(seq.q(), 4);
    for (k, s) in seq.sets.iter().enumerate() {
        assert_eq!(s.len(), k);
    }
    seq.validate(3).unwrap();
    let again = forward_select(&f, &rows, &costs, &folds, 1.0, DEFAULT_RIDGE).unwrap();
    assert_eq!(seq.sets, again.sets);
}

#[test]
fn lasso_path_activates_the_informative_covariate_first() {
    let d = informative_and_noise(2, 300);
    let f = Features::build(&d, 10, 3).unwrap();
    let rows: Vec<usize> = (0..d.n()).collect();
    let costs = CostModel::symmetric(vec![1.0; 3], 1.0, 1.0).unwrap();
    let path = fit_group_lasso_path(&f, &rows, &costs, LassoOptions::default()).unwrap();
    let seq = nested_sets_from_path(&path).unwrap();
    assert_eq!(seq.sets[0], vec![1]);
    for w in seq.sets.windows(2) {
        assert!(w[1].len() == w[0].len() + 1 && w[0].iter().all(|c| w[1].contains(c)));
    }
    for w in seq.activation_lambdas.windows(2) {
        assert!(w[0] >= w[1]);
    }
}

#[test]
fn single_covariate_gives_empty_then_full() {
    let d = informative_and_noise(3, 120);
    let rows: Vec<Vec<f64>> = (0..d.n()).map(|k| vec![d.get(k, 1)]).collect();
    let single = Dataset::from_rows(&rows, d.labels().to_vec()).unwrap();
    let f = Features::build(&single, 10, 3).unwrap();
    let rows: Vec<usize> = (0..single.n()).collect();
    let folds = make_folds(single.n(), 5, 0).unwrap();
    let costs = CostModel::symmetric(vec![1.0], 5.0, 5.0).unwrap();
    let seq = forward_select(&f, &rows, &costs, &folds, 1.0, DEFAULT_RIDGE).unwrap();
    assert_eq!(seq.sets, vec![vec![], vec![0]]);
}

#[test]
fn forward_selection_needs_fn_cost() {
    let d = informative_and_noise(4, 60);
    let f = Features::build(&d, 10, 3).unwrap();
    let rows: Vec<usize> = (0..d.n()).collect();
    let folds = make_folds(d.n(), 5, 0).unwrap();
    let costs = CostModel::new(vec![1.0; 3], 5.0, None, 0.0).unwrap();
    assert!(forward_select(&f, &rows, &costs, &folds, 1.0, DEFAULT_RIDGE).is_err());
}

#[test]
fn estimate_is_plain_average_of_fold_means() {
    // fold 0 holds one sample, fold 1 holds three
    let folds = FoldAssignment {
        fold_of_sample: vec![0, 1, 1, 1],
        k: 2,
        seed: 0,
    };
    let costs = CostModel::symmetric(vec![2.0, 3.0], 10.0, 10.0).unwrap();
    let labels = [1, 0, 0, 1];
    // predictions: 0 (miss), 1 (false alarm), 0, 1
    let probs = [0.2, 0.9, 0.1, 0.8];
    let fold0 = 10.0;
    let fold1 = 10.0 / 3.0;
    let expected = (fold0 + fold1) / 2.0 + 2.0;
    let got = cv_total_cost(&probs, &labels, &folds, &[0], &costs).unwrap();
    assert!((got - expected).abs() < 1e-12);
    // a pooled mean would be 20 / 4 + 2
    assert!((got - 7.0).abs() > 1.0);
}
