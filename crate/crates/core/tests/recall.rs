use adacos_core::recall::{
    empirical_recall, implicit_fn_cost, solve_threshold, solve_threshold_adaptive, RecallSolve,
};
use proptest::prelude::*;

/// Largest observed score whose recall still meets `r`.
fn scan(scores: &[f64], r: f64) -> f64 {
    let n = scores.len() as f64;
    scores
        .iter()
        .copied()
        .filter(|&t| scores.iter().filter(|&&s| s >= t).count() as f64 / n >= r)
        .fold(f64::NEG_INFINITY, f64::max)
}

fn scores(n: std::ops::Range<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.001f64..0.999, n)
}

fn score_sets() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1usize..40, 1usize..5).prop_flat_map(|(n, q)| prop::collection::vec(prop::collection::vec(0.001f64..0.999, n), q))
}

#[test]
fn examples() {
    assert_eq!(solve_threshold(&[0.9, 0.8, 0.6, 0.4], 0.75).unwrap(), 0.6);
    assert_eq!(solve_threshold_adaptive(&[vec![0.7, 0.5, 0.3, 0.2]], 0.5).unwrap(), 0.5);
    let per_set = vec![vec![0.9, 0.5, 0.3, 0.2], vec![0.7, 0.8, 0.6, 0.4]];
    assert_eq!(solve_threshold_adaptive(&per_set, 0.5).unwrap(), 0.5);
    assert_eq!(implicit_fn_cost(0.2, 5.0), 20.0);
    assert_eq!(implicit_fn_cost(0.5, 7.0), 7.0);
    // r · n₁ = 7.000000000000001 must still pick the 7th largest
    let ten: Vec<f64> = (1..=10).map(|k| k as f64 / 11.0).collect();
    assert_eq!(solve_threshold(&ten, 0.7).unwrap(), 4.0 / 11.0);
}

#[test]
fn mismatched_sets_are_rejected() {
    assert!(solve_threshold_adaptive(&[vec![0.5, 0.6], vec![0.5]], 0.5).is_err());
    assert!(solve_threshold_adaptive(&[], 0.5).is_err());
}

#[test]
fn recall_solve_shifts_by_correct_cost() {
    // t* = 0.5 with shifted fp 450 gives shifted fn 450, i.e. fn = 400
    let solve = RecallSolve::new(vec![vec![0.9, 0.5]], 1.0, 400.0, -50.0).unwrap();
    assert_eq!(solve.threshold, 0.5);
    assert!((solve.implied_fn_cost - 400.0).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn threshold_matches_sort_and_scan(s in scores(1..60), r in 0.01f64..=1.0) {
        let t = solve_threshold(&s, r).unwrap();
        prop_assert_eq!(t, scan(&s, r));
        prop_assert!(empirical_recall(&s, t) >= r);
        // the next larger candidate misses the target
        if let Some(next) = s.iter().copied().filter(|&v| v > t).reduce(f64::min) {
            prop_assert!(empirical_recall(&s, next) < r);
        }
    }

    #[test]
    fn recall_is_non_increasing_in_threshold(s in scores(1..60), mut ts in prop::collection::vec(0.0f64..1.0, 2..20)) {
        ts.sort_by(f64::total_cmp);
        for w in ts.windows(2) {
            prop_assert!(empirical_recall(&s, w[1]) <= empirical_recall(&s, w[0]));
        }
    }

    #[test]
    fn every_stopping_rule_keeps_recall(sets in score_sets(), r in 0.01f64..=1.0) {
        let t = solve_threshold_adaptive(&sets, r).unwrap();
        let n = sets[0].len();
        // adversary stops each sample at its worst-scoring set
        let worst: Vec<f64> = (0..n).map(|k| sets.iter().map(|s| s[k]).fold(f64::INFINITY, f64::min)).collect();
        prop_assert!(empirical_recall(&worst, t) >= r);
        for s in &sets {
            prop_assert!(empirical_recall(s, t) >= r);
        }
        let last = sets.last().unwrap();
        prop_assert!(t <= solve_threshold(last, r).unwrap());
    }

    #[test]
    fn single_set_adaptive_is_plain(s in scores(1..40), r in 0.01f64..=1.0) {
        prop_assert_eq!(solve_threshold_adaptive(std::slice::from_ref(&s), r).unwrap(), solve_threshold(&s, r).unwrap());
    }

    #[test]
    fn implied_cost_round_trips(t in 1e-6f64..(1.0 - 1e-6), fp in 0.01f64..1000.0) {
        let fnc = implicit_fn_cost(t, fp);
        prop_assert!(fnc > 0.0);
        prop_assert!((fp / (fnc + fp) - t).abs() <= 1e-12);
    }
}
