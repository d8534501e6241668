mod common;

use common::*;
use infokernel::{
    lower_branch, solve_for_lambda, solve_for_upsilon, solve_tv, special_values, value_curve,
    Branch, InfoFunctional, Measure, Mode, ProbMeasure, Utility,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn kl(q: &[f64]) -> InfoFunctional {
    InfoFunctional::extended_kl(Measure::from_weights(q.to_vec()).unwrap(), Mode::Simplex).unwrap()
}

fn kl_div(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(a, _)| **a > 0.0)
        .map(|(a, b)| a * (a / b).ln())
        .sum()
}

/// A problem with strictly positive reference and distinct utilities.
fn instance() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2usize..=6)
        .prop_flat_map(|n| {
            (
                prop::collection::vec(-5.0f64..5.0, n),
                prop::collection::vec(0.05f64..1.0, n),
            )
        })
        .prop_map(|(x, w)| {
            let s: f64 = w.iter().sum();
            (x, w.iter().map(|v| v / s).collect())
        })
}

#[test]
fn three_point_grid_oracle() {
    let x = [0.0, 1.0, 2.0];
    let q = [1.0 / 3.0; 3];
    for lambda in [0.05, 0.3, 0.7, 1.0] {
        let s =
            solve_for_lambda(&Utility::from_values(x.to_vec()).unwrap(), &kl(&q), lambda).unwrap();
        let oracle = kl_grid_oracle(&x, &q, lambda, 2000);
        // grid maximum sits below the continuous one by at most a grid step
        assert!(s.value >= oracle - 1e-12, "lambda {lambda}");
        assert!(
            s.value - oracle < 2e-3,
            "lambda {lambda}: {} vs {oracle}",
            s.value
        );
    }
}

#[test]
fn random_feasible_points_never_beat_the_solver() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let n = rng.random_range(2..=5);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let q = random_simplex(&mut rng, n, 0.1);
        let lambda = rng.random_range(0.01..0.5);
        let s =
            solve_for_lambda(&Utility::from_values(x.clone()).unwrap(), &kl(&q), lambda).unwrap();
        for _ in 0..2000 {
            let p = random_simplex(&mut rng, n, 0.0);
            if kl_div(&p, &q) <= lambda {
                assert!(dot(&x, &p) <= s.value + 1e-9);
            }
        }
    }
}

#[test]
fn reference_with_zero_mass_keeps_its_support() {
    let x = Utility::from_values(vec![0.0, 0.2, 0.1, 1.0]).unwrap();
    let f = kl(&[0.5, 0.3, 0.2, 0.0]);
    let sv = special_values(&x, &f).unwrap();
    // the argmax over the support of q is atom 1
    assert!((sv.upsilon_bar - 0.2).abs() < 1e-15);
    assert!((sv.lambda_bar_upper + 0.3f64.ln()).abs() < 1e-12);
    let s = solve_for_lambda(&x, &f, 0.5).unwrap();
    assert_eq!(s.measure.weights()[3], 0.0);
}

#[test]
fn tv_matches_vertex_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..30 {
        let n = rng.random_range(2..=4);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..3.0)).collect();
        let q = random_simplex(&mut rng, n, 0.0);
        let lambda = rng.random_range(0.0..2.0);
        let s = solve_tv(
            &Utility::from_values(x.clone()).unwrap(),
            &ProbMeasure::from_weights(q.clone()).unwrap(),
            lambda,
        )
        .unwrap();
        let oracle = tv_vertex_oracle(&x, &q, lambda);
        assert!(
            (s.solution.value - oracle).abs() < 1e-10,
            "{} vs {oracle}",
            s.solution.value
        );
        let p = s.solution.measure.weights();
        assert!(l1(p, &q) <= lambda + 1e-12);
    }
}

#[test]
fn tv_tie_is_reported_non_unique() {
    let x = Utility::from_values(vec![1.0, 1.0, 0.0]).unwrap();
    let q = ProbMeasure::from_weights(vec![0.2, 0.3, 0.5]).unwrap();
    let s = solve_tv(&x, &q, 0.4).unwrap();
    assert!((s.solution.value - 0.7).abs() < 1e-12);
    assert!(!s.unique);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn solution_has_gibbs_form((x, q) in instance(), t in 0.05f64..0.95) {
        let u = Utility::from_values(x.clone()).unwrap();
        let f = kl(&q);
        let sv = special_values(&u, &f).unwrap();
        let lambda = t * sv.lambda_bar_upper;
        let s = solve_for_lambda(&u, &f, lambda).unwrap();
        let p = s.measure.weights();
        prop_assert!((kl_div(p, &q) - lambda).abs() < 1e-7);
        // ln(p / q) is affine in x with slope beta
        let z: Vec<f64> = p.iter().zip(&q).map(|(a, b)| (a / b).ln()).collect();
        for i in 1..x.len() {
            let lhs = z[i] - z[0];
            let rhs = s.beta * (x[i] - x[0]);
            prop_assert!((lhs - rhs).abs() < 1e-6 * (1.0 + rhs.abs()), "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn value_curve_is_monotone_and_concave((x, q) in instance()) {
        let u = Utility::from_values(x).unwrap();
        let f = kl(&q);
        let top = special_values(&u, &f).unwrap().lambda_bar_upper;
        let grid: Vec<f64> = (0..12).map(|i| top * 1.2 * i as f64 / 11.0).collect();
        let up = value_curve(&u, &f, &grid, Branch::Upper).unwrap();
        let lo = value_curve(&u, &f, &grid, Branch::Lower).unwrap();
        let v: Vec<f64> = up.samples.iter().map(|s| s.upsilon).collect();
        for w in v.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-9);
        }
        for w in v.windows(3) {
            prop_assert!(w[1] >= 0.5 * (w[0] + w[2]) - 1e-7);
        }
        for (a, b) in up.samples.iter().zip(&lo.samples) {
            prop_assert!(b.upsilon <= a.upsilon + 1e-9);
        }
    }

    #[test]
    fn upsilon_and_lambda_targets_invert((x, q) in instance(), t in 0.1f64..0.9) {
        let u = Utility::from_values(x).unwrap();
        let f = kl(&q);
        let lambda = t * special_values(&u, &f).unwrap().lambda_bar_upper;
        let s = solve_for_lambda(&u, &f, lambda).unwrap();
        let back = solve_for_upsilon(&u, &f, s.value).unwrap();
        prop_assert!((back.info - lambda).abs() < 1e-6);
    }

    #[test]
    fn lower_branch_mirrors_negated_utility((x, q) in instance(), t in 0.1f64..0.9) {
        let u = Utility::from_values(x.clone()).unwrap();
        let f = kl(&q);
        let lambda = t * special_values(&u.negated(), &f).unwrap().lambda_bar_upper;
        let lo = lower_branch(&u, &f, lambda).unwrap();
        prop_assert!(lo.beta <= 0.0);
        prop_assert!(lo.value <= dot(&x, &q) + 1e-12);
    }
}
