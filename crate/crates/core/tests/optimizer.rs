use nmmo::optimizer::{
    maximize_flat, maximize_joint, maximize_on_grid, maximize_pointwise, perturbed_candidates, sobol_candidates,
    OptBudget,
};
use proptest::prelude::*;

#[test]
fn finds_interior_maximum() {
    let af = |x: &[f64]| -(x[0] - 0.3).powi(2) - (x[1] - 0.7).powi(2);
    let (x, v) = maximize_pointwise(&af, 2, &OptBudget::pointwise(1)).unwrap();
    assert!((x[0] - 0.3).abs() < 2e-3 && (x[1] - 0.7).abs() < 2e-3, "{x:?}");
    assert!(v > -1e-5);
}

#[test]
fn joint_split_keeps_slot_order() {
    let target = [0.1, 0.9, 0.5];
    let af = |x: &[f64], xp: &[Vec<f64>]| {
        assert_eq!(xp.len(), 2);
        -(x[0] - target[0]).powi(2) - (xp[0][0] - target[1]).powi(2) - (xp[1][0] - target[2]).powi(2)
    };
    let opt = maximize_joint(&af, 1, 3, &OptBudget::joint(3, 4)).unwrap();
    assert!((opt.x[0] - 0.1).abs() < 2e-3);
    assert!((opt.plan[0][0] - 0.9).abs() < 2e-3);
    assert!((opt.plan[1][0] - 0.5).abs() < 2e-3);
}

#[test]
fn grid_ties_go_to_first_row() {
    let grid = vec![vec![0.2], vec![0.4], vec![0.6]];
    let (x, v) = maximize_on_grid(&|_: &[f64]| 1.0, &grid).unwrap();
    assert_eq!((x, v), (vec![0.2], 1.0));
    assert!(maximize_on_grid(&|_: &[f64]| 1.0, &[]).is_err());
    assert!(maximize_on_grid(&|_: &[f64]| f64::NAN, &grid).is_err());
}

#[test]
fn nan_everywhere_is_an_error() {
    assert!(maximize_flat(&|_: &[f64]| f64::NAN, 2, &OptBudget::pointwise(0)).is_err());
    let zero = OptBudget {
        n_restarts: 0,
        ..OptBudget::pointwise(0)
    };
    assert!(maximize_flat(&|_: &[f64]| 0.0, 2, &zero).is_err());
}

#[test]
fn joint_budget_scales_with_horizon() {
    assert_eq!(OptBudget::joint(1, 3), OptBudget::pointwise(3));
    assert_eq!(
        OptBudget::joint(4, 3).max_evals_per_restart,
        4 * OptBudget::pointwise(3).max_evals_per_restart
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn sobol_points_lie_in_cube_and_repeat(d in 1usize..40, n in 1usize..64, seed in any::<u64>()) {
        let a = sobol_candidates(d, n, seed).unwrap();
        prop_assert_eq!(&a, &sobol_candidates(d, n, seed).unwrap());
        prop_assert!(a.iter().all(|p| p.len() == d && p.iter().all(|v| (0.0..1.0).contains(v))));
    }

    #[test]
    fn perturbations_stay_in_cube(anchors in prop::collection::vec(prop::collection::vec(0.0f64..=1.0, 3), 1..5), slots in 1usize..4, seed in any::<u64>()) {
        let c = perturbed_candidates(&anchors, slots, 20, seed).unwrap();
        prop_assert_eq!(c.len(), 20);
        prop_assert!(c.iter().all(|p| p.len() == 3 * slots && p.iter().all(|v| (0.0..=1.0).contains(v))));
    }

    #[test]
    fn result_is_at_least_best_raw_candidate(seed in any::<u64>(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let af = |x: &[f64]| (7.0 * x[0]).sin() * (5.0 * x[1] + a).cos() + b * x[0];
        let budget = OptBudget { n_restarts: 2, n_raw_candidates: 32, max_evals_per_restart: 50, seed };
        let raw_best = sobol_candidates(2, 32, seed).unwrap().iter().map(|x| af(x)).fold(f64::NEG_INFINITY, f64::max);
        let (x, v) = maximize_flat(&af, 2, &budget).unwrap();
        prop_assert!(v >= raw_best);
        prop_assert_eq!(v, af(&x));
    }
}
