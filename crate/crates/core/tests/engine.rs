use nmmo::engine::{horizon, init_state, observe, run_bo, step, suggest, Method, RunConfig};
use nmmo::pareto::{hypervolume_of, nondominated};
use proptest::prelude::*;

fn quick(method: Method, seed: u64) -> RunConfig {
    RunConfig {
        problem: "four_bar_truss".into(),
        method,
        horizon_cap: 2,
        iterations: 4,
        init_points: 5,
        mc_samples: 32,
        grid_size: 32,
        fit_restarts: 2,
        seed,
        record_timing: false,
    }
}

#[test]
fn horizon_schedule() {
    assert_eq!(horizon(1, 65, 4).unwrap(), 4);
    assert_eq!(horizon(65, 65, 4).unwrap(), 1);
    assert_eq!(horizon(65, 65, 8).unwrap(), 1);
    assert_eq!(horizon(63, 65, 8).unwrap(), 3);
    assert!(horizon(66, 65, 4).is_err());
    assert!(horizon(0, 65, 4).is_err());
    assert!(horizon(1, 65, 0).is_err());
}

#[test]
fn method_names_round_trip() {
    for m in Method::ALL {
        assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
    }
    assert!("mesmo".parse::<Method>().is_err());
}

#[test]
fn config_validation() {
    let ok = quick(Method::Ehvi, 0);
    assert!(ok.validate().is_ok());
    assert!(RunConfig {
        iterations: 0,
        ..ok.clone()
    }
    .validate()
    .is_err());
    assert!(RunConfig {
        init_points: 1,
        ..ok.clone()
    }
    .validate()
    .is_err());
    assert!(RunConfig {
        horizon_cap: 0,
        ..ok.clone()
    }
    .validate()
    .is_err());
    assert!(RunConfig {
        problem: "mof".into(),
        ..ok
    }
    .validate()
    .is_err());
}

#[test]
fn initial_state_matches_design() {
    let cfg = quick(Method::Ehvi, 3);
    let a = init_state(&cfg).unwrap();
    let b = init_state(&cfg).unwrap();
    assert_eq!(a.inputs.len(), 5);
    assert_eq!(a.inputs, b.inputs);
    assert_eq!(a.outputs, b.outputs);
    assert_eq!(a.models.len(), 2);
    let mut front = a.front.to_vecs();
    let mut nd = nondominated(&a.outputs).unwrap();
    front.sort_by(|x, y| x.partial_cmp(y).unwrap());
    nd.sort_by(|x, y| x.partial_cmp(y).unwrap());
    assert_eq!(front, nd);
}

#[test]
fn every_method_runs_and_telescopes() {
    for m in Method::ALL {
        let cfg = quick(m, 11);
        let rec = run_bo(&cfg).unwrap();
        assert_eq!(rec.rows.len(), cfg.iterations);
        let mut prev = rec.initial_hypervolume;
        let mut sum = rec.initial_hypervolume;
        for r in &rec.rows {
            assert!(r.hypervolume >= prev - 1e-12, "{m}");
            assert!(r.x_unit.iter().all(|v| (0.0..=1.0).contains(v)));
            assert_eq!(r.wall_seconds, 0.0);
            prev = r.hypervolume;
            sum += r.hvi;
        }
        assert!((sum - rec.final_hypervolume()).abs() <= 1e-9 * sum.max(1.0), "{m}");
        let reference = nmmo::benchmarks::make_problem("four_bar_truss")
            .unwrap()
            .reference_max();
        let direct = hypervolume_of(&rec.front, &reference).unwrap();
        assert!((direct - rec.final_hypervolume()).abs() <= 1e-9 * direct.max(1.0));
        assert_eq!(rec.pareto_set.len(), rec.front.len());
    }
}

#[test]
fn runs_are_reproducible() {
    let cfg = quick(Method::NmmoJoint, 5);
    assert_eq!(run_bo(&cfg).unwrap(), run_bo(&cfg).unwrap());
}

#[test]
fn ask_tell_reproduces_step() {
    let cfg = quick(Method::Binom, 2);
    let mut stepped = init_state(&cfg).unwrap();
    let mut asked = stepped.clone();
    for _ in 0..3 {
        let row = step(&mut stepped, &cfg).unwrap();
        let x = suggest(&asked, &cfg).unwrap();
        assert_eq!(x, suggest(&asked, &cfg).unwrap());
        assert_eq!(x, row.x_unit);
        let y = asked.problem.evaluate(&x).unwrap().into_inner();
        let gain = observe(&mut asked, &cfg, x, y.clone()).unwrap();
        assert_eq!(gain, row.hvi);
        assert_eq!(asked.front.to_vecs(), stepped.front.to_vecs());
        assert!(asked.front.weakly_dominates(&y));
    }
    assert_eq!(asked.iteration, 3);
    assert_eq!(asked.inputs.len(), 8);
}

#[test]
fn observe_rejects_bad_shapes() {
    let cfg = quick(Method::Ehvi, 0);
    let mut s = init_state(&cfg).unwrap();
    assert!(observe(&mut s, &cfg, vec![0.5; 3], vec![0.0, 0.0]).is_err());
    assert!(observe(&mut s, &cfg, vec![0.5; 4], vec![0.0]).is_err());
    assert!(observe(&mut s, &cfg, vec![0.5; 4], vec![f64::NAN, 0.0]).is_err());
    assert_eq!(s.inputs.len(), 5);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn horizon_is_bounded(total in 1usize..100, cap in 1usize..10, frac in 0.0f64..1.0) {
        let t = 1 + ((total - 1) as f64 * frac) as usize;
        let h = horizon(t, total, cap).unwrap();
        prop_assert!(h >= 1 && h <= cap && t + h - 1 <= total);
        prop_assert_eq!(horizon(total, total, cap).unwrap(), 1);
    }

    #[test]
    fn hypervolume_trace_is_monotone(seed in 0u64..1000) {
        let mut cfg = quick(Method::Ehvi, seed);
        cfg.iterations = 2;
        let rec = run_bo(&cfg).unwrap();
        let mut prev = rec.initial_hypervolume;
        for r in &rec.rows {
            prop_assert!(r.hypervolume >= prev);
            prev = r.hypervolume;
        }
    }
}
