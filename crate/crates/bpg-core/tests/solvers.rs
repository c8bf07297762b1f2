use bpg_core::numerics::vecops::{dist, norm};
use bpg_core::problems::{make_cubic_expectation, make_cubic_finite_sum, make_example1, make_example2};
use bpg_core::solvers::tbpg::travel_bound;
use bpg_core::solvers::{
    alg1_run, alg2_expectation_run, alg2_run, bpg_deterministic, event_census, tbpg_run, tbpg_svr_run, EpochRule,
    SolverConfig,
};
use bpg_core::{CompositeTerm, Error, Kernel};
use proptest::prelude::*;

fn quick(seed: u64) -> SolverConfig {
    SolverConfig {
        seed,
        epochs: Some(40),
        ..Default::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn deterministic_descent_and_summability(
        seed in 0u64..1000,
        frac in 0.1f64..=1.0,
        weight in prop_oneof![Just(0.0), 0.001f64..0.1],
    ) {
        let p = make_cubic_finite_sum(16, 3, seed)
            .unwrap()
            .with_phi(CompositeTerm::l1(weight).unwrap());
        let lambda = frac / p.smad_l;
        let t = bpg_deterministic(&p, &p.kernel, lambda, &p.x0, 200).unwrap();
        let mut div_sum = 0.0;
        for w in t.records.windows(2) {
            prop_assert!(w[1].psi <= w[0].psi + 1e-10 * w[0].psi.abs().max(1.0));
            div_sum += p.kernel.bregman_div(&w[1].x, &w[0].x);
        }
        let drop = t.records[0].psi - t.records.last().unwrap().psi;
        if frac < 1.0 {
            prop_assert!(div_sum <= drop / (1.0 / lambda - p.smad_l) + 1e-10);
        }
    }

    #[test]
    fn fixed_epoch_restricted_mapping_bound(seed in 0u64..1000) {
        let p = make_cubic_finite_sum(16, 3, seed).unwrap();
        let run = alg1_run(&p, &p.kernel, &quick(seed)).unwrap();
        let lambda = run.trace.params.lambda.unwrap();
        let recs = &run.trace.records;
        for w in recs.windows(2) {
            let (cur, next) = (&w[0], &w[1]);
            let ep = &run.trace.epochs[cur.s];
            let (mu, _) = p.kernel.mu_l_over_ball(&ep.center, ep.radius);
            let rg = cur.norm_restricted_g.unwrap();
            let e = cur.est_error.unwrap();
            let step = dist(&cur.x, &next.x);
            let rhs = 2.0 * step * step / (lambda * lambda) + 2.0 * e * e / (mu * mu);
            prop_assert!(rg * rg <= rhs * (1.0 + 1e-9) + 1e-12);
        }
    }

    #[test]
    fn census_replay_matches_online_census(seed in 0u64..1000, alg2 in any::<bool>()) {
        let p = make_cubic_finite_sum(16, 3, seed).unwrap();
        let delta = p.kernel.regularity().unwrap().delta;
        let (run, rule) = if alg2 {
            (alg2_run(&p, &p.kernel, &quick(seed)).unwrap(), EpochRule::EarlyBreak)
        } else {
            (alg1_run(&p, &p.kernel, &quick(seed)).unwrap(), EpochRule::Travel)
        };
        prop_assert_eq!(event_census(&run.trace, delta, rule).unwrap(), run.census);
    }
}

#[test]
fn census_replay_with_nonempty_sets() {
    // an oversized step from a distant start makes epochs travel and the
    // restricted prox hit the boundary
    let mut p = make_cubic_finite_sum(16, 3, 0).unwrap();
    p.x0 = vec![2.0, -1.0, 1.5];
    let delta = p.kernel.regularity().unwrap().delta;
    let cfg = SolverConfig {
        lambda: Some(10.0),
        eta: Some(10.0),
        gamma: Some(1.0),
        epochs: Some(30),
        ..Default::default()
    };
    let r1 = alg1_run(&p, &p.kernel, &cfg).unwrap();
    assert!(!r1.census.i1.is_empty() && !r1.census.i2.is_empty());
    assert_eq!(event_census(&r1.trace, delta, EpochRule::Travel).unwrap(), r1.census);
    let r2 = alg2_run(&p, &p.kernel, &cfg).unwrap();
    assert!(!r2.census.i1.is_empty());
    assert_eq!(
        event_census(&r2.trace, delta, EpochRule::EarlyBreak).unwrap(),
        r2.census
    );
}

#[test]
fn unit_interpolation_without_breaks_reproduces_fixed_epochs() {
    let p = make_cubic_finite_sum(16, 3, 7).unwrap();
    let a = alg1_run(&p, &p.kernel, &quick(7)).unwrap();
    assert!(a.census.i1.is_empty());
    let cfg = SolverConfig {
        eta: a.trace.params.lambda,
        gamma: Some(1.0),
        b: a.trace.params.b,
        tau: a.trace.params.tau,
        ..quick(7)
    };
    let b = alg2_run(&p, &p.kernel, &cfg).unwrap();
    assert!(b.census.i1.is_empty());
    let xa: Vec<_> = a.trace.xs().collect();
    let xb: Vec<_> = b.trace.xs().collect();
    assert_eq!(xa, xb);
}

#[test]
fn runs_are_reproducible() {
    let p = make_cubic_finite_sum(32, 3, 3).unwrap();
    let a = alg2_run(&p, &p.kernel, &quick(11)).unwrap();
    let b = alg2_run(&p, &p.kernel, &quick(11)).unwrap();
    assert_eq!(a.trace, b.trace);
    let c = alg2_run(&p, &p.kernel, &quick(12)).unwrap();
    assert_ne!(a.trace, c.trace);
}

#[test]
fn fixed_epochs_reach_target_on_average() {
    let p = make_cubic_finite_sum(64, 3, 0).unwrap();
    let cfg = SolverConfig {
        keep_trace: false,
        ..Default::default()
    };
    let run = alg1_run(&p, &p.kernel, &cfg).unwrap();
    assert!(run.trace.params.epsilon_admissible);
    assert!(run.stats.mean_sq_g() <= cfg.epsilon);
}

#[test]
fn explicit_epochs_over_budget_rejected() {
    let p = make_cubic_finite_sum(64, 3, 0).unwrap();
    let cfg = SolverConfig {
        epochs: Some(100),
        max_total_samples: 1000,
        ..Default::default()
    };
    assert!(matches!(
        alg1_run(&p, &p.kernel, &cfg),
        Err(Error::InsufficientBudget { .. })
    ));
    let auto = SolverConfig {
        max_total_samples: 10_000,
        keep_trace: false,
        ..Default::default()
    };
    let run = alg2_run(&p, &p.kernel, &auto).unwrap();
    assert!(run.trace.params.capped);
    assert!(run.trace.total_samples <= 10_000);
}

#[test]
fn expectation_anchor_grows_with_variance_ratio() {
    let p = make_cubic_expectation(0).unwrap();
    let cfg = SolverConfig {
        epsilon: 1e-1,
        epochs: Some(20),
        ..Default::default()
    };
    let run = alg2_expectation_run(&p, &p.kernel, &cfg).unwrap();
    assert_eq!(run.anchor_profile.len(), run.trace.epochs.len());
    let mut prof = run.anchor_profile.clone();
    prof.sort_by(|a, b| a.1.total_cmp(&b.1));
    for w in prof.windows(2) {
        assert!(w[0].0 <= w[1].0);
    }
    assert!(alg2_run(&p, &p.kernel, &cfg).is_err());
}

#[test]
fn travel_limited_growth_of_cubic_counterexample() {
    let p = make_example1(4).unwrap();
    let lambda = 0.5 / p.smad_l;
    let t = bpg_deterministic(&p, &p.kernel, lambda, &p.x0, 3000).unwrap();
    for w in t.records.windows(2) {
        assert!(w[1].x[1].abs() <= 1e-12);
        assert!(w[1].x[0] > w[0].x[0]);
    }
    for r in &t.records {
        let cap = (6.0 / 4.0 * r.k as f64).powf(1.0 / 6.0) + 2.0;
        assert!(r.x[0] <= cap, "k={} x={}", r.k, r.x[0]);
    }
}

#[test]
fn adaptive_steps_obey_descent_and_travel() {
    let base = make_cubic_finite_sum(32, 3, 5).unwrap();
    let cases = [
        make_example1(4).unwrap(),
        base.clone().with_phi(CompositeTerm::l1(0.02).unwrap()),
    ];
    for p in cases {
        let reg = p.kernel.regularity().unwrap();
        let cfg = SolverConfig {
            epsilon: 1e-2,
            max_iter: 100_000,
            keep_trace: false,
            ..Default::default()
        };
        let run = tbpg_run(&p, &p.kernel, &cfg).unwrap();
        assert!(run.t_eps.is_some());
        assert_eq!(run.descent_violations, 0);
        assert!(run.max_step_over_delta <= 1.0);
        let bound = travel_bound(
            p.smad_l,
            reg.mu,
            reg.delta,
            p.rho(),
            reg.kappa_delta,
            run.delta_horizon,
            cfg.epsilon,
        );
        assert!(run.r_eps <= bound);
        if let Some(d) = run.final_dist_subdiff {
            assert!(d * d <= (1.0 + reg.kappa_delta / 2.0).powi(2) * cfg.epsilon);
        }
    }
}

#[test]
fn stationary_start_stops_immediately() {
    // a single cubic is stationary wherever its residual vanishes
    let mut q = make_cubic_finite_sum(1, 2, 0).unwrap();
    let x = q.x0.clone();
    let r = (3.0 * q.f(&x)).cbrt();
    let g = q.grad(&x);
    let a: Vec<f64> = g.iter().map(|gi| gi / (r * r)).collect();
    let asq: f64 = a.iter().map(|v| v * v).sum();
    q.x0 = x.iter().zip(&a).map(|(xi, ai)| xi - r * ai / asq).collect();
    assert!(norm(&q.grad(&q.x0)) <= 1e-20);
    let cfg = SolverConfig::default();
    let run = tbpg_run(&q, &q.kernel, &cfg).unwrap();
    assert_eq!(run.t_eps, Some(0));
    assert_eq!(run.r_eps, 0.0);
    // the monomial kernel has no uniform regularity
    let p = make_example2(4).unwrap();
    assert!(tbpg_run(&p, &p.kernel, &cfg).is_err());
}

#[test]
fn single_component_surrogate_is_exact() {
    let p = make_cubic_finite_sum(1, 2, 4).unwrap();
    let cfg = SolverConfig {
        epsilon: 1e-3,
        max_iter: 100_000,
        ..Default::default()
    };
    let run = tbpg_svr_run(&p, &p.kernel, &cfg).unwrap();
    for r in &run.trace.records {
        assert_eq!(r.est_error, Some(0.0));
        let (a, b) = (r.norm_d.unwrap(), r.norm_d_surrogate.unwrap());
        assert!((a - b).abs() <= 1e-12 * a.max(1.0));
    }
}

#[test]
fn stochastic_adaptive_stop_is_accurate() {
    let p = make_cubic_finite_sum(16, 3, 2).unwrap();
    for seed in 0..5 {
        let cfg = SolverConfig {
            epsilon: 1e-2,
            seed,
            max_iter: 1_000_000,
            keep_trace: false,
            ..Default::default()
        };
        let run = tbpg_svr_run(&p, &p.kernel, &cfg).unwrap();
        assert!(run.stop.is_some());
        assert!(run.max_step_over_delta <= 1.0);
        if run.small_error_at_stop == Some(true) {
            assert!(run.final_sq_d.unwrap() <= 2.5 * cfg.epsilon);
        }
    }
}

#[test]
fn quadratic_kernel_runs_without_epoch_limits() {
    let mut p = make_cubic_finite_sum(16, 2, 1).unwrap();
    p.kernel = Kernel::Quadratic;
    let run = tbpg_run(&p, &Kernel::Quadratic, &SolverConfig::default());
    assert!(run.is_ok());
}
