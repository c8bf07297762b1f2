//! Library-level tests of the harness: config parsing, trace CSV, trends,
//! sweep axes and the worker pool.

use bpg_cli::config::{ConfigError, ExperimentConfig, Overrides, OUT_DIR_ENV};
use bpg_cli::runner::{execute, run_pool, sweep, Axis};
use bpg_cli::trace_csv::{read_trace_csv, rows, trace_csv_bytes};
use bpg_cli::{fit_trend, Algorithm};
use bpg_core::solvers::{IterRecord, ResolvedParams, StepFlags, Trace};
use bpg_core::Error;
use proptest::prelude::*;

const BASE: &str = r#"
[problem]
name = "cubic_fs"
n = 16
dim = 3

[solver]
algorithm = "alg2"
epsilon = 1e-2
"#;

fn invalid_key(text: &str) -> String {
    match ExperimentConfig::parse(text, "t.toml") {
        Err(ConfigError::Invalid { key, .. }) => key,
        other => panic!("expected an invalid-key error, got {other:?}"),
    }
}

#[test]
fn base_config_resolves() {
    let cfg = ExperimentConfig::parse(BASE, "t.toml").unwrap();
    assert_eq!(cfg.algorithm().unwrap(), Algorithm::Alg2);
    let spec = cfg.resolve(Overrides::default()).unwrap();
    assert_eq!(spec.problem.dim(), 3);
}

#[test]
fn config_errors_name_the_key() {
    assert_eq!(invalid_key(&BASE.replace("\"alg2\"", "\"alg9\"")), "solver.algorithm");
    assert_eq!(
        invalid_key(&BASE.replace("\"cubic_fs\"", "\"rosenbrock\"")),
        "problem.name"
    );
    assert_eq!(
        invalid_key(&BASE.replace("epsilon = 1e-2", "epsilon = -1.0")),
        "solver.epsilon"
    );
    assert_eq!(invalid_key(&format!("{BASE}lambda = \"fast\"\n")), "solver.lambda");
    assert_eq!(
        invalid_key(&format!("{BASE}\n[kernel]\nname = \"cosh\"\n")),
        "kernel.name"
    );
}

#[test]
fn unknown_fields_and_bad_toml_are_parse_errors() {
    for text in [format!("{BASE}stepsize = 1.0\n"), "[problem\nname=".to_string()] {
        match ExperimentConfig::parse(&text, "t.toml") {
            Err(e @ ConfigError::Parse { .. }) => assert!(e.to_string().starts_with("t.toml: ")),
            other => panic!("expected a parse error, got {other:?}"),
        }
    }
}

#[test]
fn missing_file_is_io_error() {
    let err = ExperimentConfig::load(std::path::Path::new("/nonexistent/bpg.toml")).unwrap_err();
    assert!(matches!(err, ConfigError::Io { .. }));
}

#[test]
fn out_dir_env_overrides_config() {
    let cfg = ExperimentConfig::parse(&format!("{BASE}\n[output]\ndir = \"from_config\"\n"), "t.toml").unwrap();
    // The only test in this binary that touches the variable.
    std::env::remove_var(OUT_DIR_ENV);
    assert_eq!(cfg.out_dir(), std::path::PathBuf::from("from_config"));
    std::env::set_var(OUT_DIR_ENV, "/tmp/from_env");
    assert_eq!(cfg.out_dir(), std::path::PathBuf::from("/tmp/from_env"));
    std::env::remove_var(OUT_DIR_ENV);
}

#[test]
fn seeds_from_sweep_section() {
    let cfg = ExperimentConfig::parse(&format!("{BASE}\n[sweep]\nseed_count = 4\n"), "t.toml").unwrap();
    assert_eq!(cfg.seeds().len(), 4);
    let cfg = ExperimentConfig::parse(&format!("{BASE}\n[sweep]\nseeds = [7, 9]\n"), "t.toml").unwrap();
    assert_eq!(cfg.seeds(), vec![7, 9]);
}

#[test]
fn axis_parsing() {
    assert_eq!(Axis::parse("n=64,256").unwrap(), Axis::N(vec![64, 256]));
    assert_eq!(
        Axis::parse("epsilon=1e-2, 1e-3").unwrap(),
        Axis::Epsilon(vec![1e-2, 1e-3])
    );
    assert_eq!(Axis::parse("b=1").unwrap().name(), "b");
    for bad in ["n", "n=", "n=1.5", "tau=3", "eps=abc"] {
        assert!(Axis::parse(bad).is_err(), "{bad} should not parse");
    }
}

#[test]
fn pool_keeps_job_order() {
    let jobs: Vec<u64> = (0..97).collect();
    for workers in [0, 1, 3, 16] {
        let out = run_pool(&jobs, workers, |j| {
            std::thread::sleep(std::time::Duration::from_micros((97 - j) * 20));
            j * j
        });
        assert_eq!(out, jobs.iter().map(|j| j * j).collect::<Vec<_>>());
    }
    assert!(run_pool(&Vec::<u8>::new(), 4, |j| *j).is_empty());
}

#[test]
fn trend_recovers_power_laws() {
    let pts: Vec<(f64, f64)> = [1.0, 2.0, 5.0, 10.0].iter().map(|&x| (x, x)).collect();
    let fit = fit_trend("x", &pts).unwrap();
    assert!((fit.slope - 1.0).abs() < 1e-12 && (fit.r2 - 1.0).abs() < 1e-12);
    let pts: Vec<(f64, f64)> = [3.0f64, 30.0, 300.0, 3000.0]
        .iter()
        .map(|&x| (x, 7.0 * x.sqrt()))
        .collect();
    let fit = fit_trend("x", &pts).unwrap();
    assert!((fit.slope - 0.5).abs() < 1e-12);
    assert!((fit.intercept - 7f64.ln()).abs() < 1e-12);
}

#[test]
fn trend_rejects_bad_data() {
    assert!(matches!(
        fit_trend("x", &[(1.0, 1.0), (2.0, 2.0)]),
        Err(Error::InvalidConfig(_))
    ));
    assert!(matches!(
        fit_trend("x", &[(1.0, 1.0), (2.0, 0.0), (3.0, 1.0)]),
        Err(Error::DomainViolation(_))
    ));
    assert!(matches!(
        fit_trend("x", &[(2.0, 1.0), (2.0, 3.0), (2.0, 5.0)]),
        Err(Error::Degenerate(_))
    ));
}

#[test]
fn runs_are_byte_identical() {
    let cfg = ExperimentConfig::parse(BASE, "t.toml").unwrap();
    let spec = cfg
        .resolve(Overrides {
            seed: Some(5),
            ..Default::default()
        })
        .unwrap();
    let a = trace_csv_bytes(&execute(&spec).unwrap().trace).unwrap();
    let b = trace_csv_bytes(&execute(&spec).unwrap().trace).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b);
    let other = cfg
        .resolve(Overrides {
            seed: Some(6),
            ..Default::default()
        })
        .unwrap();
    assert_ne!(a, trace_csv_bytes(&execute(&other).unwrap().trace).unwrap());
}

#[test]
fn solver_trace_round_trips() {
    let cfg = ExperimentConfig::parse(BASE, "t.toml").unwrap();
    let out = execute(&cfg.resolve(Overrides::default()).unwrap()).unwrap();
    let bytes = trace_csv_bytes(&out.trace).unwrap();
    assert_eq!(read_trace_csv(bytes.as_slice()).unwrap(), rows(&out.trace));
}

#[test]
fn sweep_fits_trend_over_n() {
    let text = format!("{BASE}stop_at_eps = true\n\n[sweep]\nseed_count = 3\n");
    let cfg = ExperimentConfig::parse(&text, "t.toml").unwrap();
    let res = sweep(&cfg, &[Axis::parse("n=8,16,32").unwrap()]).unwrap();
    assert_eq!(res.rows.len(), 9);
    assert_eq!(res.points.len(), 3);
    let trend = res.trend.expect("all points reached epsilon");
    assert_eq!(trend.axis, "n");
    assert!(trend.slope.is_finite());
}

#[test]
fn sweep_needs_something_to_vary() {
    let cfg = ExperimentConfig::parse(BASE, "t.toml").unwrap();
    assert!(sweep(&cfg, &[]).is_err());
}

fn opt_f64() -> impl Strategy<Value = Option<f64>> {
    prop::option::of(prop::num::f64::NORMAL | prop::num::f64::ZERO)
}

prop_compose! {
    fn record(dim: usize)(
        iter in 0usize..1_000_000, s in 0usize..1000, k in 0usize..1000,
        x in prop::collection::vec(prop::num::f64::NORMAL, dim),
        psi in prop::num::f64::NORMAL, step in prop::num::f64::POSITIVE,
        norm_g in opt_f64(), norm_d in opt_f64(), norm_r in opt_f64(), dist in opt_f64(),
        samples in any::<u64>(), hit in any::<bool>(), on in any::<bool>(),
    ) -> IterRecord {
        let mut r = IterRecord::new(iter, s, k, x, psi, step, samples);
        r.norm_g = norm_g;
        r.norm_d = norm_d;
        r.norm_restricted_g = norm_r;
        r.dist_boundary = dist;
        r.flags = StepFlags { hit_boundary: hit, prox_on_boundary: on, full_batch: false };
        r
    }
}

fn trace_strategy() -> impl Strategy<Value = Trace> {
    (1usize..5).prop_flat_map(|dim| {
        prop::collection::vec(record(dim), 0..20).prop_map(move |records| {
            let mut t = Trace::new("prop", dim, ResolvedParams::default());
            t.records = records;
            t
        })
    })
}

proptest! {
    #[test]
    fn csv_round_trip_is_exact(trace in trace_strategy()) {
        let bytes = trace_csv_bytes(&trace).unwrap();
        let back = read_trace_csv(bytes.as_slice()).unwrap();
        prop_assert_eq!(back, rows(&trace));
    }

    #[test]
    fn trend_slope_is_exact_on_power_laws(
        c in 0.01f64..100.0,
        p in -3.0f64..3.0,
        xs in prop::collection::btree_set(1u32..100_000, 3..12),
    ) {
        let pts: Vec<(f64, f64)> = xs.iter().map(|&x| (x as f64, c * (x as f64).powf(p))).collect();
        let fit = fit_trend("x", &pts).unwrap();
        prop_assert!((fit.slope - p).abs() < 1e-9, "slope {} vs {}", fit.slope, p);
        prop_assert!(fit.r2 > 1.0 - 1e-9);
    }
}
