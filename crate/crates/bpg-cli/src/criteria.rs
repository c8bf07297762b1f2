//! Acceptance checks. Each criterion is a list of named checks with a
//! short measured detail.

use std::time::{Duration, Instant};

use bpg_core::mappings::{eval_mappings, limiting_map};
use bpg_core::numerics::vecops::{dist, norm, sub};
use bpg_core::problems::{make_cubic_finite_sum, make_example1, make_example2};
use bpg_core::solvers::census::{early_break_bounds, fixed_epoch_bounds};
use bpg_core::solvers::tbpg::travel_bound;
use bpg_core::solvers::{alg1_run, alg2_run, bpg_deterministic, tbpg_run, tbpg_svr_run, SolverConfig};
use bpg_core::{CompositeTerm, Kernel, Problem, RandomStream};

use crate::config::{ExperimentConfig, Overrides};
use crate::oracles::{prox_oracles, sarah_enumeration};
use crate::runner::{execute, run_pool, sweep, Axis};
use crate::trace_csv::{read_trace_csv, rows, trace_csv_bytes};
use crate::trend::fit_trend;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, passed: bool, detail: impl Into<String>) -> Check {
    Check {
        name: name.to_string(),
        passed,
        detail: detail.into(),
    }
}

#[derive(Debug, Clone)]
pub struct CriterionOutcome {
    pub id: u8,
    pub title: &'static str,
    pub checks: Vec<Check>,
    pub elapsed: Duration,
}

impl CriterionOutcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn verdict(&self) -> &'static str {
        if self.passed() {
            "PASS"
        } else {
            "FAIL"
        }
    }

    /// One summary line followed by one indented line per check.
    pub fn report(&self) -> String {
        let mut s = format!(
            "{} criterion {:>2} {} ({:.2} s)",
            self.verdict(),
            self.id,
            self.title,
            self.elapsed.as_secs_f64()
        );
        for c in &self.checks {
            s.push_str(&format!(
                "\n    [{}] {}: {}",
                if c.passed { "ok" } else { "FAIL" },
                c.name,
                c.detail
            ));
        }
        s
    }
}

pub const TITLES: [&str; 12] = [
    "monomial counterexample closed form",
    "cubic counterexample growth",
    "kernel conditioning",
    "mapping sandwich",
    "limiting mapping rate",
    "prox correctness",
    "recursive estimator oracles",
    "epoch method event census",
    "finite-sum scaling trend",
    "adaptive deterministic steps",
    "adaptive stochastic stop",
    "reproducibility",
];

pub fn run_criterion(id: u8) -> CriterionOutcome {
    let start = Instant::now();
    let checks = match id {
        1 => monomial_closed_form(),
        2 => cubic_growth(),
        3 => kernel_conditioning(),
        4 => mapping_sandwich(),
        5 => limiting_rate(),
        6 => prox_correctness(),
        7 => estimator_oracles(),
        8 => event_census_bounds(),
        9 => scaling_trend(),
        10 => adaptive_deterministic(),
        11 => adaptive_stochastic(),
        12 => reproducibility(),
        _ => vec![check("known criterion", false, format!("no criterion {id}"))],
    };
    CriterionOutcome {
        id,
        title: TITLES.get(id as usize - 1).copied().unwrap_or("unknown"),
        checks,
        elapsed: start.elapsed(),
    }
}

fn slope_check(name: &str, slope: f64, lo: f64, hi: f64, hi_inclusive: bool) -> Check {
    let inside = slope >= lo && if hi_inclusive { slope <= hi } else { slope < hi };
    let close = if hi_inclusive { ']' } else { ')' };
    check(name, inside, format!("slope {slope:.4} vs [{lo:.4}, {hi:.4}{close}"))
}

fn monomial_closed_form() -> Vec<Check> {
    let start = Instant::now();
    let r = 4u32;
    let p = make_example2(r).expect("valid instance");
    let t = match bpg_deterministic(&p, &p.kernel, 1.0, &[0.0], 1000) {
        Ok(t) => t,
        Err(e) => return vec![check("run", false, e.to_string())],
    };
    let elapsed = start.elapsed().as_secs_f64();
    let x_err = t
        .records
        .iter()
        .map(|rec| (rec.x[0] - (rec.k as f64).cbrt()).abs())
        .fold(0.0, f64::max);
    let d_err = t
        .records
        .iter()
        .map(|rec| (rec.norm_d.unwrap_or(f64::NAN) - 1.0).abs())
        .fold(0.0, f64::max);
    let pts: Vec<(f64, f64)> = t
        .records
        .iter()
        .filter(|rec| rec.k >= 1)
        .map(|rec| (rec.k as f64, rec.norm_g.unwrap_or(f64::NAN)))
        .collect();
    let target = -(1.0 - 1.0 / (r as f64 - 1.0));
    let mut out = vec![
        check(
            "iterates are cube roots",
            x_err <= 1e-9,
            format!("max error {x_err:.2e}"),
        ),
        check(
            "new mapping stays at one",
            d_err <= 1e-9,
            format!("max |‖𝒟‖ - 1| {d_err:.2e}"),
        ),
    ];
    match fit_trend("k", &pts) {
        Ok(f) => out.push(slope_check(
            "old mapping decay",
            f.slope,
            target - 0.05,
            target + 0.05,
            true,
        )),
        Err(e) => out.push(check("old mapping decay", false, e.to_string())),
    }
    out.push(check("runtime", elapsed < 1.0, format!("{elapsed:.3} s < 1 s")));
    out
}

fn cubic_growth() -> Vec<Check> {
    let start = Instant::now();
    let r = 4u32;
    let p = make_example1(r).expect("valid instance");
    let lambda = 0.5 / p.smad_l;
    let t = match bpg_deterministic(&p, &p.kernel, lambda, &[1.0, 0.0], 100_000) {
        Ok(t) => t,
        Err(e) => return vec![check("run", false, e.to_string())],
    };
    let elapsed = start.elapsed().as_secs_f64();
    let x2 = t.records.iter().map(|rec| rec.x[1].abs()).fold(0.0, f64::max);
    let increasing = t.records.windows(2).all(|w| w[1].x[0] > w[0].x[0]);
    let rf = r as f64;
    let worst_margin = t
        .records
        .iter()
        .map(|rec| ((rf + 2.0) / rf * rec.k as f64).powf(1.0 / (rf + 2.0)) + 2.0 - rec.x[0])
        .fold(f64::INFINITY, f64::min);
    let pts: Vec<(f64, f64)> = t
        .records
        .iter()
        .filter(|rec| rec.k >= 1)
        .map(|rec| (rec.k as f64, norm(&p.grad(&rec.x))))
        .collect();
    let lo = -1.0 / (rf + 2.0) - 0.05;
    let x_last = t.records.last().map(|rec| rec.x[0]).unwrap_or(f64::NAN);
    let mut out = vec![
        check(
            "second coordinate stays zero",
            x2 <= 1e-12,
            format!("max |x₂| {x2:.2e}"),
        ),
        check(
            "first coordinate increases",
            increasing,
            format!("x₁ at the horizon {x_last:.6}"),
        ),
        check(
            "growth envelope",
            worst_margin >= 0.0,
            format!("smallest margin under the envelope {worst_margin:.4}"),
        ),
    ];
    match fit_trend("k", &pts) {
        Ok(f) => out.push(slope_check("log-gradient slope", f.slope, lo, 0.0, false)),
        Err(e) => out.push(check("log-gradient slope", false, e.to_string())),
    }
    out.push(check("runtime", elapsed < 30.0, format!("{elapsed:.2} s < 30 s")));
    out
}

fn kernel_conditioning() -> Vec<Check> {
    let mut out = Vec::new();
    let mut s = RandomStream::new(3);
    for r in [1u32, 2, 4, 8] {
        let k = Kernel::Polynomial(r);
        let reg = k.regularity().expect("polynomial kernels are regular");
        let mut point_viol = 0;
        let mut worst_point: f64 = 0.0;
        for _ in 0..10_000 {
            let scale = 3.0 * s.uniform();
            let x: Vec<f64> = (0..3).map(|_| scale * s.normal()).collect();
            let (lo, hi) = k.hess_eig_bounds(&x);
            let kappa = hi / lo;
            worst_point = worst_point.max(kappa);
            if kappa > (r + 1) as f64 {
                point_viol += 1;
            }
        }
        let mut ball_viol = 0;
        let mut worst_ball: f64 = 0.0;
        for _ in 0..1_000 {
            let scale = 3.0 * s.uniform();
            let c: Vec<f64> = (0..3).map(|_| scale * s.normal()).collect();
            let radius = s.uniform() * reg.delta / 2.0;
            let (mu, l) = k.mu_l_over_ball(&c, radius);
            let kappa = l / mu;
            worst_ball = worst_ball.max(kappa);
            if kappa > (3 * r + 4) as f64 {
                ball_viol += 1;
            }
        }
        out.push(check(
            &format!("r={r}"),
            point_viol == 0 && ball_viol == 0,
            format!(
                "pointwise max {worst_point:.4} ≤ {}, {point_viol} violations; balls max {worst_ball:.4} ≤ {}, {ball_viol} violations",
                r + 1,
                3 * r + 4
            ),
        ));
    }
    out
}

fn random_point(s: &mut RandomStream, dim: usize, half: f64) -> Vec<f64> {
    (0..dim).map(|_| half * (2.0 * s.uniform() - 1.0)).collect()
}

fn mapping_sandwich() -> Vec<Check> {
    let mut s = RandomStream::new(4);
    let mut worst_ratio: f64 = 0.0;
    let mut sandwich_viol = 0;
    let mut skipped = 0;
    let mut worst_smooth: f64 = 0.0;
    for i in 0..500u64 {
        let (p, kernel): (Problem, Kernel) = match i % 3 {
            0 => {
                let p = make_example1(4).expect("valid instance");
                let k = p.kernel;
                (p, k)
            }
            1 => (
                make_cubic_finite_sum(16, 3, i).expect("valid instance"),
                Kernel::Polynomial(1 + s.index(4) as u32),
            ),
            _ => {
                let w = 0.2 * s.uniform();
                let p = make_cubic_finite_sum(16, 3, i)
                    .expect("valid instance")
                    .with_phi(CompositeTerm::l1(w).expect("nonnegative weight"));
                (p, Kernel::Polynomial(1 + s.index(4) as u32))
            }
        };
        let x = random_point(&mut s, p.dim(), 1.5);
        let lambda = 10f64.powf(-3.0 + 3.0 * s.uniform()) / p.smad_l;
        let g = p.grad(&x);
        let m = match eval_mappings(&kernel, &p.phi, &x, &g, lambda) {
            Ok(m) => m,
            Err(_) => {
                sandwich_viol += 1;
                continue;
            }
        };
        let (ng, nd) = (norm(&m.g), norm(&m.d));
        if ng <= 1e-12 {
            skipped += 1;
        } else {
            let (mu, l) = kernel.mu_l_over_segment(&x, &m.x_plus);
            let ratio = nd / ng;
            let excess = (mu / ratio - 1.0).max(ratio / l - 1.0);
            worst_ratio = worst_ratio.max(excess);
            if excess > 1e-9 {
                sandwich_viol += 1;
            }
        }
        // the smooth identity, same point and step, with and without a
        // nontrivial kernel
        for k in [kernel, Kernel::Quadratic] {
            if let Ok(m) = eval_mappings(&k, &CompositeTerm::Zero, &x, &g, lambda) {
                worst_smooth = worst_smooth.max(dist(&m.d, &g));
            } else {
                worst_smooth = f64::INFINITY;
            }
        }
    }
    vec![
        check(
            "segment sandwich",
            sandwich_viol == 0,
            format!("500 instances, {sandwich_viol} violations, {skipped} stationary, worst relative excess {worst_ratio:.2e}"),
        ),
        check(
            "smooth new mapping equals gradient",
            worst_smooth <= 1e-9,
            format!("max ‖𝒟 - ∇f‖ {worst_smooth:.2e}"),
        ),
    ]
}

fn limiting_rate() -> Vec<Check> {
    let mut s = RandomStream::new(5);
    let lambdas = [1e-2, 1e-3, 1e-4];
    let mut worst_order = f64::INFINITY;
    let mut failures = 0;
    for i in 0..50u64 {
        let p = if i % 2 == 0 {
            make_example1(4).expect("valid instance")
        } else {
            make_cubic_finite_sum(16, 3, i).expect("valid instance")
        };
        let k = p.kernel;
        let x = random_point(&mut s, p.dim(), 1.5);
        let g = p.grad(&x);
        let lim = match limiting_map(&k, &p, &x) {
            Ok(l) => l,
            Err(_) => {
                failures += 1;
                continue;
            }
        };
        let errs: Vec<f64> = lambdas
            .iter()
            .map(|&lam| match eval_mappings(&k, &CompositeTerm::Zero, &x, &g, lam) {
                Ok(m) => norm(&sub(&m.g, &lim)),
                Err(_) => f64::NAN,
            })
            .collect();
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log10();
            if !(order >= 0.9) {
                failures += 1;
            }
            worst_order = worst_order.min(order);
        }
    }
    vec![check(
        "empirical order in the step size",
        failures == 0,
        format!("50 points, smallest order {worst_order:.4} (need ≥ 0.9), {failures} failures"),
    )]
}

fn prox_correctness() -> Vec<Check> {
    let st = prox_oracles(6);
    vec![
        check(
            "closed form vs generic solver",
            st.closed_vs_inner <= 1e-8,
            format!(
                "{} instances, max distance {:.2e}",
                st.closed_instances, st.closed_vs_inner
            ),
        ),
        check(
            "constrained prox vs grid",
            st.constrained_vs_grid <= 1e-3,
            format!(
                "{} instances ({} with an active constraint), max distance {:.2e}",
                st.grid_instances, st.grid_active, st.constrained_vs_grid
            ),
        ),
        check("KKT residuals", st.max_kkt <= 1e-9, format!("max {:.2e}", st.max_kkt)),
    ]
}

fn estimator_oracles() -> Vec<Check> {
    let st = sarah_enumeration(7);
    vec![
        check(
            "martingale",
            st.martingale <= 1e-12,
            format!("{} trees, max deviation {:.2e}", st.cases, st.martingale),
        ),
        check(
            "variance bound",
            st.variance_excess <= 1e-12,
            format!("{} trees, max excess {:.2e}", st.cases, st.variance_excess),
        ),
    ]
}

#[derive(Debug, Clone, Copy)]
struct CensusSample {
    admissible: bool,
    complies: bool,
    out_sq_g: Option<f64>,
}

fn event_census_bounds() -> Vec<Check> {
    let start = Instant::now();
    let eps = 1e-3;
    let seeds: Vec<u64> = (0..200).collect();
    let results = run_pool(&seeds, 0, |&seed| -> [Option<CensusSample>; 2] {
        let p = match make_cubic_finite_sum(64, 3, seed) {
            Ok(p) => p,
            Err(_) => return [None, None],
        };
        let reg = match p.kernel.regularity() {
            Ok(r) => r,
            Err(_) => return [None, None],
        };
        let cfg = SolverConfig {
            epsilon: eps,
            seed,
            keep_trace: false,
            ..Default::default()
        };
        let one = alg1_run(&p, &p.kernel, &cfg).ok().map(|run| {
            let pr = &run.trace.params;
            let b = fixed_epoch_bounds(
                pr.delta_psi.unwrap_or(f64::NAN),
                pr.lambda.unwrap_or(f64::NAN),
                reg.mu,
                reg.kappa_delta,
                p.smad_l,
                reg.delta,
                pr.tau.unwrap_or(1),
            );
            CensusSample {
                admissible: pr.epsilon_admissible,
                complies: b.complies(&run.census),
                out_sq_g: run.out_sq_g,
            }
        });
        let two = alg2_run(&p, &p.kernel, &cfg).ok().map(|run| {
            let pr = &run.trace.params;
            let b = early_break_bounds(
                pr.delta_psi.unwrap_or(f64::NAN),
                pr.eta.unwrap_or(f64::NAN),
                pr.gamma.unwrap_or(f64::NAN),
                reg.mu,
                reg.delta,
                pr.tau.unwrap_or(1),
            );
            CensusSample {
                admissible: pr.epsilon_admissible,
                complies: b.complies(&run.census),
                out_sq_g: run.out_sq_g,
            }
        });
        [one, two]
    });
    let mut out = Vec::new();
    for (j, name) in ["fixed epochs", "early-break epochs"].iter().enumerate() {
        let runs: Vec<Option<CensusSample>> = results.iter().map(|r| r[j]).collect();
        let failed = runs.iter().filter(|r| r.is_none()).count();
        let ok: Vec<CensusSample> = runs.into_iter().flatten().filter(|r| r.admissible).collect();
        let compliant = ok.iter().filter(|r| r.complies).count();
        let frac = compliant as f64 / ok.len().max(1) as f64;
        out.push(check(
            &format!("{name}: census within bounds"),
            failed == 0 && !ok.is_empty() && frac >= 0.95,
            format!(
                "{compliant}/{} admissible seeds compliant ({:.1}%), {failed} failed runs",
                ok.len(),
                100.0 * frac
            ),
        ));
        let outs: Vec<f64> = ok.iter().filter_map(|r| r.out_sq_g).collect();
        let mean = outs.iter().sum::<f64>() / outs.len().max(1) as f64;
        out.push(check(
            &format!("{name}: mean output accuracy"),
            !outs.is_empty() && mean <= 4.0 * eps,
            format!(
                "mean ‖𝒢(x_out)‖² {mean:.3e} over {} outputs vs 4ε = {:.1e}",
                outs.len(),
                4.0 * eps
            ),
        ));
    }
    let elapsed = start.elapsed().as_secs_f64();
    out.push(check("runtime", elapsed < 300.0, format!("{elapsed:.1} s < 300 s")));
    out
}

const SCALING_CONFIG: &str = r#"
[problem]
name = "cubic_fs"
n = 256
dim = 3

[solver]
algorithm = "alg2"
epsilon = 1e-3
keep_trace = false
stop_at_eps = true

[sweep]
seed_count = 20
"#;

fn scaling_trend() -> Vec<Check> {
    let cfg = match ExperimentConfig::parse(SCALING_CONFIG, "<scaling sweep>") {
        Ok(c) => c,
        Err(e) => return vec![check("config", false, e.to_string())],
    };
    let mut out = Vec::new();
    let cases = [
        ("samples vs n", Axis::N(vec![64, 256, 1024]), 0.35, 0.75),
        ("samples vs 1/ε", Axis::Epsilon(vec![1e-2, 3e-3, 1e-3]), 0.7, 1.3),
    ];
    for (name, axis, lo, hi) in cases {
        match sweep(&cfg, &[axis]) {
            Ok(res) => {
                let means: Vec<String> = res
                    .points
                    .iter()
                    .map(|p| {
                        format!(
                            "{}={} → {:.0}",
                            p.axis,
                            p.value,
                            p.mean_samples_to_eps.unwrap_or(f64::NAN)
                        )
                    })
                    .collect();
                match res.trend {
                    Some(t) => {
                        let mut c = slope_check(name, t.slope, lo, hi, true);
                        c.detail = format!("{} (R² {:.3}; {})", c.detail, t.r2, means.join(", "));
                        out.push(c);
                    }
                    None => out.push(check(name, false, format!("no fit: {}", means.join(", ")))),
                }
            }
            Err(e) => out.push(check(name, false, e.to_string())),
        }
    }
    out
}

fn adaptive_deterministic() -> Vec<Check> {
    let mut cases: Vec<(String, Problem, f64)> = Vec::new();
    for eps in [1e-2, 4e-3] {
        cases.push((
            format!("example1 ε={eps}"),
            make_example1(4).expect("valid instance"),
            eps,
        ));
    }
    for w in [0.01, 0.05] {
        for eps in [1e-2, 1e-3] {
            let p = make_cubic_finite_sum(64, 3, 0)
                .expect("valid instance")
                .with_phi(CompositeTerm::l1(w).expect("nonnegative weight"));
            cases.push((format!("cubic_fs(64)+{w}‖·‖₁ ε={eps}"), p, eps));
        }
    }
    let mut out = Vec::new();
    for (name, p, eps) in cases {
        let reg = p.kernel.regularity().expect("polynomial kernel");
        let cfg = SolverConfig {
            epsilon: eps,
            max_iter: 1_000_000,
            keep_trace: false,
            ..Default::default()
        };
        let run = match tbpg_run(&p, &p.kernel, &cfg) {
            Ok(r) => r,
            Err(e) => {
                out.push(check(&name, false, e.to_string()));
                continue;
            }
        };
        let bound = travel_bound(
            p.smad_l,
            reg.mu,
            reg.delta,
            p.rho(),
            reg.kappa_delta,
            run.delta_horizon,
            eps,
        );
        let mut ok =
            run.t_eps.is_some() && run.max_step_over_delta <= 1.0 && run.descent_violations == 0 && run.r_eps <= bound;
        let mut detail = format!(
            "T={:?}, max step/δ {:.3e}, descent violations {}, R {:.4} ≤ {:.4}",
            run.t_eps, run.max_step_over_delta, run.descent_violations, run.r_eps, bound
        );
        if p.rho() > 0.0 {
            let cap = (1.0 + reg.kappa_delta / 2.0).powi(2) * eps;
            match run.final_dist_subdiff {
                Some(d) => {
                    ok &= d * d <= cap;
                    detail.push_str(&format!(", dist² {:.3e} ≤ {cap:.3e}", d * d));
                }
                None => ok = false,
            }
        }
        out.push(check(&name, ok, detail));
    }
    out
}

#[derive(Debug, Clone, Copy)]
struct SvrSample {
    accurate: bool,
    max_step: f64,
}

fn adaptive_stochastic() -> Vec<Check> {
    let eps = 1e-2;
    let q = 0.1;
    let seeds: Vec<u64> = (0..100).collect();
    let results = run_pool(&seeds, 0, |&seed| -> Option<SvrSample> {
        let p = make_cubic_finite_sum(64, 3, seed).ok()?;
        let cfg = SolverConfig {
            epsilon: eps,
            q,
            seed,
            max_iter: 10_000_000,
            keep_trace: false,
            ..Default::default()
        };
        let run = tbpg_svr_run(&p, &p.kernel, &cfg).ok()?;
        Some(SvrSample {
            accurate: run.final_sq_d.is_some_and(|d| d <= 2.5 * eps),
            max_step: run.max_step_over_delta,
        })
    });
    let failed = results.iter().filter(|r| r.is_none()).count();
    let done: Vec<SvrSample> = results.into_iter().flatten().collect();
    let accurate = done.iter().filter(|r| r.accurate).count();
    let frac = accurate as f64 / seeds.len() as f64;
    let max_step = done.iter().map(|r| r.max_step).fold(0.0, f64::max);
    vec![
        check(
            "stopping accuracy",
            frac >= 1.0 - q - 0.05,
            format!(
                "{accurate}/{} runs with ‖𝒟‖² ≤ 2.5ε ({:.0}%, need ≥ {:.0}%), {failed} failed",
                seeds.len(),
                100.0 * frac,
                100.0 * (0.95 - q)
            ),
        ),
        check(
            "prox steps within δ",
            failed == 0 && max_step <= 1.0,
            format!("max ‖x̄ - x‖/δ {max_step:.3e}"),
        ),
    ]
}

fn repro_configs() -> Vec<(&'static str, String)> {
    let base = |problem: &str, alg: &str, extra: &str| {
        format!("[problem]\n{problem}\n\n[solver]\nalgorithm = \"{alg}\"\nseed = 42\n{extra}\n")
    };
    vec![
        (
            "bpg",
            base("name = \"example2\"", "bpg", "lambda = 1.0\nmax_iter = 200"),
        ),
        (
            "tbpg",
            base("name = \"example1\"", "tbpg", "epsilon = 1e-2\nmax_iter = 5000"),
        ),
        ("alg1", base("name = \"cubic_fs\"\nn = 16", "alg1", "epochs = 30")),
        ("alg2", base("name = \"cubic_fs\"\nn = 16", "alg2", "epochs = 30")),
        (
            "alg2_expectation",
            base("name = \"cubic_exp\"", "alg2_expectation", "epsilon = 0.1\nepochs = 5"),
        ),
        (
            "tbpg_svr",
            base("name = \"cubic_fs\"\nn = 16\nl1 = 0.01", "tbpg_svr", "epsilon = 1e-2"),
        ),
    ]
}

fn reproducibility() -> Vec<Check> {
    let mut out = Vec::new();
    for (name, text) in repro_configs() {
        let result = (|| -> anyhow::Result<String> {
            let cfg = ExperimentConfig::parse(&text, name)?;
            let a = execute(&cfg.resolve(Overrides::default())?)?;
            let b = execute(&cfg.resolve(Overrides::default())?)?;
            let (ba, bb) = (trace_csv_bytes(&a.trace)?, trace_csv_bytes(&b.trace)?);
            if a.trace.records.is_empty() {
                anyhow::bail!("empty trace");
            }
            if ba != bb {
                anyhow::bail!("trace CSV differs between identical runs");
            }
            if read_trace_csv(ba.as_slice())? != rows(&a.trace) {
                anyhow::bail!("trace CSV does not round-trip");
            }
            Ok(format!("{} rows, {} bytes identical", a.trace.records.len(), ba.len()))
        })();
        match result {
            Ok(d) => out.push(check(name, true, d)),
            Err(e) => out.push(check(name, false, e.to_string())),
        }
    }
    out
}
