//! Adaptive variance-reduced BPG for finite sums: unconstrained epochs of
//! length `τ = ⌈√n⌉`, adaptive prox steps `η_{s,k}` and interpolation
//! `γ_{s,k}`, stopped by the observable surrogate mapping.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::numerics::{vecops::*, RandomStream};
use crate::problems::{Problem, Structure};
use crate::prox::prox_point;
use crate::solvers::config::SolverConfig;
use crate::solvers::epochs::ceil_sqrt;
use crate::solvers::sarah::{draw_batch, sarah_step};
use crate::solvers::tbpg::adaptive_step;
use crate::solvers::trace::{EpochInfo, IterRecord, ResolvedParams, Trace};

#[derive(Debug, Clone)]
pub struct SvrRun {
    pub trace: Trace,
    /// Zero-based `(s, k)` of the first iterate with `‖𝒟̃‖² ≤ ε`.
    pub stop: Option<(usize, usize)>,
    pub r_eps: f64,
    /// `‖𝒟^{η}(x_stop)‖²` recomputed with the exact gradient.
    pub final_sq_d: Option<f64>,
    /// `‖∇f - v‖ ≤ √ε/(2κ)` held at the stopping iterate.
    pub small_error_at_stop: Option<bool>,
    /// Largest `‖x̄_{s,k+1} - x_{s,k}‖ / δ`.
    pub max_step_over_delta: f64,
    pub x_stop: Option<Vec<f64>>,
}

/// Failure probability budget `p_s = 6q/(π²s²τ)` for one-based `s`.
pub fn failure_budget(q: f64, s: usize, tau: usize) -> f64 {
    6.0 * q / (PI * PI * (s * s) as f64 * tau as f64)
}

/// `b_s = ⌈8⌈√n⌉(2 + 6 ln(1/p_s)) L_max²/L²⌉`
pub fn svr_batch(n: usize, p_s: f64, l_max: f64, l: f64) -> usize {
    let raw = 8.0 * ceil_sqrt(n) as f64 * (2.0 + 6.0 * (1.0 / p_s).ln()) * (l_max / l).powi(2);
    raw.ceil() as usize
}

pub fn tbpg_svr_run(problem: &Problem, kernel: &Kernel, cfg: &SolverConfig) -> Result<SvrRun> {
    cfg.validate()?;
    let n = match problem.structure {
        Structure::FiniteSum(n) => n,
        Structure::Deterministic => 1,
        Structure::Expectation => {
            return Err(Error::Unsupported(
                "adaptive variance reduction needs a finite sum".into(),
            ))
        }
    };
    if problem.phi.ball().is_some() {
        return Err(Error::Unsupported(
            "adaptive step needs φ with bounded subgradients".into(),
        ));
    }
    let reg = kernel.regularity()?;
    let (mu, delta, kappa) = (reg.mu, reg.delta, reg.kappa_delta);
    let l = problem.smad_l;
    let rho = problem.rho();
    let eps = cfg.epsilon;
    let tau = cfg.tau.unwrap_or_else(|| ceil_sqrt(n));
    let obj = problem.objective.as_ref();
    let root = RandomStream::new(cfg.seed);
    let params = ResolvedParams {
        tau: Some(tau),
        epsilon: eps,
        epsilon_admissible: eps <= (2.0 * l * kappa * mu * delta * rho / 3.0).max(rho * rho),
        ..Default::default()
    };
    let mut trace = Trace::new("tbpg_svr", problem.dim(), params);
    let gamma_num = eps.sqrt() / (2.0 * l * kappa * kappa);
    let x0 = problem.x0.clone();
    let mut x = x0.clone();
    let mut samples = 0u64;
    let mut iter = 0usize;
    let mut out = SvrRun {
        trace: Trace::default(),
        stop: None,
        r_eps: 0.0,
        final_sq_d: None,
        small_error_at_stop: None,
        max_step_over_delta: 0.0,
        x_stop: None,
    };
    let max_epochs = cfg.epochs.unwrap_or(usize::MAX);
    let mut s = 0usize;
    'outer: while s < max_epochs && iter < cfg.max_iter {
        let b_s = cfg
            .b
            .unwrap_or_else(|| svr_batch(n, failure_budget(cfg.q, s + 1, tau), problem.l_max, l));
        if samples + n as u64 > cfg.max_total_samples {
            break;
        }
        let mut v = problem.grad(&x);
        samples += n as u64;
        let mut x_prev = x.clone();
        let mut length = 0;
        let center = x.clone();
        for k in 0..tau {
            if k > 0 {
                if samples + b_s as u64 > cfg.max_total_samples {
                    trace.epochs.push(EpochInfo {
                        center,
                        radius: f64::INFINITY,
                        length,
                        anchor_samples: n as u64,
                    });
                    break 'outer;
                }
                let mut st = root.substream(s as u64, k as u64);
                let batch = draw_batch(obj, &mut st, b_s);
                v = sarah_step(&v, obj, &batch, &x, &x_prev);
                samples += b_s as u64;
            }
            let eta = adaptive_step(0.5 / (kappa * l), mu, delta, rho, norm(&v));
            let xbar = prox_point(kernel, &problem.phi, &x, &v, eta)?;
            let dual_gap = dist(&kernel.grad(&x), &kernel.grad(&xbar));
            let surrogate = dual_gap / eta;
            out.max_step_over_delta = out.max_step_over_delta.max(dist(&xbar, &x) / delta);
            out.r_eps = out.r_eps.max(dist(&x, &x0));
            let stopping = surrogate * surrogate <= eps;
            if cfg.keep_trace || stopping {
                let g = problem.grad(&x);
                let exact = prox_point(kernel, &problem.phi, &x, &g, eta)?;
                let exact_d = dist(&kernel.grad(&x), &kernel.grad(&exact)) / eta;
                if cfg.keep_trace {
                    let mut rec = IterRecord::new(iter, s, k, x.clone(), problem.psi(&x), eta, samples);
                    rec.norm_g = Some(dist(&x, &exact) / eta);
                    rec.norm_d = Some(exact_d);
                    rec.norm_d_surrogate = Some(surrogate);
                    rec.est_error = Some(dist(&g, &v));
                    rec.flags.full_batch = k == 0;
                    trace.records.push(rec);
                }
                if stopping {
                    out.stop = Some((s, k));
                    out.final_sq_d = Some(exact_d * exact_d);
                    out.small_error_at_stop = Some(dist(&g, &v) <= eps.sqrt() / (2.0 * kappa));
                    out.x_stop = Some(x.clone());
                    length += 1;
                    iter += 1;
                    trace.epochs.push(EpochInfo {
                        center,
                        radius: f64::INFINITY,
                        length,
                        anchor_samples: n as u64,
                    });
                    break 'outer;
                }
            }
            let gamma = if dual_gap > 0.0 {
                (gamma_num / dual_gap).min(1.0)
            } else {
                1.0
            };
            let x_next = if gamma == 1.0 { xbar } else { lerp(&x, &xbar, gamma) };
            x_prev = std::mem::replace(&mut x, x_next);
            length += 1;
            iter += 1;
            if iter >= cfg.max_iter {
                break;
            }
        }
        trace.epochs.push(EpochInfo {
            center,
            radius: f64::INFINITY,
            length,
            anchor_samples: n as u64,
        });
        s += 1;
    }
    trace.total_samples = samples;
    trace.iterations = iter;
    trace.x_final = x;
    out.trace = trace;
    Ok(out)
}
