//! Deterministic BPG with the travel-limited adaptive step
//! `λ_k = min{1/(2L), μδ/(3ρ), μδ/(‖∇f(x_k)‖ + ρ)}`.

use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::mappings::dist_to_subdifferential;
use crate::numerics::vecops::*;
use crate::problems::Problem;
use crate::prox::{prox_point, CompositeTerm};
use crate::solvers::config::SolverConfig;
use crate::solvers::trace::{IterRecord, ResolvedParams, Trace};

/// Absolute slack allowed in the per-step checks.
pub const CHECK_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct TbpgRun {
    pub trace: Trace,
    /// First `k` with `‖𝒟^{λ_k}(x_k)‖² ≤ ε`.
    pub t_eps: Option<usize>,
    /// `max_{k ≤ T_ε} ‖x_k - x_0‖`.
    pub r_eps: f64,
    /// `Ψ(x_0) - Ψ(x_T)` over the realized horizon.
    pub delta_horizon: f64,
    /// Largest `‖x_{k+1} - x_k‖ / δ`.
    pub max_step_over_delta: f64,
    /// Steps violating the per-step descent inequality.
    pub descent_violations: usize,
    /// `dist(0, ∂Ψ(x_{T+1}))` when `φ` is zero or ℓ1.
    pub final_dist_subdiff: Option<f64>,
    /// `‖𝒟^{λ_k}(x_k)‖²` at the last iterate examined.
    pub final_sq_d: f64,
    pub x_final: Vec<f64>,
}

/// `min{1/(2L), μδ/(3ρ), μδ/(‖v‖ + ρ)}` with the middle term dropped for
/// `ρ = 0`.
pub fn adaptive_step(cap: f64, mu: f64, delta: f64, rho: f64, v_norm: f64) -> f64 {
    let mut step = cap.min(mu * delta / (v_norm + rho));
    if rho > 0.0 {
        step = step.min(mu * delta / (3.0 * rho));
    }
    step
}

/// `R_ε` bound: `(4/3) √max{1, 3ρ/(2Lμδ)} √κ Δ / √ε`.
pub fn travel_bound(l: f64, mu: f64, delta: f64, rho: f64, kappa: f64, delta_psi: f64, eps: f64) -> f64 {
    let factor = (1.0f64).max(3.0 * rho / (2.0 * l * mu * delta));
    4.0 / 3.0 * factor.sqrt() * kappa.sqrt() * delta_psi / eps.sqrt()
}

pub fn tbpg_run(problem: &Problem, kernel: &Kernel, cfg: &SolverConfig) -> Result<TbpgRun> {
    cfg.validate()?;
    let reg = kernel.regularity()?;
    let (mu, delta) = (reg.mu, reg.delta);
    let l = problem.smad_l;
    let rho = problem.rho();
    let phi = &problem.phi;
    if phi.ball().is_some() {
        return Err(Error::Unsupported(
            "adaptive step needs φ with bounded subgradients".into(),
        ));
    }
    let params = ResolvedParams {
        epsilon: cfg.epsilon,
        notes: vec![format!("rho = {rho}")],
        ..Default::default()
    };
    let mut trace = Trace::new("tbpg", problem.dim(), params);
    let n = problem.n().min(u32::MAX as usize) as u64;
    let x0 = problem.x0.clone();
    let psi0 = problem.psi(&x0);
    let mut x = x0.clone();
    let mut psi = psi0;
    let mut samples = 0u64;
    let mut run = TbpgRun {
        trace: Trace::default(),
        t_eps: None,
        r_eps: 0.0,
        delta_horizon: 0.0,
        max_step_over_delta: 0.0,
        descent_violations: 0,
        final_dist_subdiff: None,
        final_sq_d: f64::NAN,
        x_final: Vec::new(),
    };
    for k in 0..=cfg.max_iter {
        let g = problem.grad(&x);
        samples += n;
        let lambda = adaptive_step(0.5 / l, mu, delta, rho, norm(&g));
        let next = prox_point(kernel, phi, &x, &g, lambda)?;
        let d_sq = dist(&kernel.grad(&x), &kernel.grad(&next)).powi(2) / (lambda * lambda);
        let step = dist(&x, &next);
        let psi_next = problem.psi(&next);
        let (mu_seg, _) = kernel.mu_l_over_segment(&x, &next);
        let required = psi - 1.5 * l * mu_seg * step * step;
        if psi_next > required + CHECK_TOL * psi.abs().max(1.0) {
            run.descent_violations += 1;
        }
        run.max_step_over_delta = run.max_step_over_delta.max(step / delta);
        run.r_eps = run.r_eps.max(dist(&x, &x0));
        if cfg.keep_trace {
            let mut rec = IterRecord::new(k, 0, k, x.clone(), psi, lambda, samples);
            rec.norm_g = Some(step / lambda);
            rec.norm_d = Some(d_sq.sqrt());
            rec.flags.full_batch = true;
            trace.records.push(rec);
        }
        run.final_sq_d = d_sq;
        if d_sq <= cfg.epsilon {
            run.t_eps = Some(k);
            run.delta_horizon = psi0 - psi;
            if matches!(phi, CompositeTerm::Zero | CompositeTerm::L1 { .. }) {
                run.final_dist_subdiff = Some(dist_to_subdifferential(problem, phi, &next)?);
            }
            trace.iterations = k;
            break;
        }
        if k == cfg.max_iter {
            run.delta_horizon = psi0 - psi;
            trace.iterations = k;
            break;
        }
        x = next;
        psi = psi_next;
    }
    trace.total_samples = samples;
    trace.x_final = x.clone();
    run.x_final = x;
    run.trace = trace;
    Ok(run)
}
