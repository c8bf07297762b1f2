//! Epoch-bounded variance-reduced methods: fixed-length epochs, early-break
//! epochs with interpolation, and the sampled-anchor variant for
//! expectation problems.

use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::problems::{Problem, Structure};
use crate::solvers::census::EpochRule;
use crate::solvers::config::{OutputSelection, SolverConfig};
use crate::solvers::epochs::{ceil_sqrt, resolve_delta_psi, resolve_epochs, run_epochs, Anchor, EpochPlan, EpochRun};
use crate::solvers::trace::ResolvedParams;

fn finite_sum_size(problem: &Problem) -> Result<usize> {
    match problem.structure {
        Structure::FiniteSum(n) => Ok(n),
        Structure::Deterministic => Ok(1),
        Structure::Expectation => Err(Error::Unsupported(
            "finite-sum method applied to an expectation problem".into(),
        )),
    }
}

/// Fixed-length epochs `b = τ = ⌈√n⌉`, step `λ ≤ 1/((2κ+1)L)`, every step
/// a constrained prox inside the epoch ball.
pub fn alg1_run(problem: &Problem, kernel: &Kernel, cfg: &SolverConfig) -> Result<EpochRun> {
    cfg.validate()?;
    let n = finite_sum_size(problem)?;
    let reg = kernel.regularity()?;
    let l = problem.smad_l;
    let tau = cfg.tau.unwrap_or_else(|| ceil_sqrt(n));
    let b = cfg.b.unwrap_or_else(|| ceil_sqrt(n));
    let lambda = cfg.lambda.unwrap_or(1.0 / ((2.0 * reg.kappa_delta + 1.0) * l));
    let delta_psi = resolve_delta_psi(problem, cfg);
    let mut params = ResolvedParams {
        lambda: Some(lambda),
        tau: Some(tau),
        b: Some(b),
        delta_psi,
        epsilon: cfg.epsilon,
        epsilon_admissible: cfg.epsilon <= (reg.kappa_delta * l * reg.delta / (4.0 * tau as f64)).powi(2),
        ..Default::default()
    };
    let auto = delta_psi.map(|d| 32.0 * d / (lambda * reg.mu * tau as f64 * cfg.epsilon));
    let per_epoch = n as u64 + (tau * b) as u64;
    let epochs = resolve_epochs(cfg.epochs, auto, per_epoch, cfg.max_total_samples, &mut params)?;
    params.epochs = Some(epochs);
    let plan = EpochPlan {
        name: "alg1",
        step: lambda,
        gamma: 1.0,
        tau,
        b,
        epochs,
        early_break: false,
        anchor: Anchor::Full(n),
        rule: EpochRule::Travel,
        selection: cfg
            .output_selection
            .unwrap_or(OutputSelection::UniformInteriorDeltaQuarter),
    };
    run_epochs(problem, kernel, cfg, &plan, params)
}

/// `η = √(2τ)/(√(7τ) + √(2b))`
pub fn default_eta(tau: usize, b: usize) -> f64 {
    (2.0 * tau as f64).sqrt() / ((7.0 * tau as f64).sqrt() + (2.0 * b as f64).sqrt())
}

/// `γ = √b/(Lκ√τ)`, capped at one.
pub fn default_gamma(tau: usize, b: usize, l: f64, kappa: f64) -> f64 {
    ((b as f64).sqrt() / (l * kappa * (tau as f64).sqrt())).min(1.0)
}

/// Any batch size `b`, `τ = ⌈n/b⌉`, interpolated steps and an early break
/// once an iterate comes within `δ/4` of the epoch boundary.
pub fn alg2_run(problem: &Problem, kernel: &Kernel, cfg: &SolverConfig) -> Result<EpochRun> {
    cfg.validate()?;
    let n = finite_sum_size(problem)?;
    let reg = kernel.regularity()?;
    let l = problem.smad_l;
    let b = cfg.b.unwrap_or_else(|| ceil_sqrt(n));
    let tau = cfg.tau.unwrap_or(n.div_ceil(b));
    let eta = cfg.eta.unwrap_or_else(|| default_eta(tau, b));
    let gamma = cfg.gamma.unwrap_or_else(|| default_gamma(tau, b, l, reg.kappa_delta));
    let delta_psi = resolve_delta_psi(problem, cfg);
    let lk = l * reg.kappa_delta;
    let admissible_eps = reg.delta * reg.delta / 16.0 * (lk * lk / (b * tau) as f64).min(1.0 / (9.0 * eta * eta));
    let mut params = ResolvedParams {
        eta: Some(eta),
        gamma: Some(gamma),
        tau: Some(tau),
        b: Some(b),
        delta_psi,
        epsilon: cfg.epsilon,
        epsilon_admissible: cfg.epsilon <= admissible_eps,
        ..Default::default()
    };
    let auto = delta_psi.map(|d| 16.0 * d / (tau as f64 * gamma * eta * reg.mu * cfg.epsilon));
    let per_epoch = n as u64 + (tau * b) as u64;
    let epochs = resolve_epochs(cfg.epochs, auto, per_epoch, cfg.max_total_samples, &mut params)?;
    params.epochs = Some(epochs);
    let plan = EpochPlan {
        name: "alg2",
        step: eta,
        gamma,
        tau,
        b,
        epochs,
        early_break: true,
        anchor: Anchor::Full(n),
        rule: EpochRule::EarlyBreak,
        selection: cfg.output_selection.unwrap_or(OutputSelection::UniformAll),
    };
    run_epochs(problem, kernel, cfg, &plan, params)
}

/// Early-break epochs for `f = E[f_ξ]`. Each anchor averages
/// `⌈σ²(x_{s,0})/μ_h(ball) · B⌉` samples with
/// `B = 320bτ/(μδ²L²κ²q)` and `τ = ⌈q/(εb)⌉`.
pub fn alg2_expectation_run(problem: &Problem, kernel: &Kernel, cfg: &SolverConfig) -> Result<EpochRun> {
    cfg.validate()?;
    if problem.structure != Structure::Expectation {
        return Err(Error::Unsupported(
            "sampled-anchor method needs an expectation problem".into(),
        ));
    }
    let sigma0 = problem
        .objective
        .sigma(&problem.x0)
        .ok_or_else(|| Error::InvalidConfig("expectation problem lacks a variance bound".into()))?;
    let reg = kernel.regularity()?;
    let l = problem.smad_l;
    let (mu, delta, kappa, q) = (reg.mu, reg.delta, reg.kappa_delta, cfg.q);
    let b = cfg.b.unwrap_or(1);
    let tau = cfg
        .tau
        .unwrap_or_else(|| ((q / (cfg.epsilon * b as f64)).ceil() as usize).max(1));
    let eta = cfg.eta.unwrap_or_else(|| default_eta(tau, b));
    let gamma = cfg.gamma.unwrap_or_else(|| default_gamma(tau, b, l, kappa));
    let big_batch = 320.0 * (b * tau) as f64 / (mu * delta * delta * l * l * kappa * kappa * q);
    let delta_psi = resolve_delta_psi(problem, cfg);
    let mut params = ResolvedParams {
        eta: Some(eta),
        gamma: Some(gamma),
        tau: Some(tau),
        b: Some(b),
        big_batch: Some(big_batch),
        delta_psi,
        epsilon: cfg.epsilon,
        epsilon_admissible: cfg.epsilon <= 1.0 / (16.0 * l * l * kappa * kappa * q),
        ..Default::default()
    };
    let auto = delta_psi.map(|d| 256.0 * gamma * tau as f64 * d / (mu * eta * delta * delta * q));
    // anchor sizes vary along the run; budget the first one
    let radius0 = kernel.epoch_radius(&problem.x0)?;
    let (mu0, _) = kernel.mu_l_over_ball(&problem.x0, radius0);
    let anchor0 = ((sigma0 * sigma0 / mu0 * big_batch).ceil() as u64).max(1);
    let per_epoch = anchor0 + (tau * b) as u64;
    let epochs = resolve_epochs(cfg.epochs, auto, per_epoch, cfg.max_total_samples, &mut params)?;
    params.epochs = Some(epochs);
    let plan = EpochPlan {
        name: "alg2_expectation",
        step: eta,
        gamma,
        tau,
        b,
        epochs,
        early_break: true,
        anchor: Anchor::Sampled { big_batch },
        rule: EpochRule::EarlyBreak,
        selection: cfg.output_selection.unwrap_or(OutputSelection::UniformAll),
    };
    run_epochs(problem, kernel, cfg, &plan, params)
}
