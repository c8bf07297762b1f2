//! Shared epoch loop for the variance-reduced methods with trust balls.

use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::numerics::{vecops::*, RandomStream};
use crate::problems::Problem;
use crate::prox::{on_boundary, prox_point};
use crate::solvers::census::{CensusBuilder, EpochRule, EventCensus};
use crate::solvers::config::{OutputSelection, SolverConfig};
use crate::solvers::sarah::{batch_mean, draw_batch, sarah_step};
use crate::solvers::trace::{EpochInfo, IterRecord, ResolvedParams, RunningStats, StepFlags, Trace};

/// How each epoch's anchor direction is formed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Anchor {
    /// Exact gradient, charged `n` samples.
    Full(usize),
    /// Mean of `⌈σ²(x)/μ_h(ball) · B⌉` i.i.d. samples.
    Sampled { big_batch: f64 },
}

#[derive(Debug, Clone)]
pub(crate) struct EpochPlan {
    pub name: &'static str,
    pub step: f64,
    pub gamma: f64,
    pub tau: usize,
    pub b: usize,
    pub epochs: usize,
    pub early_break: bool,
    pub anchor: Anchor,
    pub rule: EpochRule,
    pub selection: OutputSelection,
}

/// Result of an epoch-based run.
#[derive(Debug, Clone)]
pub struct EpochRun {
    pub trace: Trace,
    pub census: EventCensus,
    /// Randomly selected output iterate, if any iterate was eligible.
    pub x_out: Option<Vec<f64>>,
    /// `‖𝒢(x_out)‖²` with the exact gradient.
    pub out_sq_g: Option<f64>,
    pub stats: RunningStats,
    pub budget_exhausted: bool,
    /// Anchor batch sizes per epoch together with `σ²(x_{s,0}) / μ_h(ball)`.
    pub anchor_profile: Vec<(u64, f64)>,
}

/// Substream index reserved for output selection.
const SELECT_STREAM: u64 = u64::MAX;

pub(crate) fn ceil_sqrt(n: usize) -> usize {
    let mut r = (n as f64).sqrt().floor() as usize;
    while r * r < n {
        r += 1;
    }
    r.max(1)
}

pub(crate) fn resolve_delta_psi(problem: &Problem, cfg: &SolverConfig) -> Option<f64> {
    match cfg.lower_bound {
        Some(lb) => Some((problem.psi(&problem.x0) - lb).max(0.0)),
        None => problem.delta_psi(&problem.x0),
    }
}

/// Picks the epoch count: explicit counts must fit the budget, automatic
/// ones are capped by it.
pub(crate) fn resolve_epochs(
    explicit: Option<usize>,
    auto: Option<f64>,
    per_epoch: u64,
    budget: u64,
    params: &mut ResolvedParams,
) -> Result<usize> {
    match explicit {
        Some(s) => {
            let needed = (s as u64).saturating_mul(per_epoch);
            if needed > budget {
                return Err(Error::InsufficientBudget { needed, budget });
            }
            Ok(s)
        }
        None => {
            let raw = auto.ok_or_else(|| {
                Error::InvalidConfig("automatic epoch count needs a lower bound on the objective".into())
            })?;
            let s = (raw.ceil() as usize).max(1);
            let cap = (budget / per_epoch.max(1)).max(1) as usize;
            if s > cap {
                params.capped = true;
                params
                    .notes
                    .push(format!("epoch count {s} capped to {cap} by the sample budget"));
                Ok(cap)
            } else {
                Ok(s)
            }
        }
    }
}

pub(crate) fn run_epochs(
    problem: &Problem,
    kernel: &Kernel,
    cfg: &SolverConfig,
    plan: &EpochPlan,
    params: ResolvedParams,
) -> Result<EpochRun> {
    let reg = kernel.regularity()?;
    let delta = reg.delta;
    let obj = problem.objective.as_ref();
    let root = RandomStream::new(cfg.seed);
    let mut select = root.substream(SELECT_STREAM, 0);
    let mut trace = Trace::new(plan.name, problem.dim(), params);
    let mut census = CensusBuilder::new(plan.rule, delta, cfg.epsilon, plan.tau, &problem.x0);
    let mut stats = RunningStats::default();
    let mut chosen: Option<(Vec<f64>, f64)> = None;
    let mut eligible_seen = 0usize;
    let mut anchor_profile = Vec::new();
    let mut x = problem.x0.clone();
    let mut samples = 0u64;
    let mut iter = 0usize;
    let mut budget_exhausted = false;
    let budget = cfg.max_total_samples;

    'epochs: for s in 0..plan.epochs {
        let center = x.clone();
        let radius = kernel.epoch_radius(&center)?;
        let ball_phi = problem.phi.with_ball(&center, radius)?;
        census.begin_epoch(s, &center);

        let (mut v, anchor_samples) = match plan.anchor {
            Anchor::Full(n) => (problem.grad(&x), n as u64),
            Anchor::Sampled { big_batch } => {
                let sigma = obj
                    .sigma(&x)
                    .ok_or_else(|| Error::InvalidConfig("sampled anchors need a variance bound".into()))?;
                let (mu_ball, _) = kernel.mu_l_over_ball(&center, radius);
                let ratio = sigma * sigma / mu_ball;
                let size = ((ratio * big_batch).ceil() as u64).max(1);
                anchor_profile.push((size, ratio));
                let mut st = root.substream(s as u64, 0);
                let batch = draw_batch(obj, &mut st, size as usize);
                (batch_mean(obj, &batch, &x), size)
            }
        };
        if samples + anchor_samples > budget {
            budget_exhausted = true;
            break;
        }
        samples += anchor_samples;

        let mut x_prev = x.clone();
        let mut length = 0;
        let mut stop = false;
        for k in 0..plan.tau {
            if k > 0 {
                if samples + plan.b as u64 > budget {
                    budget_exhausted = true;
                    census.end_epoch(length);
                    trace.epochs.push(EpochInfo {
                        center,
                        radius,
                        length,
                        anchor_samples,
                    });
                    break 'epochs;
                }
                let mut st = root.substream(s as u64, k as u64);
                let batch = draw_batch(obj, &mut st, plan.b);
                v = sarah_step(&v, obj, &batch, &x, &x_prev);
                samples += plan.b as u64;
            }

            // diagnostics with the exact gradient
            let g = problem.grad(&x);
            let free = prox_point(kernel, &problem.phi, &x, &g, plan.step)?;
            let norm_g = dist(&x, &free) / plan.step;
            let dist_boundary = radius - dist(&x, &center);
            let prox_on_boundary = on_boundary(&free, &center, radius);
            census.observe(iter, k, &x, norm_g, prox_on_boundary);
            stats.push(norm_g * norm_g, samples, cfg.epsilon);
            let eligible = match plan.selection {
                OutputSelection::UniformAll => true,
                OutputSelection::UniformInteriorDeltaQuarter => dist_boundary >= delta / 4.0,
            };
            if eligible {
                eligible_seen += 1;
                if select.index(eligible_seen) == 0 {
                    chosen = Some((x.clone(), norm_g * norm_g));
                }
            }

            let xbar = prox_point(kernel, &ball_phi, &x, &v, plan.step)?;
            let hit = on_boundary(&xbar, &center, radius);

            if cfg.keep_trace {
                let mut rec = IterRecord::new(iter, s, k, x.clone(), problem.psi(&x), plan.step, samples);
                rec.norm_g = Some(norm_g);
                rec.norm_d = Some(dist(&kernel.grad(&x), &kernel.grad(&free)) / plan.step);
                rec.norm_restricted_g = Some(if prox_on_boundary {
                    let xhat = prox_point(kernel, &ball_phi, &x, &g, plan.step)?;
                    dist(&x, &xhat) / plan.step
                } else {
                    norm_g
                });
                rec.est_error = Some(dist(&g, &v));
                rec.dist_boundary = Some(dist_boundary);
                rec.flags = StepFlags {
                    hit_boundary: hit,
                    prox_on_boundary,
                    full_batch: k == 0 && matches!(plan.anchor, Anchor::Full(_)),
                };
                trace.records.push(rec);
            }

            let x_next = if plan.gamma == 1.0 {
                xbar
            } else {
                lerp(&x, &xbar, plan.gamma)
            };
            iter += 1;
            length += 1;
            x_prev = std::mem::replace(&mut x, x_next);
            if plan.early_break && radius - dist(&x, &center) <= delta / 4.0 {
                break;
            }
            if cfg.stop_at_eps && stats.samples_to_eps.is_some() {
                stop = true;
                break;
            }
        }
        census.end_epoch(length);
        trace.epochs.push(EpochInfo {
            center,
            radius,
            length,
            anchor_samples,
        });
        if stop {
            break;
        }
    }

    trace.total_samples = samples;
    trace.iterations = iter;
    trace.x_final = x;
    let (x_out, out_sq_g) = match chosen {
        Some((x, g)) => (Some(x), Some(g)),
        None => (None, None),
    };
    Ok(EpochRun {
        trace,
        census: census.finish(),
        x_out,
        out_sq_g,
        stats,
        budget_exhausted,
        anchor_profile,
    })
}
