//! Realized boundary events of epoch-based runs.

use crate::error::{Error, Result};
use crate::numerics::vecops::dist;
use crate::solvers::trace::Trace;

/// Which epochs count as "travelled".
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpochRule {
    /// Fixed-length epochs: some iterate `x_{s,k}`, `k < τ`, is at least
    /// `δ/4` away from the anchor.
    Travel,
    /// Early-break epochs: the epoch stopped before `τ` steps.
    EarlyBreak,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventCensus {
    /// Zero-based indices of travelled epochs.
    pub i1: Vec<usize>,
    /// Pairs `(s, k)` with `x_{s,k-1}` within `δ/4` of the anchor and the
    /// exact restricted prox from it on the epoch boundary.
    pub i2: Vec<(usize, usize)>,
    /// Largest distance from `x₀` up to the hitting time (or the whole run).
    pub r_eps: f64,
    /// First global iteration with `‖𝒢‖² ≤ ε`.
    pub t_eps: Option<usize>,
    pub epochs: usize,
    pub tau: usize,
}

impl EventCensus {
    pub fn frac_i1(&self) -> f64 {
        self.i1.len() as f64 / self.epochs.max(1) as f64
    }

    pub fn frac_i2(&self) -> f64 {
        self.i2.len() as f64 / (self.epochs.max(1) * self.tau.max(1)) as f64
    }
}

/// Incremental census, fed one iterate at a time.
#[derive(Debug, Clone)]
pub struct CensusBuilder {
    rule: EpochRule,
    delta: f64,
    epsilon: f64,
    tau: usize,
    x0: Vec<f64>,
    census: EventCensus,
    anchor: Vec<f64>,
    epoch: usize,
    travelled: bool,
    max_travel: f64,
}

impl CensusBuilder {
    pub fn new(rule: EpochRule, delta: f64, epsilon: f64, tau: usize, x0: &[f64]) -> Self {
        CensusBuilder {
            rule,
            delta,
            epsilon,
            tau,
            x0: x0.to_vec(),
            census: EventCensus {
                tau,
                ..Default::default()
            },
            anchor: x0.to_vec(),
            epoch: 0,
            travelled: false,
            max_travel: 0.0,
        }
    }

    pub fn begin_epoch(&mut self, s: usize, anchor: &[f64]) {
        self.epoch = s;
        self.anchor = anchor.to_vec();
        self.travelled = false;
    }

    /// Records iterate `x_{s,k}` (`k < τ_s`) with `‖𝒢(x)‖` and the boundary
    /// status of the exact restricted prox taken from it.
    pub fn observe(&mut self, iter: usize, k: usize, x: &[f64], norm_g: f64, prox_on_boundary: bool) {
        let from_anchor = dist(x, &self.anchor);
        if from_anchor >= self.delta / 4.0 {
            self.travelled = true;
        }
        if from_anchor <= self.delta / 4.0 && prox_on_boundary {
            self.census.i2.push((self.epoch, k + 1));
        }
        if self.census.t_eps.is_none() {
            self.max_travel = self.max_travel.max(dist(x, &self.x0));
            if norm_g * norm_g <= self.epsilon {
                self.census.t_eps = Some(iter);
            }
        }
    }

    pub fn end_epoch(&mut self, length: usize) {
        let counted = match self.rule {
            EpochRule::Travel => self.travelled,
            EpochRule::EarlyBreak => length < self.tau,
        };
        if counted {
            self.census.i1.push(self.epoch);
        }
        self.census.epochs += 1;
    }

    pub fn finish(mut self) -> EventCensus {
        self.census.r_eps = self.max_travel;
        self.census
    }
}

/// Recomputes the census from stored records and epoch geometry.
pub fn event_census(trace: &Trace, delta: f64, rule: EpochRule) -> Result<EventCensus> {
    if trace.epochs.is_empty() || trace.records.is_empty() {
        return Err(Error::InvalidConfig("census needs a trace with stored records".into()));
    }
    let tau = trace
        .params
        .tau
        .ok_or_else(|| Error::InvalidConfig("census needs an epoch length".into()))?;
    let x0 = &trace.records[0].x;
    let mut b = CensusBuilder::new(rule, delta, trace.params.epsilon, tau, x0);
    let mut recs = trace.records.iter().peekable();
    for (s, ep) in trace.epochs.iter().enumerate() {
        b.begin_epoch(s, &ep.center);
        while let Some(r) = recs.next_if(|r| r.s == s) {
            let g = r
                .norm_g
                .ok_or_else(|| Error::InvalidConfig("census needs ‖𝒢‖ on every record".into()))?;
            b.observe(r.iter, r.k, &r.x, g, r.flags.prox_on_boundary);
        }
        b.end_epoch(ep.length);
    }
    Ok(b.finish())
}

/// Census sizes at which the event probability bounds reach one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CensusBounds {
    pub i1: f64,
    pub i2: f64,
}

impl CensusBounds {
    pub fn complies(&self, c: &EventCensus) -> bool {
        (c.i1.len() as f64) <= self.i1 && (c.i2.len() as f64) <= self.i2
    }
}

/// Fixed-length epochs with step `λ`.
pub fn fixed_epoch_bounds(
    delta_psi: f64,
    lambda: f64,
    mu: f64,
    kappa: f64,
    l: f64,
    delta: f64,
    tau: usize,
) -> CensusBounds {
    CensusBounds {
        i1: 128.0 * tau as f64 * delta_psi / (3.0 * mu * kappa * l * delta * delta),
        i2: 128.0 * lambda * delta_psi / (mu * delta * delta),
    }
}

/// Early-break epochs with step `η` and interpolation `γ`.
pub fn early_break_bounds(delta_psi: f64, eta: f64, gamma: f64, mu: f64, delta: f64, tau: usize) -> CensusBounds {
    CensusBounds {
        i1: 32.0 * gamma * tau as f64 * delta_psi / (eta * mu * delta * delta),
        i2: 128.0 * eta * delta_psi / (gamma * mu * delta * delta),
    }
}
