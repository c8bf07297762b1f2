//! Run parameters. `None` means "resolve automatically".

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputSelection {
    /// Uniform over every iterate.
    UniformAll,
    /// Uniform over iterates at least `δ/4` inside their epoch ball.
    UniformInteriorDeltaQuarter,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub lambda: Option<f64>,
    pub eta: Option<f64>,
    pub gamma: Option<f64>,
    pub tau: Option<usize>,
    pub b: Option<usize>,
    pub epochs: Option<usize>,
    pub epsilon: f64,
    pub q: f64,
    pub max_total_samples: u64,
    /// Iteration cap for the deterministic methods.
    pub max_iter: usize,
    pub seed: u64,
    pub output_selection: Option<OutputSelection>,
    /// Store per-iterate records. Census statistics are kept either way.
    pub keep_trace: bool,
    /// Stop an epoch method once the running mean of `‖𝒢‖²` reaches `ε`.
    pub stop_at_eps: bool,
    /// Overrides the problem's own lower bound when estimating `Δ_Ψ`.
    pub lower_bound: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            lambda: None,
            eta: None,
            gamma: None,
            tau: None,
            b: None,
            epochs: None,
            epsilon: 1e-3,
            q: 0.1,
            max_total_samples: 10_000_000_000,
            max_iter: 10_000,
            seed: 0,
            output_selection: None,
            keep_trace: true,
            stop_at_eps: false,
            lower_bound: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        self.first_invalid()
            .map_or(Ok(()), |(name, msg)| Err(Error::InvalidConfig(format!("{name} {msg}"))))
    }

    /// Name of the first out-of-range field and what is wrong with it.
    pub fn first_invalid(&self) -> Option<(&'static str, String)> {
        let positive = [
            ("lambda", self.lambda),
            ("eta", self.eta),
            ("gamma", self.gamma),
            ("epsilon", Some(self.epsilon)),
        ];
        for (name, v) in positive {
            match v {
                Some(x) if !(x > 0.0 && x.is_finite()) => return Some((name, format!("must be positive, got {x}"))),
                _ => {}
            }
        }
        if let Some(g) = self.gamma.filter(|g| *g > 1.0) {
            return Some(("gamma", format!("must lie in (0, 1], got {g}")));
        }
        if !(self.q > 0.0 && self.q < 0.5) {
            return Some(("q", format!("must lie in (0, 1/2), got {}", self.q)));
        }
        for (name, v) in [("tau", self.tau), ("b", self.b), ("epochs", self.epochs)] {
            if v == Some(0) {
                return Some((name, "must be at least 1".into()));
            }
        }
        None
    }
}
