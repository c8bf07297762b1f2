//! Per-iteration records and run-level bookkeeping.

/// Event flags attached to one iterate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepFlags {
    /// The update prox (with the estimated direction) landed on the epoch
    /// boundary.
    pub hit_boundary: bool,
    /// The restricted prox with the exact gradient lies on the epoch
    /// boundary.
    pub prox_on_boundary: bool,
    /// The direction used at this iterate is an exact full gradient.
    pub full_batch: bool,
}

/// Diagnostics for iterate `x_{s,k}`. `s` and `k` are zero based.
#[derive(Debug, Clone, PartialEq)]
pub struct IterRecord {
    pub iter: usize,
    pub s: usize,
    pub k: usize,
    pub x: Vec<f64>,
    pub psi: f64,
    pub norm_g: Option<f64>,
    pub norm_d: Option<f64>,
    pub norm_restricted_g: Option<f64>,
    pub norm_d_surrogate: Option<f64>,
    /// `‖∇f(x) - v‖` for the direction `v` actually used.
    pub est_error: Option<f64>,
    pub step: f64,
    pub dist_boundary: Option<f64>,
    /// Cumulative samples consumed once this iterate's direction is formed.
    pub samples: u64,
    pub flags: StepFlags,
}

impl IterRecord {
    pub fn new(iter: usize, s: usize, k: usize, x: Vec<f64>, psi: f64, step: f64, samples: u64) -> Self {
        IterRecord {
            iter,
            s,
            k,
            x,
            psi,
            norm_g: None,
            norm_d: None,
            norm_restricted_g: None,
            norm_d_surrogate: None,
            est_error: None,
            step,
            dist_boundary: None,
            samples,
            flags: StepFlags::default(),
        }
    }
}

/// Geometry and length of one epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochInfo {
    pub center: Vec<f64>,
    pub radius: f64,
    /// Realized number of inner steps `τ_s`.
    pub length: usize,
    /// Samples spent on the anchor direction.
    pub anchor_samples: u64,
}

/// Parameters after "auto" resolution.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResolvedParams {
    pub lambda: Option<f64>,
    pub eta: Option<f64>,
    pub gamma: Option<f64>,
    pub tau: Option<usize>,
    pub b: Option<usize>,
    pub epochs: Option<usize>,
    pub big_batch: Option<f64>,
    pub delta_psi: Option<f64>,
    pub epsilon: f64,
    /// The accuracy condition required by the complexity bound holds.
    pub epsilon_admissible: bool,
    /// `epochs` was reduced to fit the sample budget.
    pub capped: bool,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    pub algorithm: String,
    pub dim: usize,
    pub params: ResolvedParams,
    pub records: Vec<IterRecord>,
    pub epochs: Vec<EpochInfo>,
    pub total_samples: u64,
    pub iterations: usize,
    pub x_final: Vec<f64>,
}

impl Trace {
    pub fn new(algorithm: &str, dim: usize, params: ResolvedParams) -> Self {
        Trace {
            algorithm: algorithm.to_string(),
            dim,
            params,
            ..Default::default()
        }
    }

    pub fn xs(&self) -> impl Iterator<Item = &[f64]> {
        self.records.iter().map(|r| r.x.as_slice())
    }
}

/// Running statistics of `‖𝒢‖²` kept whether or not records are stored.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunningStats {
    count: usize,
    sum_sq_g: f64,
    /// Samples consumed when the running mean of `‖𝒢‖²` first dropped to
    /// the target.
    pub samples_to_eps: Option<u64>,
    pub iters_to_eps: Option<usize>,
}

impl RunningStats {
    pub fn push(&mut self, sq_g: f64, samples: u64, epsilon: f64) {
        self.count += 1;
        self.sum_sq_g += sq_g;
        if self.samples_to_eps.is_none() && self.mean_sq_g() <= epsilon {
            self.samples_to_eps = Some(samples);
            self.iters_to_eps = Some(self.count);
        }
    }

    pub fn mean_sq_g(&self) -> f64 {
        if self.count == 0 {
            f64::NAN
        } else {
            self.sum_sq_g / self.count as f64
        }
    }

    pub fn count(&self) -> usize {
        self.count
    }
}
