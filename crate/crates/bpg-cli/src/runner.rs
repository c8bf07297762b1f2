//! Single runs and parameter sweeps.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use anyhow::{anyhow, Result};
use bpg_core::solvers::{
    alg1_run, alg2_expectation_run, alg2_run, bpg_deterministic, tbpg_run, tbpg_svr_run, EventCensus, Trace,
};
use serde::Serialize;

use crate::config::{Algorithm, ConfigError, ExperimentConfig, Overrides, RunSpec};
use crate::trend::{fit_trend, TrendFit};

/// Run-level results written next to the trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub algorithm: String,
    pub problem: String,
    pub n: usize,
    pub dim: usize,
    pub seed: u64,
    pub epsilon: f64,
    pub iterations: usize,
    pub total_samples: u64,
    /// Samples consumed when the accuracy target was first met.
    pub samples_to_eps: Option<u64>,
    /// Algorithm-specific final accuracy: `‖𝒢(x_out)‖²` for epoch
    /// methods, `‖𝒟‖²` at the stop for the adaptive ones.
    pub final_sq_mapping: Option<f64>,
    pub epsilon_admissible: bool,
    pub census_i1: Option<usize>,
    pub census_i2: Option<usize>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trace: Trace,
    pub summary: RunSummary,
    pub census: Option<EventCensus>,
}

pub fn execute(spec: &RunSpec) -> Result<RunOutput> {
    let p = &spec.problem;
    let k = &spec.kernel;
    let cfg = &spec.solver;
    let mut census = None;
    let (trace, samples_to_eps, final_sq) = match spec.algorithm {
        Algorithm::Bpg => {
            let lambda = match cfg.lambda {
                Some(l) => l,
                None => 1.0 / p.smad_l,
            };
            let t = bpg_deterministic(p, k, lambda, &p.x0, cfg.max_iter)?;
            let hit = t
                .records
                .iter()
                .find(|r| r.norm_g.is_some_and(|g| g * g <= cfg.epsilon))
                .map(|r| r.samples);
            let last = t.records.last().and_then(|r| r.norm_g).map(|g| g * g);
            (t, hit, last)
        }
        Algorithm::Tbpg => {
            let r = tbpg_run(p, k, cfg)?;
            let hit = r.t_eps.map(|_| r.trace.total_samples);
            (r.trace, hit, Some(r.final_sq_d))
        }
        Algorithm::TbpgSvr => {
            let r = tbpg_svr_run(p, k, cfg)?;
            let hit = r.stop.map(|_| r.trace.total_samples);
            (r.trace, hit, r.final_sq_d)
        }
        Algorithm::Alg1 | Algorithm::Alg2 | Algorithm::Alg2Expectation => {
            let r = match spec.algorithm {
                Algorithm::Alg1 => alg1_run(p, k, cfg)?,
                Algorithm::Alg2 => alg2_run(p, k, cfg)?,
                _ => alg2_expectation_run(p, k, cfg)?,
            };
            census = Some(r.census.clone());
            (r.trace, r.stats.samples_to_eps, r.out_sq_g)
        }
    };
    let summary = RunSummary {
        algorithm: spec.algorithm.name().to_string(),
        problem: p.name.clone(),
        n: p.n(),
        dim: p.dim(),
        seed: cfg.seed,
        epsilon: cfg.epsilon,
        iterations: trace.iterations,
        total_samples: trace.total_samples,
        samples_to_eps,
        final_sq_mapping: final_sq,
        epsilon_admissible: trace.params.epsilon_admissible,
        census_i1: census.as_ref().map(|c| c.i1.len()),
        census_i2: census.as_ref().map(|c| c.i2.len()),
        notes: trace.params.notes.clone(),
    };
    Ok(RunOutput { trace, summary, census })
}

/// Runs `jobs` on a bounded pool of scoped threads. Results come back in
/// job order whatever the scheduling.
pub fn run_pool<J, T, F>(jobs: &[J], workers: usize, f: F) -> Vec<T>
where
    J: Sync,
    T: Send,
    F: Fn(&J) -> T + Sync,
{
    let workers = if workers == 0 {
        std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
    } else {
        workers
    }
    .clamp(1, jobs.len().max(1));
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<T>>> = Mutex::new((0..jobs.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= jobs.len() {
                    break;
                }
                let out = f(&jobs[i]);
                slots.lock().expect("result slots poisoned")[i] = Some(out);
            });
        }
    });
    slots
        .into_inner()
        .expect("result slots poisoned")
        .into_iter()
        .map(|o| o.expect("every job ran"))
        .collect()
}

/// Sweep axis with its values.
#[derive(Debug, Clone, PartialEq)]
pub enum Axis {
    N(Vec<usize>),
    Epsilon(Vec<f64>),
    B(Vec<usize>),
}

impl Axis {
    /// Parses `name=v1,v2,…` as given on the command line.
    pub fn parse(s: &str) -> Result<Axis> {
        let (name, vals) = s
            .split_once('=')
            .ok_or_else(|| anyhow!("axis must look like name=v1,v2,..."))?;
        let items: Vec<&str> = vals.split(',').map(str::trim).filter(|v| !v.is_empty()).collect();
        if items.is_empty() {
            return Err(anyhow!("axis {name} has no values"));
        }
        let ints = || -> Result<Vec<usize>> {
            items
                .iter()
                .map(|v| v.parse::<usize>().map_err(|e| anyhow!("axis {name}: {v}: {e}")))
                .collect()
        };
        match name.trim() {
            "n" => Ok(Axis::N(ints()?)),
            "b" => Ok(Axis::B(ints()?)),
            "epsilon" | "eps" => Ok(Axis::Epsilon(
                items
                    .iter()
                    .map(|v| v.parse::<f64>().map_err(|e| anyhow!("axis {name}: {v}: {e}")))
                    .collect::<Result<_>>()?,
            )),
            other => Err(anyhow!("unknown axis {other} (expected n, epsilon or b)")),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Axis::N(_) => "n",
            Axis::Epsilon(_) => "epsilon",
            Axis::B(_) => "b",
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Axis::N(v) | Axis::B(v) => v.len(),
            Axis::Epsilon(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// One run of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub n: Option<usize>,
    pub epsilon: f64,
    pub b: Option<usize>,
    pub seed: u64,
    pub samples_to_eps: Option<u64>,
    pub total_samples: u64,
    pub iterations: usize,
    pub final_sq_mapping: Option<f64>,
}

/// Mean samples-to-ε per value of the varied axis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub axis: String,
    pub value: f64,
    pub runs: usize,
    pub reached: usize,
    pub mean_samples_to_eps: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub points: Vec<SweepPoint>,
    /// Fit of mean samples against the varied axis (`1/ε` for the
    /// accuracy axis), when exactly one axis varies over at least three
    /// values and every point reached the target.
    pub trend: Option<TrendFit>,
}

/// Errors from a sweep split into configuration problems and run failures.
#[derive(Debug, thiserror::Error)]
pub enum SweepError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("run failed: {0}")]
    Run(#[from] anyhow::Error),
}

pub fn sweep(cfg: &ExperimentConfig, axes: &[Axis]) -> Result<SweepResult, SweepError> {
    let mut ns: Vec<Option<usize>> = vec![None];
    let mut eps: Vec<Option<f64>> = vec![None];
    let mut bs: Vec<Option<usize>> = vec![None];
    if !cfg.sweep.n.is_empty() {
        ns = cfg.sweep.n.iter().map(|v| Some(*v)).collect();
    }
    if !cfg.sweep.epsilon.is_empty() {
        eps = cfg.sweep.epsilon.iter().map(|v| Some(*v)).collect();
    }
    if !cfg.sweep.b.is_empty() {
        bs = cfg.sweep.b.iter().map(|v| Some(*v)).collect();
    }
    for a in axes {
        match a {
            Axis::N(v) => ns = v.iter().map(|x| Some(*x)).collect(),
            Axis::Epsilon(v) => eps = v.iter().map(|x| Some(*x)).collect(),
            Axis::B(v) => bs = v.iter().map(|x| Some(*x)).collect(),
        }
    }
    if ns.len() == 1 && eps.len() == 1 && bs.len() == 1 && cfg.seeds().len() == 1 && axes.is_empty() {
        return Err(ConfigError::Invalid {
            path: cfg.path.clone(),
            key: "sweep".into(),
            message: "a sweep needs at least one axis or several seeds".into(),
        }
        .into());
    }
    let mut specs = Vec::new();
    for n in &ns {
        for e in &eps {
            for b in &bs {
                for seed in cfg.seeds() {
                    let ov = Overrides {
                        n: *n,
                        epsilon: *e,
                        b: *b,
                        seed: Some(seed),
                    };
                    specs.push((ov, cfg.resolve(ov)?));
                }
            }
        }
    }
    let outputs = run_pool(&specs, cfg.sweep.workers, |(ov, spec)| {
        let mut spec = spec.clone();
        spec.solver.keep_trace = false;
        execute(&spec).map(|o| (*ov, o.summary))
    });
    let mut rows = Vec::with_capacity(outputs.len());
    for out in outputs {
        let (ov, s) = out?;
        rows.push(SweepRow {
            n: ov.n.or(if s.n > 1 { Some(s.n) } else { None }),
            epsilon: s.epsilon,
            b: ov.b,
            seed: s.seed,
            samples_to_eps: s.samples_to_eps,
            total_samples: s.total_samples,
            iterations: s.iterations,
            final_sq_mapping: s.final_sq_mapping,
        });
    }
    let varied: Vec<(&str, usize)> = [("n", ns.len()), ("epsilon", eps.len()), ("b", bs.len())]
        .into_iter()
        .filter(|(_, l)| *l > 1)
        .collect();
    let mut points = Vec::new();
    let mut trend = None;
    if let [(axis, _)] = varied.as_slice() {
        let key = |r: &SweepRow| -> f64 {
            match *axis {
                "n" => r.n.unwrap_or(0) as f64,
                "b" => r.b.unwrap_or(0) as f64,
                _ => r.epsilon,
            }
        };
        let mut groups: BTreeMap<u64, Vec<&SweepRow>> = BTreeMap::new();
        for r in &rows {
            groups.entry(key(r).to_bits()).or_default().push(r);
        }
        for (bits, group) in groups {
            let reached: Vec<f64> = group
                .iter()
                .filter_map(|r| r.samples_to_eps.map(|s| s as f64))
                .collect();
            points.push(SweepPoint {
                axis: axis.to_string(),
                value: f64::from_bits(bits),
                runs: group.len(),
                reached: reached.len(),
                mean_samples_to_eps: if reached.is_empty() {
                    None
                } else {
                    Some(reached.iter().sum::<f64>() / reached.len() as f64)
                },
            });
        }
        if points.len() >= 3 && points.iter().all(|p| p.reached == p.runs) {
            let data: Vec<(f64, f64)> = points
                .iter()
                .map(|p| {
                    let x = if *axis == "epsilon" { 1.0 / p.value } else { p.value };
                    (x, p.mean_samples_to_eps.unwrap_or(f64::NAN))
                })
                .collect();
            let name = if *axis == "epsilon" { "1/epsilon" } else { axis };
            trend = fit_trend(name, &data).ok();
        }
    }
    Ok(SweepResult { rows, points, trend })
}
