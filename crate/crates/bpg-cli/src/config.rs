//! Experiment configuration files (TOML).

use std::path::{Path, PathBuf};

use bpg_core::problems::{make_cubic_expectation, make_cubic_finite_sum, make_example1, make_example2};
use bpg_core::solvers::{OutputSelection, SolverConfig};
use bpg_core::{CompositeTerm, Kernel, Problem};
use serde::Deserialize;
use thiserror::Error;

/// Environment variable that overrides `output.dir`.
pub const OUT_DIR_ENV: &str = "BPG_OUT_DIR";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: cannot read config: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("{path}: key `{key}`: {message}")]
    Invalid { path: String, key: String, message: String },
}

/// A number or the string `"auto"`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Auto<T> {
    Value(T),
    Text(String),
}

impl<T> Default for Auto<T> {
    fn default() -> Self {
        Auto::Text("auto".into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Bpg,
    Tbpg,
    Alg1,
    Alg2,
    Alg2Expectation,
    TbpgSvr,
}

impl Algorithm {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "bpg" => Algorithm::Bpg,
            "tbpg" => Algorithm::Tbpg,
            "alg1" => Algorithm::Alg1,
            "alg2" => Algorithm::Alg2,
            "alg2_expectation" => Algorithm::Alg2Expectation,
            "tbpg_svr" => Algorithm::TbpgSvr,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Bpg => "bpg",
            Algorithm::Tbpg => "tbpg",
            Algorithm::Alg1 => "alg1",
            Algorithm::Alg2 => "alg2",
            Algorithm::Alg2Expectation => "alg2_expectation",
            Algorithm::TbpgSvr => "tbpg_svr",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub name: String,
    #[serde(default)]
    pub r: Option<u32>,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub dim: Option<usize>,
    /// Instance seed; `"auto"` follows the run seed.
    #[serde(default)]
    pub seed: Auto<u64>,
    #[serde(default)]
    pub l1: f64,
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSection {
    /// `auto`, `quadratic`, `polynomial` or `monomial`.
    #[serde(default = "auto_string")]
    pub name: String,
    #[serde(default)]
    pub r: Option<u32>,
}

impl Default for KernelSection {
    fn default() -> Self {
        KernelSection {
            name: auto_string(),
            r: None,
        }
    }
}

fn auto_string() -> String {
    "auto".into()
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub algorithm: String,
    #[serde(default)]
    pub lambda: Auto<f64>,
    #[serde(default)]
    pub eta: Auto<f64>,
    #[serde(default)]
    pub gamma: Auto<f64>,
    #[serde(default)]
    pub tau: Auto<usize>,
    #[serde(default)]
    pub b: Auto<usize>,
    #[serde(default)]
    pub epochs: Auto<usize>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_q")]
    pub q: f64,
    #[serde(default = "default_budget")]
    pub max_total_samples: u64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default)]
    pub seed: u64,
    /// `auto`, `uniform_all` or `interior`.
    #[serde(default = "auto_string")]
    pub output_selection: String,
    #[serde(default = "yes")]
    pub keep_trace: bool,
    #[serde(default)]
    pub stop_at_eps: bool,
    #[serde(default)]
    pub lower_bound: Auto<f64>,
}

fn default_epsilon() -> f64 {
    1e-3
}
fn default_q() -> f64 {
    0.1
}
fn default_budget() -> u64 {
    10_000_000_000
}
fn default_max_iter() -> usize {
    10_000
}
fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default)]
    pub epsilon: Vec<f64>,
    #[serde(default)]
    pub n: Vec<usize>,
    #[serde(default)]
    pub b: Vec<usize>,
    #[serde(default)]
    pub seeds: Vec<u64>,
    /// Shorthand for `seeds = [0, 1, …, seed_count - 1]`.
    #[serde(default)]
    pub seed_count: Option<u64>,
    /// Worker threads; zero picks the available parallelism.
    #[serde(default)]
    pub workers: usize,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default = "yes")]
    pub trace: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: default_dir(),
            trace: true,
        }
    }
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    /// Suites run by `verify` when `--suite` is not given.
    #[serde(default)]
    pub suites: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSection,
    #[serde(default)]
    pub kernel: KernelSection,
    pub solver: SolverSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub verify: VerifySection,
    /// Source file, for error messages.
    #[serde(skip)]
    pub path: String,
}

/// Per-run overrides applied by sweeps.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub n: Option<usize>,
    pub epsilon: Option<f64>,
    pub b: Option<usize>,
    pub seed: Option<u64>,
}

/// Everything needed to execute one run.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub algorithm: Algorithm,
    pub problem: Problem,
    pub kernel: Kernel,
    pub solver: SolverConfig,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let display = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: display.clone(),
            source,
        })?;
        Self::parse(&text, &display)
    }

    pub fn parse(text: &str, path: &str) -> Result<Self, ConfigError> {
        let mut cfg: ExperimentConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: path.to_string(),
            message: e.to_string().trim_end().to_string(),
        })?;
        cfg.path = path.to_string();
        cfg.check()?;
        Ok(cfg)
    }

    fn invalid(&self, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError::Invalid {
            path: self.path.clone(),
            key: key.to_string(),
            message: message.into(),
        }
    }

    fn auto<T: Copy>(&self, key: &str, v: &Auto<T>) -> Result<Option<T>, ConfigError> {
        match v {
            Auto::Value(x) => Ok(Some(*x)),
            Auto::Text(s) if s == "auto" => Ok(None),
            Auto::Text(s) => Err(self.invalid(key, format!("expected a number or \"auto\", got \"{s}\""))),
        }
    }

    /// Checks everything that does not depend on sweep overrides.
    fn check(&self) -> Result<(), ConfigError> {
        self.algorithm()?;
        if !matches!(
            self.problem.name.as_str(),
            "example1" | "example2" | "cubic_fs" | "cubic_exp"
        ) {
            return Err(self.invalid(
                "problem.name",
                format!(
                    "unknown problem \"{}\" (expected example1, example2, cubic_fs or cubic_exp)",
                    self.problem.name
                ),
            ));
        }
        if !matches!(
            self.kernel.name.as_str(),
            "auto" | "quadratic" | "polynomial" | "monomial"
        ) {
            return Err(self.invalid("kernel.name", format!("unknown kernel \"{}\"", self.kernel.name)));
        }
        if !matches!(
            self.solver.output_selection.as_str(),
            "auto" | "uniform_all" | "interior"
        ) {
            return Err(self.invalid(
                "solver.output_selection",
                format!(
                    "expected auto, uniform_all or interior, got \"{}\"",
                    self.solver.output_selection
                ),
            ));
        }
        self.auto("problem.seed", &self.problem.seed)?;
        self.auto("solver.lambda", &self.solver.lambda)?;
        self.auto("solver.eta", &self.solver.eta)?;
        self.auto("solver.gamma", &self.solver.gamma)?;
        self.auto("solver.tau", &self.solver.tau)?;
        self.auto("solver.b", &self.solver.b)?;
        self.auto("solver.epochs", &self.solver.epochs)?;
        self.auto("solver.lower_bound", &self.solver.lower_bound)?;
        if self.sweep.seed_count == Some(0) {
            return Err(self.invalid("sweep.seed_count", "must be at least 1"));
        }
        if self.sweep.epsilon.iter().any(|e| !(*e > 0.0)) {
            return Err(self.invalid("sweep.epsilon", "values must be positive"));
        }
        if self.sweep.n.contains(&0) {
            return Err(self.invalid("sweep.n", "values must be at least 1"));
        }
        if self.sweep.b.contains(&0) {
            return Err(self.invalid("sweep.b", "values must be at least 1"));
        }
        // surface solver validation errors at load time
        let ov = Overrides {
            n: self.sweep.n.first().copied(),
            ..Default::default()
        };
        self.resolve(ov).map(|_| ())
    }

    pub fn algorithm(&self) -> Result<Algorithm, ConfigError> {
        Algorithm::parse(&self.solver.algorithm).ok_or_else(|| {
            self.invalid(
                "solver.algorithm",
                format!(
                    "unknown algorithm \"{}\" (expected bpg, tbpg, alg1, alg2, alg2_expectation or tbpg_svr)",
                    self.solver.algorithm
                ),
            )
        })
    }

    /// Output directory after the environment override.
    pub fn out_dir(&self) -> PathBuf {
        match std::env::var_os(OUT_DIR_ENV) {
            Some(d) if !d.is_empty() => PathBuf::from(d),
            _ => self.output.dir.clone(),
        }
    }

    /// Seeds of a sweep; a single run uses `solver.seed`.
    pub fn seeds(&self) -> Vec<u64> {
        if !self.sweep.seeds.is_empty() {
            self.sweep.seeds.clone()
        } else if let Some(c) = self.sweep.seed_count {
            (0..c).collect()
        } else {
            vec![self.solver.seed]
        }
    }

    fn build_problem(&self, ov: &Overrides, run_seed: u64) -> Result<Problem, ConfigError> {
        let p = &self.problem;
        let inst_seed = self.auto("problem.seed", &p.seed)?.unwrap_or(run_seed);
        let core = |key: &str, r: bpg_core::Result<Problem>| r.map_err(|e| self.invalid(key, e.to_string()));
        let mut problem = match p.name.as_str() {
            "example1" => core("problem.r", make_example1(p.r.unwrap_or(4)))?,
            "example2" => core("problem.r", make_example2(p.r.unwrap_or(4)))?,
            "cubic_fs" => {
                let n =
                    ov.n.or(p.n)
                        .ok_or_else(|| self.invalid("problem.n", "cubic_fs needs n"))?;
                core("problem.n", make_cubic_finite_sum(n, p.dim.unwrap_or(3), inst_seed))?
            }
            "cubic_exp" => core("problem.name", make_cubic_expectation(inst_seed))?,
            other => return Err(self.invalid("problem.name", format!("unknown problem \"{other}\""))),
        };
        if p.l1 != 0.0 {
            let phi = CompositeTerm::l1(p.l1).map_err(|e| self.invalid("problem.l1", e.to_string()))?;
            problem = problem.with_phi(phi);
        }
        if let Some(x0) = &p.x0 {
            if x0.len() != problem.dim() {
                return Err(self.invalid(
                    "problem.x0",
                    format!("expected {} coordinates, got {}", problem.dim(), x0.len()),
                ));
            }
            problem.x0 = x0.clone();
        }
        Ok(problem)
    }

    fn build_kernel(&self, problem: &Problem) -> Result<Kernel, ConfigError> {
        let r = self.kernel.r;
        let k = match self.kernel.name.as_str() {
            "auto" => return Ok(problem.kernel),
            "quadratic" => Ok(Kernel::Quadratic),
            "polynomial" => Kernel::polynomial(r.ok_or_else(|| self.invalid("kernel.r", "polynomial kernel needs r"))?),
            "monomial" => Kernel::monomial(r.ok_or_else(|| self.invalid("kernel.r", "monomial kernel needs r"))?),
            other => return Err(self.invalid("kernel.name", format!("unknown kernel \"{other}\""))),
        };
        k.map_err(|e| self.invalid("kernel.r", e.to_string()))
    }

    pub fn resolve(&self, ov: Overrides) -> Result<RunSpec, ConfigError> {
        let s = &self.solver;
        let seed = ov.seed.unwrap_or(s.seed);
        let problem = self.build_problem(&ov, seed)?;
        let kernel = self.build_kernel(&problem)?;
        let output_selection = match s.output_selection.as_str() {
            "uniform_all" => Some(OutputSelection::UniformAll),
            "interior" => Some(OutputSelection::UniformInteriorDeltaQuarter),
            _ => None,
        };
        let solver = SolverConfig {
            lambda: self.auto("solver.lambda", &s.lambda)?,
            eta: self.auto("solver.eta", &s.eta)?,
            gamma: self.auto("solver.gamma", &s.gamma)?,
            tau: self.auto("solver.tau", &s.tau)?,
            b: ov.b.or(self.auto("solver.b", &s.b)?),
            epochs: self.auto("solver.epochs", &s.epochs)?,
            epsilon: ov.epsilon.unwrap_or(s.epsilon),
            q: s.q,
            max_total_samples: s.max_total_samples,
            max_iter: s.max_iter,
            seed,
            output_selection,
            keep_trace: s.keep_trace,
            stop_at_eps: s.stop_at_eps,
            lower_bound: self.auto("solver.lower_bound", &s.lower_bound)?,
        };
        if let Some((name, msg)) = solver.first_invalid() {
            return Err(self.invalid(&format!("solver.{name}"), msg));
        }
        Ok(RunSpec {
            algorithm: self.algorithm()?,
            problem,
            kernel,
            solver,
        })
    }
}
