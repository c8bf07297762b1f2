use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use bpg_cli::config::{ConfigError, ExperimentConfig, Overrides};
use bpg_cli::runner::{execute, sweep, Axis, SweepError, SweepResult};
use bpg_cli::trace_csv::{emit_trace_csv, fmt_f64, trace_csv_bytes};
use bpg_cli::{oracle_suite, run_criterion, suites};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bpg", version, about = "Bregman proximal gradient experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration and write its trace and summary.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `solver.seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (beats the config and the environment).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a grid of configurations over seeds and fit the trend.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Axis as `name=v1,v2,...` with name one of n, epsilon, b.
        #[arg(long)]
        axis: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run verification suites.
    Verify {
        /// Suite name; repeatable.
        #[arg(long)]
        suite: Vec<String>,
        /// Reads `verify.suites` from a config when no suite is given.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run the brute-force reference oracles.
    Oracle {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Re-run a configuration and compare against a stored trace CSV.
    Replay {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

/// Failure classes mapped to exit codes.
enum Failure {
    Check(String),
    Config(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        match e.downcast_ref::<ConfigError>() {
            Some(c) => Failure::Config(c.to_string()),
            None => Failure::Check(format!("{e:#}")),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn out_dir(cfg: &ExperimentConfig, flag: Option<PathBuf>) -> Result<PathBuf> {
    let dir = flag.unwrap_or_else(|| cfg.out_dir());
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into())
}

fn dispatch(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Run { config, seed, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let spec = cfg.resolve(Overrides {
                seed,
                ..Default::default()
            })?;
            let res = execute(&spec)?;
            let dir = out_dir(&cfg, out)?;
            let name = stem(&config);
            if cfg.output.trace {
                let path = dir.join(format!("{name}_trace.csv"));
                emit_trace_csv(&res.trace, &path)?;
                println!("trace: {}", path.display());
            }
            let path = dir.join(format!("{name}_summary.json"));
            let json = serde_json::to_string_pretty(&res.summary).context("serializing summary")?;
            std::fs::write(&path, json + "\n").with_context(|| format!("writing {}", path.display()))?;
            println!("summary: {}", path.display());
            let s = &res.summary;
            println!(
                "{} on {}: {} iterations, {} samples, samples to ε {}",
                s.algorithm,
                s.problem,
                s.iterations,
                s.total_samples,
                s.samples_to_eps.map_or("-".to_string(), |v| v.to_string())
            );
            Ok(())
        }
        Command::Sweep { config, axis, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let axes = axis
                .iter()
                .map(|a| Axis::parse(a))
                .collect::<Result<Vec<_>>>()
                .map_err(|e| Failure::Config(format!("--axis: {e}")))?;
            if axes.iter().any(|a| a.is_empty()) {
                return Err(Failure::Config("--axis: empty axis".into()));
            }
            let res = sweep(&cfg, &axes).map_err(|e| match e {
                SweepError::Config(c) => Failure::from(c),
                SweepError::Run(r) => Failure::from(r),
            })?;
            let dir = out_dir(&cfg, out)?;
            write_sweep(&dir, &stem(&config), &res)?;
            for p in &res.points {
                println!(
                    "{}={}: {}/{} reached, mean samples to ε {}",
                    p.axis,
                    p.value,
                    p.reached,
                    p.runs,
                    p.mean_samples_to_eps.map_or("-".into(), |m| format!("{m:.1}"))
                );
            }
            match &res.trend {
                Some(t) => println!(
                    "trend vs {}: slope {:.4}, intercept {:.4}, R² {:.4}",
                    t.axis, t.slope, t.intercept, t.r2
                ),
                None => println!("no trend fit (needs one axis with at least 3 values, all reaching ε)"),
            }
            Ok(())
        }
        Command::Verify { suite, config } => {
            let mut names = suite;
            if names.is_empty() {
                if let Some(path) = config {
                    names = ExperimentConfig::load(&path)?.verify.suites;
                }
            }
            if names.is_empty() {
                names.push("quick".into());
            }
            let mut ids = Vec::new();
            for n in &names {
                let s = suites::suite(n).ok_or_else(|| {
                    Failure::Config(format!(
                        "unknown suite {n} (expected one of {})",
                        suites::suite_names().join(", ")
                    ))
                })?;
                for id in s {
                    if !ids.contains(id) {
                        ids.push(*id);
                    }
                }
            }
            let mut failed = 0;
            for id in ids {
                let o = run_criterion(id);
                println!("{}", o.report());
                if !o.passed() {
                    failed += 1;
                }
            }
            if failed > 0 {
                Err(Failure::Check(format!("{failed} criteria failed")))
            } else {
                Ok(())
            }
        }
        Command::Oracle { seed } => {
            let rep = oracle_suite(seed);
            for e in &rep.entries {
                println!(
                    "{} {}: max residual {:.3e} (tolerance {:.0e}) {}",
                    if e.passed { "PASS" } else { "FAIL" },
                    e.name,
                    e.max_residual,
                    e.tolerance,
                    e.detail
                );
            }
            if rep.passed() {
                Ok(())
            } else {
                Err(Failure::Check("oracle mismatch".into()))
            }
        }
        Command::Replay { config, trace, seed } => {
            let cfg = ExperimentConfig::load(&config)?;
            let mut spec = cfg.resolve(Overrides {
                seed,
                ..Default::default()
            })?;
            spec.solver.keep_trace = true;
            let res = execute(&spec)?;
            let fresh = trace_csv_bytes(&res.trace)?;
            let stored = std::fs::read(&trace)
                .with_context(|| format!("reading {}", trace.display()))
                .map_err(|e| Failure::Config(format!("{e:#}")))?;
            if let Some(c) = &res.census {
                println!("census: |I1| = {}, |I2| = {}", c.i1.len(), c.i2.len());
            }
            if fresh == stored {
                println!("replay identical: {} rows", res.trace.records.len());
                Ok(())
            } else {
                let line = fresh
                    .split(|b| *b == b'\n')
                    .zip(stored.split(|b| *b == b'\n'))
                    .position(|(a, b)| a != b)
                    .map_or("length".to_string(), |i| format!("line {}", i + 1));
                Err(Failure::Check(format!(
                    "replay differs from {} at {line}",
                    trace.display()
                )))
            }
        }
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn write_sweep(dir: &Path, name: &str, res: &SweepResult) -> Result<()> {
    let path = dir.join(format!("{name}_runs.csv"));
    let mut w = csv::Writer::from_path(&path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record([
        "n",
        "epsilon",
        "b",
        "seed",
        "samples_to_eps",
        "total_samples",
        "iterations",
        "final_sq_mapping",
    ])?;
    for r in &res.rows {
        w.write_record([
            opt(r.n),
            fmt_f64(r.epsilon),
            opt(r.b),
            r.seed.to_string(),
            opt(r.samples_to_eps),
            r.total_samples.to_string(),
            r.iterations.to_string(),
            r.final_sq_mapping.map(fmt_f64).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    let path = dir.join(format!("{name}_points.csv"));
    let mut w = csv::Writer::from_path(&path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(["axis", "value", "runs", "reached", "mean_samples_to_eps"])?;
    for p in &res.points {
        w.write_record([
            p.axis.clone(),
            fmt_f64(p.value),
            p.runs.to_string(),
            p.reached.to_string(),
            p.mean_samples_to_eps.map(fmt_f64).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    if let Some(t) = &res.trend {
        let path = dir.join(format!("{name}_trend.csv"));
        let mut f = std::fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        writeln!(f, "axis,slope,intercept,r2")?;
        writeln!(
            f,
            "{},{},{},{}",
            t.axis,
            fmt_f64(t.slope),
            fmt_f64(t.intercept),
            fmt_f64(t.r2)
        )?;
    }
    Ok(())
}
