use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("endpoints g({lo}) and g({hi}) do not straddle target {target}")]
    NoBracket { lo: f64, hi: f64, target: f64 },

    #[error("no convergence after {iters} iterations (residual {residual:e})")]
    NoConvergence { iters: usize, residual: f64 },

    #[error("non-finite value encountered: {0}")]
    NonFinite(&'static str),

    #[error("operation not supported for kernel {0}")]
    UnsupportedKernel(String),

    #[error("iterate left the kernel domain: {0}")]
    DomainViolation(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("sample budget {budget} exceeded: run needs {needed}")]
    InsufficientBudget { needed: u64, budget: u64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),
}
