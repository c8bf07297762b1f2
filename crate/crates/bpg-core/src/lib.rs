//! Bregman proximal gradient methods for nonconvex composite problems
//! `min f(x) + φ(x)` where `f` is smooth relative to a kernel `h`.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod kernels;
pub mod mappings;
pub mod numerics;
pub mod problems;
pub mod prox;
pub mod solvers;

pub use error::{Error, Result};
pub use kernels::{Kernel, KernelRegularity};
pub use numerics::RandomStream;
pub use problems::{Objective, Problem, Sample, Structure};
pub use prox::CompositeTerm;
