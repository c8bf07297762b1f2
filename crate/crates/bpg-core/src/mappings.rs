//! Stationarity measures built on the Bregman prox.

use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::numerics::vecops::*;
use crate::problems::Problem;
use crate::prox::{on_boundary, prox_point, CompositeTerm};

/// Prox output together with both gradient mappings at `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct MappingEval {
    pub x_plus: Vec<f64>,
    /// `(x - x⁺) / λ`
    pub g: Vec<f64>,
    /// `(∇h(x) - ∇h(x⁺)) / λ`
    pub d: Vec<f64>,
}

/// Evaluates both mappings from an already computed direction `v`.
pub fn eval_mappings(kernel: &Kernel, phi: &CompositeTerm, x: &[f64], v: &[f64], lambda: f64) -> Result<MappingEval> {
    let x_plus = prox_point(kernel, phi, x, v, lambda)?;
    let g = scale(&sub(x, &x_plus), 1.0 / lambda);
    let d = scale(&sub(&kernel.grad(x), &kernel.grad(&x_plus)), 1.0 / lambda);
    Ok(MappingEval { x_plus, g, d })
}

pub fn grad_map_g(kernel: &Kernel, phi: &CompositeTerm, problem: &Problem, x: &[f64], lambda: f64) -> Result<Vec<f64>> {
    Ok(eval_mappings(kernel, phi, x, &problem.grad(x), lambda)?.g)
}

pub fn grad_map_d(kernel: &Kernel, phi: &CompositeTerm, problem: &Problem, x: &[f64], lambda: f64) -> Result<Vec<f64>> {
    Ok(eval_mappings(kernel, phi, x, &problem.grad(x), lambda)?.d)
}

/// Mapping under the extra constraint `x⁺ ∈ B(center, radius)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RestrictedMap {
    pub mapping: Vec<f64>,
    pub x_plus: Vec<f64>,
    pub on_boundary: bool,
}

pub fn grad_map_restricted(
    kernel: &Kernel,
    phi: &CompositeTerm,
    center: &[f64],
    radius: f64,
    problem: &Problem,
    x: &[f64],
    lambda: f64,
) -> Result<RestrictedMap> {
    if dist(x, center) > radius * (1.0 + 1e-12) {
        return Err(Error::DomainViolation("point lies outside the restricting ball".into()));
    }
    let constrained = phi.with_ball(center, radius)?;
    let x_plus = prox_point(kernel, &constrained, x, &problem.grad(x), lambda)?;
    Ok(RestrictedMap {
        mapping: scale(&sub(x, &x_plus), 1.0 / lambda),
        on_boundary: on_boundary(&x_plus, center, radius),
        x_plus,
    })
}

/// `(∇h(x) - ∇h(T(x, v))) / η` for an estimated direction `v`.
pub fn grad_map_d_surrogate(kernel: &Kernel, phi: &CompositeTerm, x: &[f64], v: &[f64], eta: f64) -> Result<Vec<f64>> {
    Ok(eval_mappings(kernel, phi, x, v, eta)?.d)
}

/// Small-step limit of the old mapping, `[∇²h(x)]⁻¹ ∇f(x)`.
pub fn limiting_map(kernel: &Kernel, problem: &Problem, x: &[f64]) -> Result<Vec<f64>> {
    if !matches!(problem.phi, CompositeTerm::Zero) {
        return Err(Error::Unsupported("limiting mapping needs a smooth problem".into()));
    }
    kernel.hess_solve(x, &problem.grad(x))
}

/// `dist(0, ∇f(x) + ∂φ(x))` for `φ ∈ {Zero, L1}`.
pub fn dist_to_subdifferential(problem: &Problem, phi: &CompositeTerm, x: &[f64]) -> Result<f64> {
    let w = match phi {
        CompositeTerm::Zero => 0.0,
        CompositeTerm::L1 { weight } => *weight,
        _ => {
            return Err(Error::Unsupported(
                "distance to the subdifferential of a ball term".into(),
            ))
        }
    };
    let g = problem.grad(x);
    Ok(g.iter()
        .zip(x)
        .map(|(gi, xi)| {
            let e = if *xi != 0.0 {
                gi + w.copysign(*xi)
            } else {
                (gi.abs() - w).max(0.0)
            };
            e * e
        })
        .sum::<f64>()
        .sqrt())
}

/// Upper bound `‖∇f(x⁺) + u‖` with the prox witness `u ∈ ∂φ(x⁺)`. Works for
/// every composite term, including balls.
pub fn subdifferential_witness_bound(
    kernel: &Kernel,
    phi: &CompositeTerm,
    problem: &Problem,
    x: &[f64],
    lambda: f64,
) -> Result<f64> {
    let v = problem.grad(x);
    let y = prox_point(kernel, phi, x, &v, lambda)?;
    let u = crate::prox::subgrad_witness(kernel, x, &y, &v, lambda);
    Ok(norm(&add(&problem.grad(&y), &u)))
}
