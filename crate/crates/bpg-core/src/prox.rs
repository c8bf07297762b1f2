//! Bregman proximal mapping
//! `T(x, v) = argmin_y ⟨v, y⟩ + φ(y) + D_h(y, x) / λ`
//! for the supported composite terms `φ`.

use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::numerics::{solve_monotone, vecops::*, ScalarRootSpec};

/// Gradient-mapping tolerance of the iterative subproblem solver.
pub const INNER_TOL: f64 = 1e-10;
/// Iteration cap of the iterative subproblem solver.
pub const MAX_INNER_ITERS: usize = 100_000;
/// Points this close (relative to `max(1, radius)`) to a ball boundary are
/// treated as lying on it.
pub const BOUNDARY_TOL: f64 = 1e-9;

/// Nonsmooth convex term `φ`.
#[derive(Debug, Clone, PartialEq)]
pub enum CompositeTerm {
    Zero,
    /// `weight · ‖y‖₁`
    L1 {
        weight: f64,
    },
    /// Indicator of the closed ball `B(center, radius)`.
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    /// `weight · ‖y‖₁` restricted to `B(center, radius)`.
    L1Ball {
        weight: f64,
        center: Vec<f64>,
        radius: f64,
    },
}

impl CompositeTerm {
    pub fn l1(weight: f64) -> Result<Self> {
        if !(weight >= 0.0) {
            return Err(Error::InvalidConfig(format!("l1 weight {weight} < 0")));
        }
        Ok(if weight == 0.0 {
            CompositeTerm::Zero
        } else {
            CompositeTerm::L1 { weight }
        })
    }

    pub fn l1_weight(&self) -> f64 {
        match self {
            CompositeTerm::L1 { weight } | CompositeTerm::L1Ball { weight, .. } => *weight,
            _ => 0.0,
        }
    }

    pub fn ball(&self) -> Option<(&[f64], f64)> {
        match self {
            CompositeTerm::Ball { center, radius } | CompositeTerm::L1Ball { center, radius, .. } => {
                Some((center.as_slice(), *radius))
            }
            _ => None,
        }
    }

    /// `φ + indicator of B(center, radius)`.
    pub fn with_ball(&self, center: &[f64], radius: f64) -> Result<Self> {
        let center = center.to_vec();
        match self {
            CompositeTerm::Zero => Ok(CompositeTerm::Ball { center, radius }),
            CompositeTerm::L1 { weight } => Ok(CompositeTerm::L1Ball {
                weight: *weight,
                center,
                radius,
            }),
            _ => Err(Error::Unsupported("intersecting two ball constraints".into())),
        }
    }

    /// The term with any ball constraint dropped.
    pub fn unconstrained(&self) -> Self {
        match self {
            CompositeTerm::Ball { .. } => CompositeTerm::Zero,
            CompositeTerm::L1Ball { weight, .. } => CompositeTerm::L1 { weight: *weight },
            other => other.clone(),
        }
    }

    /// `φ(y)`, `+∞` outside the ball if there is one.
    pub fn value(&self, y: &[f64]) -> f64 {
        if let Some((c, r)) = self.ball() {
            if dist(y, c) > r * (1.0 + BOUNDARY_TOL) {
                return f64::INFINITY;
            }
        }
        self.l1_weight() * y.iter().map(|v| v.abs()).sum::<f64>()
    }

    /// Euclidean bound on subgradients of the unconstrained part.
    pub fn rho(&self, dim: usize) -> f64 {
        self.l1_weight() * (dim as f64).sqrt()
    }
}

/// Output of [`prox_map`].
#[derive(Debug, Clone, PartialEq)]
pub struct ProxResult {
    pub y: Vec<f64>,
    /// `u ∈ ∂φ(y)` recovered from the optimality condition.
    pub u: Vec<f64>,
    pub kkt_residual: f64,
    pub closed_form: bool,
}

pub fn soft_threshold(w: &[f64], thr: f64) -> Vec<f64> {
    w.iter()
        .map(|&wi| {
            let m = wi.abs() - thr;
            if m > 0.0 {
                m.copysign(wi)
            } else {
                0.0
            }
        })
        .collect()
}

pub fn project_ball(z: &[f64], center: &[f64], radius: f64) -> Vec<f64> {
    let dz = dist(z, center);
    if dz <= radius {
        return z.to_vec();
    }
    let s = radius / dz;
    center.iter().zip(z).map(|(c, zi)| c + s * (zi - c)).collect()
}

/// Euclidean prox of `thr·‖·‖₁ + indicator of B(center, radius)`, by
/// bisection on the multiplier of the ball constraint.
pub fn prox_l1_ball(z: &[f64], thr: f64, center: &[f64], radius: f64) -> Vec<f64> {
    let y0 = soft_threshold(z, thr);
    if dist(&y0, center) <= radius {
        return y0;
    }
    let y_at = |mu: f64| -> Vec<f64> {
        let shifted: Vec<f64> = z
            .iter()
            .zip(center)
            .map(|(zi, ci)| (zi + mu * ci) / (1.0 + mu))
            .collect();
        soft_threshold(&shifted, thr / (1.0 + mu))
    };
    let mut lo = 0.0;
    let mut hi = 1.0;
    while dist(&y_at(hi), center) > radius {
        lo = hi;
        hi *= 2.0;
        if hi > 1e300 {
            break;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if dist(&y_at(mid), center) > radius {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    y_at(hi)
}

/// Closed-form prox for `Zero` and `L1` terms. Every supported kernel has a
/// gradient that rescales its argument by a positive factor, so the `ℓ1`
/// shrinkage happens in the dual space.
fn prox_closed_form(kernel: &Kernel, weight: f64, x: &[f64], v: &[f64], lambda: f64) -> Result<Vec<f64>> {
    let mut w = kernel.grad(x);
    axpy(-lambda, v, &mut w);
    let y = if weight > 0.0 {
        let z = soft_threshold(&w, lambda * weight);
        match *kernel {
            Kernel::Polynomial(r) => poly_l1_scale(r, &z)?,
            _ => kernel.grad_inverse(&z)?,
        }
    } else {
        kernel.grad_inverse(&w)?
    };
    if let Kernel::Monomial(_) = kernel {
        if y[0] < 0.0 {
            return Err(Error::DomainViolation(format!("prox candidate {} is negative", y[0])));
        }
    }
    Ok(y)
}

/// `y = z / s` where `s ≥ 1` solves `s^{r+1} = s^r + ‖z‖^r`.
fn poly_l1_scale(r: u32, z: &[f64]) -> Result<Vec<f64>> {
    let zn = norm(z);
    if zn == 0.0 {
        return Ok(vec![0.0; z.len()]);
    }
    let p = r as i32;
    let target = zn.powi(p);
    let s = solve_monotone(
        |s| {
            let sr1 = s.powi(p - 1);
            let sr = sr1 * s;
            (sr * s - sr, (p as f64 + 1.0) * sr - p as f64 * sr1)
        },
        &ScalarRootSpec::new(target, 1.0, 1.0 + target),
    )?;
    Ok(scale(z, 1.0 / s))
}

/// Prox output only, without diagnostics. This is the solver hot path.
pub fn prox_point(kernel: &Kernel, phi: &CompositeTerm, x: &[f64], v: &[f64], lambda: f64) -> Result<Vec<f64>> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidConfig(format!("step size {lambda} must be positive")));
    }
    match phi {
        CompositeTerm::Zero => prox_closed_form(kernel, 0.0, x, v, lambda),
        CompositeTerm::L1 { weight } => prox_closed_form(kernel, *weight, x, v, lambda),
        _ => prox_constrained_inner(kernel, phi, x, v, lambda, INNER_TOL),
    }
}

pub fn prox_map(kernel: &Kernel, phi: &CompositeTerm, x: &[f64], v: &[f64], lambda: f64) -> Result<ProxResult> {
    let y = prox_point(kernel, phi, x, v, lambda)?;
    let closed_form = match phi {
        CompositeTerm::Zero | CompositeTerm::L1 { .. } => true,
        _ => {
            let (c, r) = phi.ball().expect("constrained term has a ball");
            !on_boundary(&y, c, r)
        }
    };
    let u = subgrad_witness(kernel, x, &y, v, lambda);
    let kkt_residual = kkt_residual_check(kernel, phi, x, v, lambda, &y);
    Ok(ProxResult {
        y,
        u,
        kkt_residual,
        closed_form,
    })
}

pub fn on_boundary(y: &[f64], center: &[f64], radius: f64) -> bool {
    dist(y, center) >= radius - BOUNDARY_TOL * radius.max(1.0)
}

/// Prox for `Ball` and `L1Ball` terms. Tries the unconstrained solution
/// first and falls back to [`prox_grad_loop`] when it leaves the ball.
pub fn prox_constrained_inner(
    kernel: &Kernel,
    phi: &CompositeTerm,
    x: &[f64],
    v: &[f64],
    lambda: f64,
    tol: f64,
) -> Result<Vec<f64>> {
    let (center, radius) = phi
        .ball()
        .ok_or_else(|| Error::Unsupported("constrained prox needs a ball term".into()))?;
    let weight = phi.l1_weight();
    let free = prox_closed_form(kernel, weight, x, v, lambda)?;
    if dist(&free, center) <= radius {
        return Ok(free);
    }
    let start = project_ball(&free, center, radius);
    prox_grad_loop(kernel, weight, center, radius, x, v, lambda, tol, start)
}

/// Proximal-gradient iteration on the prox subproblem restricted to
/// `B(center, radius)`, with step `λ / L_h(ball)`. Stops once the
/// subproblem's gradient-mapping norm is below `tol`.
#[allow(clippy::too_many_arguments)]
pub fn prox_grad_loop(
    kernel: &Kernel,
    weight: f64,
    center: &[f64],
    radius: f64,
    x: &[f64],
    v: &[f64],
    lambda: f64,
    tol: f64,
    start: Vec<f64>,
) -> Result<Vec<f64>> {
    let (_, l_ball) = kernel.mu_l_over_ball(center, radius);
    let t = lambda / l_ball;
    let gx = kernel.grad(x);
    let mut y = project_ball(&start, center, radius);
    let mut last = f64::INFINITY;
    for _ in 0..MAX_INNER_ITERS {
        let gy = kernel.grad(&y);
        let z: Vec<f64> = y
            .iter()
            .zip(v)
            .zip(gy.iter().zip(&gx))
            .map(|((yi, vi), (ghy, ghx))| yi - t * (vi + (ghy - ghx) / lambda))
            .collect();
        let next = if weight > 0.0 {
            prox_l1_ball(&z, t * weight, center, radius)
        } else {
            project_ball(&z, center, radius)
        };
        let step = dist(&y, &next);
        last = step / t;
        let stalled = step <= 4.0 * f64::EPSILON * norm(&next).max(f64::MIN_POSITIVE);
        y = next;
        if last <= tol || stalled {
            return Ok(y);
        }
    }
    Err(Error::NoConvergence {
        iters: MAX_INNER_ITERS,
        residual: last,
    })
}

/// `u = (∇h(x) - ∇h(y)) / λ - v`, which lies in `∂φ(y)` when `y` is the prox
/// output.
pub fn subgrad_witness(kernel: &Kernel, x: &[f64], y: &[f64], v: &[f64], lambda: f64) -> Vec<f64> {
    let gx = kernel.grad(x);
    let gy = kernel.grad(y);
    gx.iter()
        .zip(&gy)
        .zip(v)
        .map(|((a, b), vi)| (a - b) / lambda - vi)
        .collect()
}

/// `min_{u ∈ ∂φ(y)} ‖λ(v + u) + ∇h(y) - ∇h(x)‖`.
pub fn kkt_residual_check(kernel: &Kernel, phi: &CompositeTerm, x: &[f64], v: &[f64], lambda: f64, y: &[f64]) -> f64 {
    let gx = kernel.grad(x);
    let gy = kernel.grad(y);
    let r0: Vec<f64> = gy
        .iter()
        .zip(&gx)
        .zip(v)
        .map(|((a, b), vi)| a - b + lambda * vi)
        .collect();
    let bound = lambda * phi.l1_weight();
    let l1_residual = |r: &[f64]| -> f64 {
        r.iter()
            .zip(y)
            .map(|(ri, yi)| {
                let e = if *yi != 0.0 {
                    ri + bound.copysign(*yi)
                } else {
                    (ri.abs() - bound).max(0.0)
                };
                e * e
            })
            .sum::<f64>()
            .sqrt()
    };
    let Some((center, radius)) = phi.ball() else {
        return l1_residual(&r0);
    };
    let dy = dist(y, center);
    if dy > radius * (1.0 + BOUNDARY_TOL) + BOUNDARY_TOL {
        return f64::INFINITY;
    }
    if !on_boundary(y, center, radius) || dy == 0.0 {
        return l1_residual(&r0);
    }
    // normal cone of the ball is the ray along y - center
    let n: Vec<f64> = y.iter().zip(center).map(|(a, c)| (a - c) / dy).collect();
    let along = |alpha: f64| -> f64 {
        let r: Vec<f64> = r0.iter().zip(&n).map(|(ri, ni)| ri + alpha * ni).collect();
        l1_residual(&r)
    };
    if bound == 0.0 {
        return along((-dot(&r0, &n)).max(0.0));
    }
    // convex in alpha: golden-section search
    let (mut a, mut b) = (0.0, 2.0 * (norm(&r0) + bound * (y.len() as f64).sqrt()) + 1.0);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (along(c), along(d));
    for _ in 0..200 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = along(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = along(d);
        }
    }
    along(0.0).min(fc).min(fd)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_is_fixed_point() {
        let k = Kernel::Polynomial(4);
        let x = [0.3, -0.7];
        let res = prox_map(&k, &CompositeTerm::Zero, &x, &[0.0, 0.0], 0.5).unwrap();
        assert!(dist(&res.y, &x) < 1e-14);
        assert!(res.closed_form);
    }

    #[test]
    fn monomial_step_from_one() {
        let res = prox_map(&Kernel::Monomial(4), &CompositeTerm::Zero, &[1.0], &[-1.0], 1.0).unwrap();
        assert!((res.y[0] - 2f64.cbrt()).abs() < 1e-15);
        assert!((res.y[0] - 1.259921).abs() < 1e-6);
    }

    #[test]
    fn monomial_negative_candidate_rejected() {
        let err = prox_map(&Kernel::Monomial(4), &CompositeTerm::Zero, &[0.0], &[1.0], 1.0).unwrap_err();
        assert!(matches!(err, Error::DomainViolation(_)));
    }

    #[test]
    fn full_thresholding_gives_zero() {
        let k = Kernel::Polynomial(4);
        let res = prox_map(&k, &CompositeTerm::L1 { weight: 1.0 }, &[0.0, 0.0], &[0.4, -0.9], 1.0).unwrap();
        assert_eq!(res.y, vec![0.0, 0.0]);
        assert!(res.kkt_residual <= 1e-12);
    }

    #[test]
    fn l1_witness_sign_structure() {
        let k = Kernel::Polynomial(2);
        let res = prox_map(&k, &CompositeTerm::L1 { weight: 0.3 }, &[1.0, 0.05], &[-0.5, 0.2], 0.7).unwrap();
        assert!(res.y[0] > 0.0);
        assert!((res.u[0] - 0.3).abs() < 1e-8);
        assert_eq!(res.y[1], 0.0);
        assert!(res.u[1].abs() <= 0.3 + 1e-12);
        assert!(res.kkt_residual <= 1e-9);
    }

    #[test]
    fn inactive_ball_matches_unconstrained() {
        let k = Kernel::Polynomial(2);
        let x = [0.2, 0.1];
        let v = [0.3, -0.2];
        let free = prox_map(&k, &CompositeTerm::Zero, &x, &v, 0.5).unwrap();
        let ball = CompositeTerm::Ball {
            center: x.to_vec(),
            radius: 10.0,
        };
        let res = prox_map(&k, &ball, &x, &v, 0.5).unwrap();
        assert_eq!(res.y, free.y);
        assert!(res.u.iter().all(|u| u.abs() < 1e-9));
    }

    #[test]
    fn euclidean_kernel_projects_gradient_step() {
        let x = [0.0, 0.0];
        let v = [-3.0, -4.0];
        let ball = CompositeTerm::Ball {
            center: vec![0.0, 0.0],
            radius: 1.0,
        };
        let res = prox_map(&Kernel::Quadratic, &ball, &x, &v, 1.0).unwrap();
        assert!((res.y[0] - 0.6).abs() < 1e-9 && (res.y[1] - 0.8).abs() < 1e-9);
        assert!(res.kkt_residual <= 1e-9);
        assert!(!res.closed_form);
    }

    #[test]
    fn prox_l1_ball_stays_feasible() {
        let y = prox_l1_ball(&[3.0, 0.1], 0.2, &[1.0, 1.0], 0.5);
        assert!(dist(&y, &[1.0, 1.0]) <= 0.5 + 1e-12);
    }

    #[test]
    fn rho_and_values() {
        let phi = CompositeTerm::L1 { weight: 0.5 };
        assert!((phi.rho(4) - 1.0).abs() < 1e-15);
        assert_eq!(phi.value(&[1.0, -2.0]), 1.5);
        let b = phi.with_ball(&[0.0, 0.0], 1.0).unwrap();
        assert_eq!(b.value(&[2.0, 0.0]), f64::INFINITY);
        assert_eq!(CompositeTerm::Zero.rho(3), 0.0);
    }
}
