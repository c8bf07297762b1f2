//! Legendre kernels `h`, their gradients, Hessian spectra and Bregman
//! divergences.

use std::fmt;

use crate::error::{Error, Result};
use crate::numerics::{segment_norm_extrema, solve_monotone, vecops::*, ScalarRootSpec};

/// Stand-in for an infinite diameter budget: the Euclidean kernel has
/// condition number one on every set.
pub const QUADRATIC_DELTA: f64 = 1e12;

/// Bregman kernel.
///
/// * `Quadratic`: `h(x) = ‖x‖²/2`
/// * `Polynomial(r)`: `h(x) = ‖x‖²/2 + ‖x‖^{r+2}/(r+2)`
/// * `Monomial(r)`: `h(x) = x^r / r`, one-dimensional. Only strictly convex
///   away from the origin; meant for replaying a scalar counterexample whose
///   iterates stay on the nonnegative half-line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kernel {
    Quadratic,
    Polynomial(u32),
    Monomial(u32),
}

/// Strong convexity modulus `mu`, diameter budget `delta` and the uniform
/// bound `kappa_delta` on the condition number of `∇²h` over any set of
/// diameter at most `delta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelRegularity {
    pub mu: f64,
    pub delta: f64,
    pub kappa_delta: f64,
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kernel::Quadratic => write!(f, "quadratic"),
            Kernel::Polynomial(r) => write!(f, "polynomial(r={r})"),
            Kernel::Monomial(r) => write!(f, "monomial(r={r})"),
        }
    }
}

impl Kernel {
    pub fn polynomial(r: u32) -> Result<Self> {
        if r == 0 {
            return Err(Error::InvalidConfig("polynomial kernel needs r >= 1".into()));
        }
        Ok(Kernel::Polynomial(r))
    }

    pub fn monomial(r: u32) -> Result<Self> {
        if r < 2 {
            return Err(Error::InvalidConfig("monomial kernel needs r >= 2".into()));
        }
        Ok(Kernel::Monomial(r))
    }

    fn check_monomial_dim(x: &[f64]) {
        assert_eq!(x.len(), 1, "monomial kernel is one-dimensional");
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match *self {
            Kernel::Quadratic => 0.5 * norm_sq(x),
            Kernel::Polynomial(r) => {
                let t = norm(x);
                0.5 * t * t + t.powi(r as i32 + 2) / (r as f64 + 2.0)
            }
            Kernel::Monomial(r) => {
                Self::check_monomial_dim(x);
                x[0].powi(r as i32) / r as f64
            }
        }
    }

    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        match *self {
            Kernel::Quadratic => x.to_vec(),
            Kernel::Polynomial(r) => scale(x, 1.0 + norm(x).powi(r as i32)),
            Kernel::Monomial(r) => {
                Self::check_monomial_dim(x);
                vec![x[0].powi(r as i32 - 1)]
            }
        }
    }

    /// `∇²h(x) v`
    pub fn hess_apply(&self, x: &[f64], v: &[f64]) -> Vec<f64> {
        match *self {
            Kernel::Quadratic => v.to_vec(),
            Kernel::Polynomial(r) => {
                let (alpha, beta) = poly_hess_coeffs(r, x);
                let xv = dot(x, v);
                x.iter().zip(v).map(|(xi, vi)| alpha * vi + beta * xv * xi).collect()
            }
            Kernel::Monomial(r) => {
                Self::check_monomial_dim(x);
                vec![(r as f64 - 1.0) * x[0].powi(r as i32 - 2) * v[0]]
            }
        }
    }

    pub fn hess_matrix(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let d = x.len();
        (0..d)
            .map(|i| {
                let mut e = vec![0.0; d];
                e[i] = 1.0;
                self.hess_apply(x, &e)
            })
            .collect()
    }

    /// Extreme Hessian eigenvalues at any point of norm `t`. Both are
    /// nondecreasing in `t`, which is what makes set-wise bounds exact.
    pub fn eig_bounds_at_norm(&self, t: f64) -> (f64, f64) {
        match *self {
            Kernel::Quadratic => (1.0, 1.0),
            Kernel::Polynomial(r) => {
                let tr = t.powi(r as i32);
                (tr + 1.0, (r as f64 + 1.0) * tr + 1.0)
            }
            Kernel::Monomial(r) => {
                let v = (r as f64 - 1.0) * t.powi(r as i32 - 2);
                (v, v)
            }
        }
    }

    pub fn hess_eig_bounds(&self, x: &[f64]) -> (f64, f64) {
        self.eig_bounds_at_norm(norm(x))
    }

    /// `(μ_h, L_h)` over the segment `[a, b]`.
    pub fn mu_l_over_segment(&self, a: &[f64], b: &[f64]) -> (f64, f64) {
        let (lo, hi) = segment_norm_extrema(a, b);
        (self.eig_bounds_at_norm(lo).0, self.eig_bounds_at_norm(hi).1)
    }

    /// `(μ_h, L_h)` over the closed ball `B(center, radius)`.
    pub fn mu_l_over_ball(&self, center: &[f64], radius: f64) -> (f64, f64) {
        let c = norm(center);
        let lo = (c - radius).max(0.0);
        (self.eig_bounds_at_norm(lo).0, self.eig_bounds_at_norm(c + radius).1)
    }

    /// `D_h(y, x) = h(y) - h(x) - ⟨∇h(x), y - x⟩`
    pub fn bregman_div(&self, y: &[f64], x: &[f64]) -> f64 {
        let g = self.grad(x);
        let d = sub(y, x);
        match *self {
            // exact form avoids cancellation
            Kernel::Quadratic => 0.5 * norm_sq(&d),
            _ => self.value(y) - self.value(x) - dot(&g, &d),
        }
    }

    pub fn regularity(&self) -> Result<KernelRegularity> {
        match *self {
            Kernel::Quadratic => Ok(KernelRegularity {
                mu: 1.0,
                delta: QUADRATIC_DELTA,
                kappa_delta: 1.0,
            }),
            Kernel::Polynomial(r) => Ok(KernelRegularity {
                mu: 1.0,
                delta: 1.0 / r as f64,
                kappa_delta: 3.0 * r as f64 + 4.0,
            }),
            Kernel::Monomial(_) => Err(Error::UnsupportedKernel(self.to_string())),
        }
    }

    /// Radius of the per-epoch trust ball around `anchor`. It always contains
    /// `B(anchor, δ/2)` and keeps the kernel's condition number bounded.
    pub fn epoch_radius(&self, anchor: &[f64]) -> Result<f64> {
        match *self {
            Kernel::Quadratic => Ok(0.5 * QUADRATIC_DELTA),
            Kernel::Polynomial(r) => {
                let r = r as f64;
                Ok((1.0 / (2.0 * r)).max(norm(anchor) / (2.0 * r + 1.0)))
            }
            Kernel::Monomial(_) => Err(Error::UnsupportedKernel(self.to_string())),
        }
    }

    /// Solves `∇h(y) = w` for `y`.
    pub fn grad_inverse(&self, w: &[f64]) -> Result<Vec<f64>> {
        match *self {
            Kernel::Quadratic => Ok(w.to_vec()),
            Kernel::Polynomial(r) => {
                let big_w = norm(w);
                if big_w == 0.0 {
                    return Ok(vec![0.0; w.len()]);
                }
                let t = poly_radial_inverse(r, big_w)?;
                Ok(scale(w, t / big_w))
            }
            Kernel::Monomial(r) => {
                Self::check_monomial_dim(w);
                let p = r as i32 - 1;
                let w0 = w[0];
                if w0 < 0.0 && p % 2 == 0 {
                    return Err(Error::DomainViolation(format!("x^{p} = {w0} has no real solution")));
                }
                let y = if p == 3 {
                    w0.cbrt()
                } else {
                    w0.signum() * w0.abs().powf(1.0 / p as f64)
                };
                Ok(vec![y])
            }
        }
    }

    /// Solves `∇²h(x) g = v`. Rank-one structure gives a closed form for the
    /// polynomial kernel.
    pub fn hess_solve(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        match *self {
            Kernel::Quadratic => Ok(v.to_vec()),
            Kernel::Polynomial(r) => {
                let (alpha, beta) = poly_hess_coeffs(r, x);
                let xx = norm_sq(x);
                let coef = beta * dot(x, v) / (alpha * (alpha + beta * xx));
                Ok(v.iter().zip(x).map(|(vi, xi)| vi / alpha - coef * xi).collect())
            }
            Kernel::Monomial(r) => {
                Self::check_monomial_dim(x);
                let hxx = (r as f64 - 1.0) * x[0].powi(r as i32 - 2);
                if hxx == 0.0 {
                    return Err(Error::Degenerate("singular kernel Hessian".into()));
                }
                Ok(vec![v[0] / hxx])
            }
        }
    }
}

/// `∇²h(x) = αI + βxxᵀ` for the polynomial kernel.
fn poly_hess_coeffs(r: u32, x: &[f64]) -> (f64, f64) {
    let t = norm(x);
    let alpha = 1.0 + t.powi(r as i32);
    let beta = if t == 0.0 { 0.0 } else { r as f64 * t.powi(r as i32 - 2) };
    (alpha, beta)
}

/// Root of `t + t^{r+1} = w` for `w > 0`.
pub fn poly_radial_inverse(r: u32, w: f64) -> Result<f64> {
    let p = r as i32;
    let hi = w.min(w.powf(1.0 / (r as f64 + 1.0)));
    solve_monotone(
        |t| {
            let tr = t.powi(p);
            (t + tr * t, 1.0 + (p as f64 + 1.0) * tr)
        },
        &ScalarRootSpec::new(w, 0.0, hi),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values() {
        assert_eq!(Kernel::Polynomial(4).value(&[0.0, 0.0]), 0.0);
        assert!((Kernel::Polynomial(2).value(&[1.0, 0.0]) - 0.75).abs() < 1e-15);
        assert!((Kernel::Monomial(4).value(&[2.0]) - 4.0).abs() < 1e-15);
    }

    #[test]
    fn gradients() {
        assert_eq!(Kernel::Polynomial(3).grad(&[0.0, 0.0]), vec![0.0, 0.0]);
        assert_eq!(Kernel::Polynomial(2).grad(&[1.0, 0.0]), vec![2.0, 0.0]);
        assert_eq!(Kernel::Monomial(4).grad(&[1.0]), vec![1.0]);
    }

    #[test]
    fn eigen_bounds() {
        assert_eq!(Kernel::Polynomial(4).hess_eig_bounds(&[0.0, 0.0]), (1.0, 1.0));
        let (lo, hi) = Kernel::Polynomial(4).hess_eig_bounds(&[0.6, 0.8]);
        assert!((lo - 2.0).abs() < 1e-14 && (hi - 6.0).abs() < 1e-13);
        assert_eq!(Kernel::Quadratic.hess_eig_bounds(&[5.0, -3.0]), (1.0, 1.0));
    }

    #[test]
    fn segment_and_ball_bounds() {
        let k = Kernel::Polynomial(4);
        assert_eq!(k.mu_l_over_segment(&[1.0, 0.0], &[-1.0, 0.0]), (1.0, 6.0));
        assert_eq!(
            k.mu_l_over_segment(&[0.3, 0.4], &[0.3, 0.4]),
            k.hess_eig_bounds(&[0.3, 0.4])
        );
        assert_eq!(Kernel::Quadratic.mu_l_over_segment(&[1.0], &[9.0]), (1.0, 1.0));
        assert_eq!(k.mu_l_over_ball(&[2.0, 0.0], 1.0), (2.0, 406.0));
        assert_eq!(k.mu_l_over_ball(&[0.5, 0.0], 1.0).0, 1.0);
        assert_eq!(k.mu_l_over_ball(&[0.5, 0.0], 0.0), k.hess_eig_bounds(&[0.5, 0.0]));
    }

    #[test]
    fn bregman_examples() {
        let k = Kernel::Polynomial(2);
        assert_eq!(k.bregman_div(&[0.3, 0.1], &[0.3, 0.1]), 0.0);
        assert!((k.bregman_div(&[1.0, 0.0], &[0.0, 0.0]) - 0.75).abs() < 1e-15);
        let q = Kernel::Quadratic.bregman_div(&[1.0, 2.0], &[0.0, -1.0]);
        assert!((q - 5.0).abs() < 1e-15);
    }

    #[test]
    fn regularity_constants() {
        let p4 = Kernel::Polynomial(4).regularity().unwrap();
        assert_eq!((p4.mu, p4.delta, p4.kappa_delta), (1.0, 0.25, 16.0));
        let p1 = Kernel::Polynomial(1).regularity().unwrap();
        assert_eq!((p1.mu, p1.delta, p1.kappa_delta), (1.0, 1.0, 7.0));
        assert_eq!(Kernel::Quadratic.regularity().unwrap().kappa_delta, 1.0);
        assert!(matches!(
            Kernel::Monomial(4).regularity(),
            Err(Error::UnsupportedKernel(_))
        ));
    }

    #[test]
    fn grad_inverse_examples() {
        let k = Kernel::Polynomial(4);
        assert_eq!(k.grad_inverse(&[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
        let y = k.grad_inverse(&[1.2, -1.6]).unwrap();
        assert!((y[0] - 0.6).abs() < 1e-14 && (y[1] + 0.8).abs() < 1e-14);
        assert_eq!(Kernel::Quadratic.grad_inverse(&[3.0]).unwrap(), vec![3.0]);
        let m = Kernel::Monomial(4).grad_inverse(&[2.0]).unwrap();
        assert!((m[0] - 2f64.cbrt()).abs() < 1e-15);
    }

    #[test]
    fn hess_solve_rank_one() {
        let g = Kernel::Polynomial(2).hess_solve(&[1.0, 0.0], &[1.0, 0.0]).unwrap();
        assert!((g[0] - 0.25).abs() < 1e-15 && g[1].abs() < 1e-15);
    }
}
