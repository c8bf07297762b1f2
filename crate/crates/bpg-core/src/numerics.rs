//! Scalar root finding, finite-difference oracles, segment geometry and the
//! seedable random stream shared by every solver.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Dense vector helpers on plain slices. Problem dimensions here are small,
/// so nothing fancier is warranted.
pub mod vecops {
    pub fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    pub fn norm_sq(a: &[f64]) -> f64 {
        dot(a, a)
    }

    pub fn norm(a: &[f64]) -> f64 {
        norm_sq(a).sqrt()
    }

    pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
        a.iter().zip(b).map(|(x, y)| x - y).collect()
    }

    pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
        a.iter().zip(b).map(|(x, y)| x + y).collect()
    }

    pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
        a.iter().map(|x| s * x).collect()
    }

    /// `y += alpha * x`
    pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi += alpha * xi;
        }
    }

    pub fn dist(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
    }

    /// `(1 - t) a + t b`
    pub fn lerp(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
        a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
    }

    pub fn max_abs(a: &[f64]) -> f64 {
        a.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

use vecops::*;

/// A monotone scalar equation `g(t) = target` on `[lo, hi]`.
#[derive(Debug, Clone, Copy)]
pub struct ScalarRootSpec {
    pub target: f64,
    pub lo: f64,
    pub hi: f64,
    pub abs_tol: f64,
    pub max_iter: usize,
}

impl ScalarRootSpec {
    pub fn new(target: f64, lo: f64, hi: f64) -> Self {
        ScalarRootSpec {
            target,
            lo,
            hi,
            abs_tol: 1e-12,
            max_iter: 200,
        }
    }
}

/// Safeguarded Newton with bisection fallback. `g` returns `(g(t), g'(t))`.
///
/// Returns once `|g(t) - target| <= abs_tol`, or once Newton stalls at
/// machine resolution (relevant when `target` is so large that `abs_tol` is
/// below one ulp of it).
pub fn solve_monotone<G>(g: G, spec: &ScalarRootSpec) -> Result<f64>
where
    G: Fn(f64) -> (f64, f64),
{
    let ScalarRootSpec {
        target,
        lo,
        hi,
        abs_tol,
        max_iter,
    } = *spec;
    if !(lo <= hi) || !(abs_tol > 0.0) {
        return Err(Error::Degenerate(format!(
            "bracket [{lo}, {hi}] with tolerance {abs_tol}"
        )));
    }
    let r_lo = g(lo).0 - target;
    let r_hi = g(hi).0 - target;
    if !r_lo.is_finite() || !r_hi.is_finite() {
        return Err(Error::NonFinite("root bracket endpoint"));
    }
    if r_lo.abs() <= abs_tol {
        return Ok(lo);
    }
    if r_hi.abs() <= abs_tol {
        return Ok(hi);
    }
    if (r_lo > 0.0) == (r_hi > 0.0) {
        return Err(Error::NoBracket { lo, hi, target });
    }
    let increasing = r_hi > 0.0;

    // a is always "below" the root, b "above", in the orientation of g.
    let (mut a, mut b) = (lo, hi);
    let mut t = if r_lo.abs() < r_hi.abs() { lo } else { hi };
    let mut best = (t, r_lo.abs().min(r_hi.abs()));
    for _ in 0..max_iter {
        let (v, dv) = g(t);
        let res = v - target;
        if !res.is_finite() {
            return Err(Error::NonFinite("root residual"));
        }
        if res.abs() < best.1 {
            best = (t, res.abs());
        }
        if res.abs() <= abs_tol {
            return Ok(t);
        }
        if (res < 0.0) == increasing {
            a = t;
        } else {
            b = t;
        }
        let span = (b - a).abs();
        if span <= 4.0 * f64::EPSILON * a.abs().max(b.abs()) {
            return Ok(best.0);
        }
        let newton = t - res / dv;
        let inside = newton.is_finite() && newton > a.min(b) && newton < a.max(b);
        if inside {
            if (newton - t).abs() <= 2.0 * f64::EPSILON * t.abs() {
                return Ok(if res.abs() <= best.1 { t } else { best.0 });
            }
            t = newton;
        } else {
            t = 0.5 * (a + b);
        }
    }
    Err(Error::NoConvergence {
        iters: max_iter,
        residual: best.1,
    })
}

/// Central-difference gradient.
pub fn fd_gradient<F>(f: F, x: &[f64], h_step: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64,
{
    let mut xp = x.to_vec();
    let mut g = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        xp[i] = x[i] + h_step;
        let fp = f(&xp);
        xp[i] = x[i] - h_step;
        let fm = f(&xp);
        xp[i] = x[i];
        if !fp.is_finite() || !fm.is_finite() {
            return Err(Error::NonFinite("fd_gradient evaluation"));
        }
        g.push((fp - fm) / (2.0 * h_step));
    }
    Ok(g)
}

/// Second-difference Hessian from function values, symmetric by construction.
#[allow(clippy::needless_range_loop)]
pub fn fd_hessian<F>(f: F, x: &[f64], h_step: f64) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&[f64]) -> f64,
{
    let d = x.len();
    let mut hess = vec![vec![0.0; d]; d];
    let mut xp = x.to_vec();
    let f0 = f(x);
    if !f0.is_finite() {
        return Err(Error::NonFinite("fd_hessian evaluation"));
    }
    let eval = |xp: &mut Vec<f64>, di: f64, i: usize, dj: f64, j: usize| {
        xp[i] += di;
        xp[j] += dj;
        let v = f(xp);
        xp[i] = x[i];
        xp[j] = x[j];
        v
    };
    let h2 = h_step * h_step;
    for i in 0..d {
        let fp = eval(&mut xp, h_step, i, 0.0, i);
        let fm = eval(&mut xp, -h_step, i, 0.0, i);
        hess[i][i] = (fp - 2.0 * f0 + fm) / h2;
        for j in (i + 1)..d {
            let fpp = eval(&mut xp, h_step, i, h_step, j);
            let fpm = eval(&mut xp, h_step, i, -h_step, j);
            let fmp = eval(&mut xp, -h_step, i, h_step, j);
            let fmm = eval(&mut xp, -h_step, i, -h_step, j);
            let v = (fpp - fpm - fmp + fmm) / (4.0 * h2);
            hess[i][j] = v;
            hess[j][i] = v;
        }
    }
    if hess.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("fd_hessian evaluation"));
    }
    Ok(hess)
}

/// Central-difference Jacobian of a gradient field, symmetrized by averaging.
/// More accurate than [`fd_hessian`] when an analytic gradient exists.
#[allow(clippy::needless_range_loop)]
pub fn fd_jacobian<G>(grad: G, x: &[f64], h_step: f64) -> Result<Vec<Vec<f64>>>
where
    G: Fn(&[f64]) -> Vec<f64>,
{
    let d = x.len();
    let mut jac = vec![vec![0.0; d]; d];
    let mut xp = x.to_vec();
    for i in 0..d {
        xp[i] = x[i] + h_step;
        let gp = grad(&xp);
        xp[i] = x[i] - h_step;
        let gm = grad(&xp);
        xp[i] = x[i];
        for j in 0..d {
            jac[i][j] = (gp[j] - gm[j]) / (2.0 * h_step);
        }
    }
    for i in 0..d {
        for j in (i + 1)..d {
            let v = 0.5 * (jac[i][j] + jac[j][i]);
            jac[i][j] = v;
            jac[j][i] = v;
        }
    }
    if jac.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("fd_jacobian evaluation"));
    }
    Ok(jac)
}

/// Quadratic form `vᵀ M v` for a dense row-major matrix.
pub fn quad_form(m: &[Vec<f64>], v: &[f64]) -> f64 {
    m.iter().zip(v).map(|(row, vi)| vi * dot(row, v)).sum()
}

/// Smallest and largest Euclidean norm over the segment `[a, b]`.
pub fn segment_norm_extrema(a: &[f64], b: &[f64]) -> (f64, f64) {
    let d = sub(b, a);
    let dd = norm_sq(&d);
    let max_norm = norm(a).max(norm(b));
    if dd == 0.0 {
        return (norm(a), max_norm);
    }
    let t = (-dot(a, &d) / dd).clamp(0.0, 1.0);
    let p: Vec<f64> = a.iter().zip(&d).map(|(ai, di)| ai + t * di).collect();
    (norm(&p).min(max_norm), max_norm)
}

/// SplitMix64 finalizer, used to hash `(s, k)` into a stream id.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic random stream. Equal seeds give bit-identical draws, and
/// `substream(s, k)` depends only on `(seed, s, k)`, never on call order.
#[derive(Debug, Clone)]
pub struct RandomStream {
    seed: u64,
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        RandomStream {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn substream(&self, s: u64, k: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(splitmix64(splitmix64(s) ^ k));
        RandomStream { seed: self.seed, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of 32-bit words consumed so far.
    pub fn position(&self) -> u128 {
        self.rng.get_word_pos()
    }

    /// Uniform draw in `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform index in `0..n` (Lemire's method, unbiased).
    pub fn index(&mut self, n: usize) -> usize {
        assert!(n > 0, "index range must be non-empty");
        let n = n as u64;
        let threshold = n.wrapping_neg() % n;
        loop {
            let m = (self.rng.next_u64() as u128) * (n as u128);
            if (m as u64) >= threshold {
                return (m >> 64) as usize;
            }
        }
    }

    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}
