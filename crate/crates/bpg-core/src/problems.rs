//! Test problems: two analytic counterexamples, a finite sum of cubic
//! components and a Gaussian-sampled cubic expectation.

use std::f64::consts::SQRT_2;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::numerics::{fd_jacobian, quad_form, vecops::*, RandomStream};
use crate::prox::CompositeTerm;

/// One stochastic draw: a component index for finite sums, or a realized
/// random vector for expectation problems.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sample {
    Index(usize),
    Draw([f64; 2]),
}

/// Smooth part `f`. Deterministic objectives behave as one-component sums.
pub trait Objective: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn grad(&self, x: &[f64]) -> Vec<f64>;

    fn hessian(&self, x: &[f64]) -> Vec<Vec<f64>> {
        fd_jacobian(|y| self.grad(y), x, 1e-5).expect("finite gradient near x")
    }

    fn components(&self) -> usize {
        1
    }

    fn component_grad(&self, _i: usize, x: &[f64]) -> Vec<f64> {
        self.grad(x)
    }

    fn draw(&self, stream: &mut RandomStream) -> Sample {
        Sample::Index(stream.index(self.components()))
    }

    fn sample_grad(&self, sample: &Sample, x: &[f64]) -> Vec<f64> {
        match *sample {
            Sample::Index(i) => self.component_grad(i, x),
            Sample::Draw(_) => self.grad(x),
        }
    }

    /// `out += w ∇f_ξ(x)`. Override when a sampled gradient can be formed
    /// without allocating.
    fn add_sample_grad(&self, sample: &Sample, x: &[f64], w: f64, out: &mut [f64]) {
        axpy(w, &self.sample_grad(sample, x), out);
    }

    /// Pointwise bound `σ(x)` on the standard deviation of sampled gradients.
    fn sigma(&self, _x: &[f64]) -> Option<f64> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Structure {
    Deterministic,
    FiniteSum(usize),
    Expectation,
}

/// A composite problem `Ψ = f + φ` with its certified constants.
#[derive(Debug, Clone)]
pub struct Problem {
    pub name: String,
    pub structure: Structure,
    pub objective: Arc<dyn Objective>,
    pub phi: CompositeTerm,
    /// Smooth-adaptability constant of `f` relative to `kernel`.
    pub smad_l: f64,
    /// Per-component constants (finite sums) or empty.
    pub component_l: Vec<f64>,
    pub l_max: f64,
    pub kernel: Kernel,
    pub x0: Vec<f64>,
    /// Known lower bound on `Ψ`, if the problem is bounded below.
    pub lower_bound: Option<f64>,
    /// Box `[lo, hi]^d` used when probing constants by sampling.
    pub probe_box: (f64, f64),
}

impl Problem {
    pub fn dim(&self) -> usize {
        self.objective.dim()
    }

    pub fn n(&self) -> usize {
        self.objective.components()
    }

    pub fn f(&self, x: &[f64]) -> f64 {
        self.objective.value(x)
    }

    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        self.objective.grad(x)
    }

    pub fn psi(&self, x: &[f64]) -> f64 {
        self.objective.value(x) + self.phi.value(x)
    }

    pub fn rho(&self) -> f64 {
        self.phi.rho(self.dim())
    }

    /// `Ψ(x) - inf Ψ`, when a lower bound is known.
    pub fn delta_psi(&self, x: &[f64]) -> Option<f64> {
        self.lower_bound.map(|lb| (self.psi(x) - lb).max(0.0))
    }

    pub fn with_phi(mut self, phi: CompositeTerm) -> Self {
        // φ ≥ 0 for every supported term, so the lower bound survives
        self.phi = phi;
        self
    }
}

fn check_even_r(r: u32) -> Result<()> {
    if r < 4 || !r.is_multiple_of(2) {
        return Err(Error::InvalidConfig(format!(
            "counterexamples need an even r >= 4, got {r}"
        )));
    }
    Ok(())
}

/// `f(x) = 1/(√2 + ln(1 + x₁²)) + x₁^r x₂²`
#[derive(Debug, Clone)]
pub struct Example1 {
    pub r: u32,
}

impl Example1 {
    fn parts(x1: f64) -> (f64, f64, f64) {
        let q = 1.0 + x1 * x1;
        let u = SQRT_2 + q.ln();
        let du = 2.0 * x1 / q;
        let ddu = 2.0 * (1.0 - x1 * x1) / (q * q);
        (u, du, ddu)
    }

    /// `∂f/∂x₁` along the axis `x₂ = 0`.
    pub fn axis_slope(x1: f64) -> f64 {
        let (u, du, _) = Self::parts(x1);
        -du / (u * u)
    }
}

impl Objective for Example1 {
    fn dim(&self) -> usize {
        2
    }

    fn value(&self, x: &[f64]) -> f64 {
        let (u, _, _) = Self::parts(x[0]);
        1.0 / u + x[0].powi(self.r as i32) * x[1] * x[1]
    }

    fn grad(&self, x: &[f64]) -> Vec<f64> {
        let r = self.r as i32;
        let (u, du, _) = Self::parts(x[0]);
        vec![
            -du / (u * u) + r as f64 * x[0].powi(r - 1) * x[1] * x[1],
            2.0 * x[0].powi(r) * x[1],
        ]
    }

    fn hessian(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let r = self.r as i32;
        let rf = r as f64;
        let (u, du, ddu) = Self::parts(x[0]);
        let g11 = -ddu / (u * u) + 2.0 * du * du / (u * u * u);
        let h11 = g11 + rf * (rf - 1.0) * x[0].powi(r - 2) * x[1] * x[1];
        let h12 = 2.0 * rf * x[0].powi(r - 1) * x[1];
        let h22 = 2.0 * x[0].powi(r);
        vec![vec![h11, h12], vec![h12, h22]]
    }
}

/// Largest `|θ|` with `det(F - θH) = 0` for symmetric 2×2 `F` and positive
/// definite `H`.
fn generalized_eig_2x2(f: &[Vec<f64>], h: &[Vec<f64>]) -> f64 {
    let a = h[0][0] * h[1][1] - h[0][1] * h[0][1];
    let b = -(f[0][0] * h[1][1] + f[1][1] * h[0][0] - 2.0 * f[0][1] * h[0][1]);
    let c = f[0][0] * f[1][1] - f[0][1] * f[0][1];
    let disc = (b * b - 4.0 * a * c).max(0.0).sqrt();
    let t1 = (-b + disc) / (2.0 * a);
    let t2 = (-b - disc) / (2.0 * a);
    t1.abs().max(t2.abs())
}

/// Scans `[-20, 20]²` for the largest relative curvature of `f` against
/// `h`, then doubles it.
fn certify_example1(obj: &Example1, kernel: &Kernel) -> f64 {
    let steps = 400;
    let mut worst: f64 = 0.0;
    for i in 0..=steps {
        for j in 0..=steps {
            let x = [
                -20.0 + 40.0 * i as f64 / steps as f64,
                -20.0 + 40.0 * j as f64 / steps as f64,
            ];
            let theta = generalized_eig_2x2(&obj.hessian(&x), &kernel.hess_matrix(&x));
            worst = worst.max(theta);
        }
    }
    2.0 * worst.max(0.5)
}

pub fn make_example1(r: u32) -> Result<Problem> {
    check_even_r(r)?;
    let obj = Example1 { r };
    let kernel = Kernel::Polynomial(r);
    let smad_l = certify_example1(&obj, &kernel);
    Ok(Problem {
        name: "example1".into(),
        structure: Structure::Deterministic,
        objective: Arc::new(obj),
        phi: CompositeTerm::Zero,
        smad_l,
        component_l: Vec::new(),
        l_max: smad_l,
        kernel,
        x0: vec![1.0, 0.0],
        // both terms are nonnegative and the first decays to zero
        lower_bound: Some(0.0),
        probe_box: (-20.0, 20.0),
    })
}

/// `f(x) = -x` on the real line.
#[derive(Debug, Clone)]
pub struct Example2;

impl Objective for Example2 {
    fn dim(&self) -> usize {
        1
    }

    fn value(&self, x: &[f64]) -> f64 {
        -x[0]
    }

    fn grad(&self, _x: &[f64]) -> Vec<f64> {
        vec![-1.0]
    }

    fn hessian(&self, _x: &[f64]) -> Vec<Vec<f64>> {
        vec![vec![0.0]]
    }
}

pub fn make_example2(r: u32) -> Result<Problem> {
    check_even_r(r)?;
    Ok(Problem {
        name: "example2".into(),
        structure: Structure::Deterministic,
        objective: Arc::new(Example2),
        phi: CompositeTerm::Zero,
        smad_l: 0.5,
        component_l: Vec::new(),
        l_max: 0.5,
        kernel: Kernel::Monomial(r),
        x0: vec![0.0],
        lower_bound: None,
        probe_box: (1e-3, 10.0),
    })
}

/// `f(x) = (1/n) Σ (aᵢᵀx - bᵢ)³ / 3`
#[derive(Debug, Clone)]
pub struct CubicSum {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

impl CubicSum {
    fn residual(&self, i: usize, x: &[f64]) -> f64 {
        dot(&self.a[i], x) - self.b[i]
    }
}

impl Objective for CubicSum {
    fn dim(&self) -> usize {
        self.a[0].len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let n = self.b.len() as f64;
        (0..self.b.len())
            .map(|i| self.residual(i, x).powi(3) / 3.0)
            .sum::<f64>()
            / n
    }

    fn grad(&self, x: &[f64]) -> Vec<f64> {
        let n = self.b.len();
        let mut g = vec![0.0; self.dim()];
        for i in 0..n {
            let t = self.residual(i, x);
            axpy(t * t, &self.a[i], &mut g);
        }
        for gi in &mut g {
            *gi /= n as f64;
        }
        g
    }

    fn hessian(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let d = self.dim();
        let n = self.b.len() as f64;
        let mut h = vec![vec![0.0; d]; d];
        for (i, a) in self.a.iter().enumerate() {
            let w = 2.0 * self.residual(i, x) / n;
            for p in 0..d {
                for q in 0..d {
                    h[p][q] += w * a[p] * a[q];
                }
            }
        }
        h
    }

    fn components(&self) -> usize {
        self.b.len()
    }

    fn component_grad(&self, i: usize, x: &[f64]) -> Vec<f64> {
        let t = self.residual(i, x);
        scale(&self.a[i], t * t)
    }

    fn add_sample_grad(&self, sample: &Sample, x: &[f64], w: f64, out: &mut [f64]) {
        match *sample {
            Sample::Index(i) => {
                let t = self.residual(i, x);
                axpy(w * t * t, &self.a[i], out);
            }
            Sample::Draw(_) => axpy(w, &self.grad(x), out),
        }
    }
}

fn random_direction(stream: &mut RandomStream, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| stream.normal()).collect();
        let nv = norm(&v);
        if nv > 1e-8 {
            return scale(&v, 1.0 / nv);
        }
    }
}

/// Finite sum of `n` cubic components in `dim` dimensions.
///
/// Directions come in antithetic groups (`a, -a` pairs, plus one
/// `a, -a/∛2, -a/∛2` triple when `n` is odd) so the cubic parts cancel and
/// the average is a convex quadratic; all offsets `bᵢ` are negative. That
/// keeps `f` bounded below while every component stays genuinely cubic.
/// With `n = 1` the single component is unbounded below.
pub fn make_cubic_finite_sum(n: usize, dim: usize, seed: u64) -> Result<Problem> {
    if n == 0 || dim == 0 {
        return Err(Error::InvalidConfig("cubic_fs needs n >= 1 and dim >= 1".into()));
    }
    let mut stream = RandomStream::new(seed);
    let mut a = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    let offset = |s: &mut RandomStream| -(0.5 + 0.5 * s.uniform());
    let triple = n % 2 == 1 && n >= 3;
    let pairs = if n == 1 {
        0
    } else if triple {
        (n - 3) / 2
    } else {
        n / 2
    };
    for _ in 0..pairs {
        let dir = random_direction(&mut stream, dim);
        let ai = scale(&dir, 0.8 + 0.2 * stream.uniform());
        a.push(ai.clone());
        a.push(scale(&ai, -1.0));
        b.push(offset(&mut stream));
        b.push(offset(&mut stream));
    }
    if triple || n == 1 {
        let dir = random_direction(&mut stream, dim);
        let ai = scale(&dir, 0.8 + 0.2 * stream.uniform());
        a.push(ai.clone());
        b.push(offset(&mut stream));
        if triple {
            let tail = scale(&ai, -1.0 / 2f64.cbrt());
            for _ in 0..2 {
                a.push(tail.clone());
                b.push(offset(&mut stream));
            }
        }
    }
    let component_l: Vec<f64> = a
        .iter()
        .zip(&b)
        .map(|(ai, bi)| {
            let na = norm(ai);
            2.0 * na * na * na.max(bi.abs())
        })
        .collect();
    let smad_l = (component_l.iter().map(|l| l * l).sum::<f64>() / n as f64).sqrt();
    let l_max = component_l.iter().cloned().fold(0.0, f64::max);
    let obj = CubicSum { a, b };
    let lower_bound = if n >= 2 { quadratic_minimum(&obj) } else { None };
    let x0 = vec![1.0 / (dim as f64).sqrt(); dim];
    Ok(Problem {
        name: "cubic_fs".into(),
        structure: Structure::FiniteSum(n),
        objective: Arc::new(obj),
        phi: CompositeTerm::Zero,
        smad_l,
        component_l,
        l_max,
        kernel: Kernel::Polynomial(1),
        x0,
        lower_bound,
        probe_box: (-5.0, 5.0),
    })
}

/// Minimum of the balanced cubic sum, which is exactly quadratic.
fn quadratic_minimum(obj: &CubicSum) -> Option<f64> {
    let d = obj.dim();
    let n = obj.b.len() as f64;
    let mut hess = DMatrix::<f64>::zeros(d, d);
    let mut g0 = DVector::<f64>::zeros(d);
    for (ai, bi) in obj.a.iter().zip(&obj.b) {
        let av = DVector::from_column_slice(ai);
        hess += (-2.0 * bi / n) * &av * av.transpose();
        g0 += (bi * bi / n) * av;
    }
    let chol = hess.cholesky()?;
    let xs = chol.solve(&(-g0));
    Some(obj.value(xs.as_slice()))
}

/// `f(x) = E[(ξ₁x - ξ₂)³ / 3]` with independent standard normal `ξ₁, ξ₂`.
///
/// Every odd moment vanishes, so the mean objective and its gradient are
/// identically zero; only the sampled gradients carry information.
#[derive(Debug, Clone)]
pub struct CubicExpectation;

impl CubicExpectation {
    /// Exact second moment of a sampled gradient, which is also its variance.
    pub fn gradient_variance(x: f64) -> f64 {
        let x2 = x * x;
        15.0 * x2 * x2 + 18.0 * x2 + 3.0
    }
}

impl Objective for CubicExpectation {
    fn dim(&self) -> usize {
        1
    }

    fn value(&self, _x: &[f64]) -> f64 {
        0.0
    }

    fn grad(&self, _x: &[f64]) -> Vec<f64> {
        vec![0.0]
    }

    fn hessian(&self, _x: &[f64]) -> Vec<Vec<f64>> {
        vec![vec![0.0]]
    }

    fn components(&self) -> usize {
        usize::MAX
    }

    fn draw(&self, stream: &mut RandomStream) -> Sample {
        Sample::Draw([stream.normal(), stream.normal()])
    }

    fn sample_grad(&self, sample: &Sample, x: &[f64]) -> Vec<f64> {
        match *sample {
            Sample::Draw([xi1, xi2]) => {
                let t = xi1 * x[0] - xi2;
                vec![xi1 * t * t]
            }
            Sample::Index(_) => self.grad(x),
        }
    }

    fn sigma(&self, x: &[f64]) -> Option<f64> {
        Some(Self::gradient_variance(x[0]).sqrt())
    }
}

/// `seed` is kept for interface symmetry; the instance has no random
/// coefficients, only random samples.
pub fn make_cubic_expectation(_seed: u64) -> Result<Problem> {
    // |f_ξ''(x)| = 2ξ₁²|ξ₁x - ξ₂| ≤ L_ξ (1 + |x|) with L_ξ = 2ξ₁² max(|ξ₁|, |ξ₂|),
    // and E[L_ξ²] ≤ 4 E[ξ₁⁴ (ξ₁² + ξ₂²)] = 72.
    let smad_l = 72f64.sqrt();
    Ok(Problem {
        name: "cubic_exp".into(),
        structure: Structure::Expectation,
        objective: Arc::new(CubicExpectation),
        phi: CompositeTerm::Zero,
        smad_l,
        component_l: Vec::new(),
        l_max: smad_l,
        kernel: Kernel::Polynomial(1),
        x0: vec![1.0],
        lower_bound: Some(0.0),
        probe_box: (-5.0, 5.0),
    })
}

/// Largest sampled violations of relative smoothness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmadReport {
    /// `max (|vᵀ∇²f v| - L vᵀ∇²h v)₊ / (L vᵀ∇²h v)` over sampled points and
    /// unit directions.
    pub curvature: f64,
    /// `max (|f(x) - f(y) - ⟨∇f(y), x - y⟩| - L D_h(x, y))₊ / (L D_h(x, y))`.
    pub descent: f64,
    /// Curvature check applied per component with `Lᵢ · L / smad_l`.
    pub component_curvature: Option<f64>,
}

impl SmadReport {
    pub fn max_violation(&self) -> f64 {
        self.curvature
            .max(self.descent)
            .max(self.component_curvature.unwrap_or(0.0))
    }
}

/// Probes `-L∇²h ⪯ ∇²f ⪯ L∇²h` with finite-difference Hessians and the
/// two-sided descent inequality at random points of `problem.probe_box`.
pub fn smad_check(problem: &Problem, kernel: &Kernel, l: f64, num_samples: usize, seed: u64) -> SmadReport {
    let mut stream = RandomStream::new(seed);
    let d = problem.dim();
    let (lo, hi) = problem.probe_box;
    let point = |s: &mut RandomStream| -> Vec<f64> { (0..d).map(|_| lo + (hi - lo) * s.uniform()).collect() };
    let obj = &problem.objective;
    let rel = |excess: f64, budget: f64| -> f64 {
        if excess <= budget {
            0.0
        } else {
            (excess - budget) / budget.max(f64::MIN_POSITIVE)
        }
    };
    let mut curvature: f64 = 0.0;
    let mut descent: f64 = 0.0;
    for _ in 0..num_samples {
        let x = point(&mut stream);
        let v = random_direction(&mut stream, d);
        let hf = fd_jacobian(|y| obj.grad(y), &x, 1e-5).expect("finite gradient");
        let qf = quad_form(&hf, &v);
        let qh = dot(&v, &kernel.hess_apply(&x, &v));
        curvature = curvature.max(rel(qf.abs(), l * qh));

        let y = point(&mut stream);
        let gap = obj.value(&x) - obj.value(&y) - dot(&obj.grad(&y), &sub(&x, &y));
        descent = descent.max(rel(gap.abs(), l * kernel.bregman_div(&x, &y)));
    }
    let component_curvature = match problem.structure {
        Structure::FiniteSum(n) if problem.component_l.len() == n => {
            let ratio = l / problem.smad_l;
            let mut worst: f64 = 0.0;
            for _ in 0..num_samples {
                let i = stream.index(n);
                let x = point(&mut stream);
                let v = random_direction(&mut stream, d);
                let hf = fd_jacobian(|y| obj.component_grad(i, y), &x, 1e-5).expect("finite gradient");
                let qf = quad_form(&hf, &v);
                let qh = dot(&v, &kernel.hess_apply(&x, &v));
                worst = worst.max(rel(qf.abs(), ratio * problem.component_l[i] * qh));
            }
            Some(worst)
        }
        _ => None,
    };
    SmadReport {
        curvature,
        descent,
        component_curvature,
    }
}
