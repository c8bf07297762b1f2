//! Brute-force reference computations the solvers are checked against.

use bpg_core::numerics::vecops::{dist, norm, norm_sq, sub};
use bpg_core::numerics::{fd_gradient, fd_hessian, fd_jacobian};
use bpg_core::problems::{
    make_cubic_expectation, make_cubic_finite_sum, make_example1, make_example2, smad_check, CubicExpectation,
};
use bpg_core::prox::{kkt_residual_check, on_boundary, prox_grad_loop, prox_point};
use bpg_core::solvers::sarah_step;
use bpg_core::{CompositeTerm, Kernel, Problem, RandomStream, Sample};

/// Outcome of one oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleEntry {
    pub name: String,
    pub passed: bool,
    pub max_residual: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl OracleEntry {
    fn new(name: &str, max_residual: f64, tolerance: f64, detail: String) -> Self {
        OracleEntry {
            name: name.to_string(),
            passed: max_residual <= tolerance,
            max_residual,
            tolerance,
            detail,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct OracleReport {
    pub entries: Vec<OracleEntry>,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.passed)
    }
}

pub fn oracle_suite(seed: u64) -> OracleReport {
    let prox = prox_oracles(seed);
    let sarah = sarah_enumeration(seed);
    OracleReport {
        entries: vec![
            OracleEntry::new(
                "prox_closed_form_vs_inner_solver",
                prox.closed_vs_inner,
                1e-8,
                format!("{} instances", prox.closed_instances),
            ),
            OracleEntry::new(
                "prox_constrained_vs_grid",
                prox.constrained_vs_grid,
                1e-3,
                format!(
                    "{} instances, {} with an active constraint",
                    prox.grid_instances, prox.grid_active
                ),
            ),
            OracleEntry::new("prox_kkt_residual", prox.max_kkt, 1e-9, "all prox instances".into()),
            OracleEntry::new(
                "sarah_martingale",
                sarah.martingale,
                1e-12,
                format!("{} enumerated trees", sarah.cases),
            ),
            OracleEntry::new(
                "sarah_variance",
                sarah.variance_excess,
                1e-12,
                format!("{} enumerated trees", sarah.cases),
            ),
            monte_carlo_moments(seed),
            fd_checks(seed),
            smoothness_probe(seed),
        ],
    }
}

fn random_kernel(s: &mut RandomStream) -> Kernel {
    [
        Kernel::Quadratic,
        Kernel::Polynomial(1),
        Kernel::Polynomial(2),
        Kernel::Polynomial(4),
    ][s.index(4)]
}

fn uniform(s: &mut RandomStream, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * s.uniform()
}

fn point(s: &mut RandomStream, dim: usize, half_width: f64) -> Vec<f64> {
    (0..dim).map(|_| uniform(s, -half_width, half_width)).collect()
}

/// Minimizes `⟨v,y⟩ + w‖y‖₁ + D_h(y,x)/λ` over the disc `B(c, R)` by a polar
/// grid followed by successively finer local grids.
pub fn grid_prox_2d(
    kernel: &Kernel,
    weight: f64,
    x: &[f64],
    v: &[f64],
    lambda: f64,
    c: &[f64],
    radius: f64,
) -> Vec<f64> {
    let obj = |y: &[f64]| -> f64 {
        v[0] * y[0] + v[1] * y[1] + weight * (y[0].abs() + y[1].abs()) + kernel.bregman_div(y, x) / lambda
    };
    let clamp = |y: [f64; 2]| -> [f64; 2] {
        let d = ((y[0] - c[0]).powi(2) + (y[1] - c[1]).powi(2)).sqrt();
        if d <= radius {
            y
        } else {
            let t = radius / d;
            [c[0] + t * (y[0] - c[0]), c[1] + t * (y[1] - c[1])]
        }
    };
    let mut best = [c[0], c[1]];
    let mut best_val = obj(&best);
    let (nr, na) = (64, 256);
    for i in 1..=nr {
        let rho = radius * i as f64 / nr as f64;
        for j in 0..na {
            let a = std::f64::consts::TAU * j as f64 / na as f64;
            let y = [c[0] + rho * a.cos(), c[1] + rho * a.sin()];
            let val = obj(&y);
            if val < best_val {
                best = y;
                best_val = val;
            }
        }
    }
    let mut h = radius / 32.0;
    while h > 1e-9 * radius.max(1.0) {
        let center = best;
        for i in -10..=10 {
            for j in -10..=10 {
                let y = clamp([center[0] + h * i as f64, center[1] + h * j as f64]);
                let val = obj(&y);
                if val < best_val {
                    best = y;
                    best_val = val;
                }
            }
        }
        h /= 4.0;
    }
    best.to_vec()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProxOracleStats {
    pub closed_vs_inner: f64,
    pub constrained_vs_grid: f64,
    pub max_kkt: f64,
    pub closed_instances: usize,
    pub grid_instances: usize,
    /// Grid instances whose solution lies on the ball boundary.
    pub grid_active: usize,
}

/// Closed-form prox against the generic inner solver (100 instances) and
/// the constrained prox against the grid oracle (20 instances).
pub fn prox_oracles(seed: u64) -> ProxOracleStats {
    let mut s = RandomStream::new(seed).substream(1, 0);
    let mut out = ProxOracleStats {
        closed_vs_inner: 0.0,
        constrained_vs_grid: 0.0,
        max_kkt: 0.0,
        closed_instances: 100,
        grid_instances: 20,
        grid_active: 0,
    };
    for _ in 0..out.closed_instances {
        let kernel = random_kernel(&mut s);
        let x = point(&mut s, 2, 1.0);
        let v = point(&mut s, 2, 1.0);
        let lambda = uniform(&mut s, 0.05, 1.0);
        let weight = if s.uniform() < 0.5 {
            0.0
        } else {
            uniform(&mut s, 0.01, 0.5)
        };
        let phi = CompositeTerm::l1(weight).expect("nonnegative weight");
        let err = match prox_point(&kernel, &phi, &x, &v, lambda) {
            Ok(y) => {
                out.max_kkt = out.max_kkt.max(kkt_residual_check(&kernel, &phi, &x, &v, lambda, &y));
                let radius = 2.0 * (norm(&y) + norm(&x) + 1.0);
                match prox_grad_loop(&kernel, weight, &[0.0, 0.0], radius, &x, &v, lambda, 1e-12, x.clone()) {
                    Ok(z) => dist(&y, &z),
                    Err(_) => f64::INFINITY,
                }
            }
            Err(_) => f64::INFINITY,
        };
        out.closed_vs_inner = out.closed_vs_inner.max(err);
    }
    for _ in 0..out.grid_instances {
        let kernel = random_kernel(&mut s);
        let x = point(&mut s, 2, 1.0);
        let radius = uniform(&mut s, 0.05, 0.5);
        // the center sits near x so the ball contains it, and the large
        // direction pushes the free minimizer outside
        let off = point(&mut s, 2, 0.5 * radius / 2f64.sqrt());
        let c = vec![x[0] + off[0], x[1] + off[1]];
        let v = point(&mut s, 2, 20.0);
        let lambda = uniform(&mut s, 0.1, 1.0);
        let weight = if s.uniform() < 0.5 {
            0.0
        } else {
            uniform(&mut s, 0.01, 0.5)
        };
        let phi = CompositeTerm::l1(weight)
            .and_then(|p| p.with_ball(&c, radius))
            .expect("valid term");
        let err = match prox_point(&kernel, &phi, &x, &v, lambda) {
            Ok(y) => {
                out.max_kkt = out.max_kkt.max(kkt_residual_check(&kernel, &phi, &x, &v, lambda, &y));
                if on_boundary(&y, &c, radius) {
                    out.grid_active += 1;
                }
                dist(&y, &grid_prox_2d(&kernel, weight, &x, &v, lambda, &c, radius))
            }
            Err(_) => f64::INFINITY,
        };
        out.constrained_vs_grid = out.constrained_vs_grid.max(err);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SarahOracleStats {
    /// Largest `|E[ℰ_k | history] - ℰ_{k-1}|` over every node.
    pub martingale: f64,
    /// Largest `E‖ℰ_k‖² - (1/(bn)) Σ_j E Σ_i ‖∇f_i(x_{j+1}) - ∇f_i(x_j)‖²`,
    /// clamped at zero.
    pub variance_excess: f64,
    pub cases: usize,
}

/// All ordered batches of size `b` drawn with replacement from `0..n`.
pub fn all_batches(n: usize, b: usize) -> Vec<Vec<Sample>> {
    let mut out: Vec<Vec<Sample>> = vec![Vec::new()];
    for _ in 0..b {
        out = out
            .into_iter()
            .flat_map(|pre| {
                (0..n).map(move |i| {
                    let mut v = pre.clone();
                    v.push(Sample::Index(i));
                    v
                })
            })
            .collect();
    }
    out
}

struct Enumerator<'a> {
    p: &'a Problem,
    kernel: Kernel,
    lambda: f64,
    b: usize,
    tau: usize,
    lhs: Vec<f64>,
    rhs: Vec<f64>,
    martingale: f64,
}

impl Enumerator<'_> {
    fn spread(&self, x_new: &[f64], x_old: &[f64]) -> f64 {
        let obj = self.p.objective.as_ref();
        let n = obj.components();
        (0..n)
            .map(|i| norm_sq(&sub(&obj.component_grad(i, x_new), &obj.component_grad(i, x_old))))
            .sum::<f64>()
            / (self.b * n) as f64
    }

    /// Node holding `x_{k-1}`, `x_k` and `v_{k-1}`; branches over the batch
    /// drawn at step `k`.
    #[allow(clippy::too_many_arguments)]
    fn visit(
        &mut self,
        batches: &[Vec<Sample>],
        k: usize,
        x_old: &[f64],
        x_cur: &[f64],
        v_old: &[f64],
        prob: f64,
        acc: f64,
    ) {
        if k >= self.tau {
            return;
        }
        let obj = self.p.objective.as_ref();
        let err_old = sub(v_old, &self.p.grad(x_old));
        let g_cur = self.p.grad(x_cur);
        let acc = acc + self.spread(x_cur, x_old);
        let m = batches.len() as f64;
        let mut mean_err = vec![0.0; x_cur.len()];
        for batch in batches {
            let v = sarah_step(v_old, obj, batch, x_cur, x_old);
            let err = sub(&v, &g_cur);
            for (a, e) in mean_err.iter_mut().zip(&err) {
                *a += e / m;
            }
            self.lhs[k] += prob / m * norm_sq(&err);
            let x_next = prox_point(&self.kernel, &CompositeTerm::Zero, x_cur, &v, self.lambda)
                .expect("smooth prox with a polynomial kernel");
            self.visit(batches, k + 1, x_cur, &x_next, &v, prob / m, acc);
        }
        self.rhs[k] += prob * acc;
        let dev = mean_err
            .iter()
            .zip(&err_old)
            .map(|(a, e)| (a - e).abs())
            .fold(0.0, f64::max);
        self.martingale = self.martingale.max(dev);
    }
}

/// Exhaustive enumeration of every batch sequence for `n ≤ 6`, `b ≤ 2`,
/// `τ ≤ 3`, with iterates moved by the prox step using the estimate.
pub fn sarah_enumeration(seed: u64) -> SarahOracleStats {
    let mut stats = SarahOracleStats {
        martingale: 0.0,
        variance_excess: 0.0,
        cases: 0,
    };
    let mut s = RandomStream::new(seed).substream(2, 0);
    for n in 1..=6 {
        for b in 1..=2 {
            for tau in 1..=3 {
                let p = make_cubic_finite_sum(n, 2, seed.wrapping_add((n * 10 + b) as u64)).expect("valid instance");
                let x0 = point(&mut s, 2, 1.0);
                let v0 = p.grad(&x0);
                let kernel = Kernel::Polynomial(2);
                let lambda = 0.5 / p.smad_l;
                let x1 = prox_point(&kernel, &CompositeTerm::Zero, &x0, &v0, lambda).expect("smooth prox");
                let mut e = Enumerator {
                    p: &p,
                    kernel,
                    lambda,
                    b,
                    tau,
                    lhs: vec![0.0; tau],
                    rhs: vec![0.0; tau],
                    martingale: 0.0,
                };
                e.visit(&all_batches(n, b), 1, &x0, &x1, &v0, 1.0, 0.0);
                stats.martingale = stats.martingale.max(e.martingale);
                for k in 1..tau {
                    stats.variance_excess = stats.variance_excess.max(e.lhs[k] - e.rhs[k]);
                }
                stats.cases += 1;
            }
        }
    }
    stats
}

/// Sample mean and variance of the expectation problem's gradient sampler
/// against `0` and `15x⁴ + 18x² + 3`. The residual is the larger of the
/// relative variance error and the mean in units of its standard error
/// divided by 100 (so both share the 5% tolerance).
pub fn monte_carlo_moments(seed: u64) -> OracleEntry {
    let p = make_cubic_expectation(seed).expect("valid instance");
    let obj = p.objective.as_ref();
    let m = 200_000;
    let mut worst: f64 = 0.0;
    let mut detail = Vec::new();
    for (j, x) in [0.0, 0.5, 1.0, 1.5].into_iter().enumerate() {
        let mut s = RandomStream::new(seed).substream(3, j as u64);
        let (mut sum, mut sq) = (0.0, 0.0);
        for _ in 0..m {
            let d = obj.draw(&mut s);
            let g = obj.sample_grad(&d, &[x])[0];
            sum += g;
            sq += g * g;
        }
        let mean = sum / m as f64;
        let var = sq / m as f64 - mean * mean;
        let exact = CubicExpectation::gradient_variance(x);
        let z = mean.abs() / (exact / m as f64).sqrt();
        let rel = (var / exact - 1.0).abs();
        worst = worst.max(rel).max(z / 100.0);
        detail.push(format!(
            "x={x}: mean {mean:.2e} ({z:.1} se), var {var:.3} vs {exact:.3}"
        ));
    }
    OracleEntry::new("expectation_sampler_moments", worst, 0.05, detail.join("; "))
}

/// Finite-difference checks of kernel and objective derivatives; the
/// residual is the largest error relative to `1 + |exact|`.
pub fn fd_checks(seed: u64) -> OracleEntry {
    let mut s = RandomStream::new(seed).substream(4, 0);
    let mut worst: f64 = 0.0;
    let rel = |a: f64, b: f64| (a - b).abs() / (1.0 + b.abs());
    for kernel in [
        Kernel::Quadratic,
        Kernel::Polynomial(1),
        Kernel::Polynomial(2),
        Kernel::Polynomial(4),
    ] {
        for _ in 0..10 {
            let x = point(&mut s, 3, 1.5);
            let g = fd_gradient(|y| kernel.value(y), &x, 1e-6).expect("finite values");
            for (a, b) in g.iter().zip(kernel.grad(&x)) {
                worst = worst.max(rel(*a, b));
            }
            let h = fd_hessian(|y| kernel.value(y), &x, 1e-4).expect("finite values");
            for (row, erow) in h.iter().zip(kernel.hess_matrix(&x)) {
                for (a, b) in row.iter().zip(erow) {
                    // second differences carry O(h²) truncation and O(eps/h²) noise
                    worst = worst.max(rel(*a, b) / 100.0);
                }
            }
        }
    }
    let problems = [
        make_example1(4).expect("valid instance"),
        make_cubic_finite_sum(12, 3, seed).expect("valid instance"),
        make_example2(4).expect("valid instance"),
    ];
    for p in &problems {
        for _ in 0..10 {
            let mut x = point(&mut s, p.dim(), 1.5);
            if p.name == "example2" {
                x[0] = x[0].abs() + 0.1;
            }
            let g = fd_gradient(|y| p.f(y), &x, 1e-6).expect("finite values");
            for (a, b) in g.iter().zip(p.grad(&x)) {
                worst = worst.max(rel(*a, b));
            }
            let h = fd_jacobian(|y| p.grad(y), &x, 1e-6).expect("finite values");
            for (row, erow) in h.iter().zip(p.objective.hessian(&x)) {
                for (a, b) in row.iter().zip(erow) {
                    worst = worst.max(rel(*a, b));
                }
            }
        }
    }
    OracleEntry::new(
        "finite_difference_derivatives",
        worst,
        1e-5,
        "4 kernels, 3 objectives".into(),
    )
}

/// Relative smoothness probes of the certified constants.
pub fn smoothness_probe(seed: u64) -> OracleEntry {
    let problems = [
        make_example1(4).expect("valid instance"),
        make_cubic_finite_sum(16, 3, seed).expect("valid instance"),
    ];
    let mut worst: f64 = 0.0;
    for p in &problems {
        worst = worst.max(smad_check(p, &p.kernel, p.smad_l, 300, seed).max_violation());
    }
    OracleEntry::new(
        "relative_smoothness_probe",
        worst,
        1e-6,
        "example1, cubic_fs(16)".into(),
    )
}
