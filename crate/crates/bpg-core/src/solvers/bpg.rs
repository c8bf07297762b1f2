//! Plain Bregman proximal gradient iteration `x⁺ = T(x, ∇f(x))`.

use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::numerics::vecops::dist;
use crate::problems::Problem;
use crate::prox::prox_point;
use crate::solvers::trace::{IterRecord, ResolvedParams, Trace};

/// Runs `max_iter` steps from `x0`. Records iterates `x_0 … x_{max_iter}`,
/// each with the mappings of the step taken from it.
pub fn bpg_deterministic(
    problem: &Problem,
    kernel: &Kernel,
    lambda: f64,
    x0: &[f64],
    max_iter: usize,
) -> Result<Trace> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidConfig(format!("step size {lambda} must be positive")));
    }
    let n = problem.n().min(u32::MAX as usize) as u64;
    let params = ResolvedParams {
        lambda: Some(lambda),
        epsilon: f64::NAN,
        ..Default::default()
    };
    let mut trace = Trace::new("bpg", problem.dim(), params);
    trace.records.reserve(max_iter + 1);
    let mut x = x0.to_vec();
    let mut samples = 0u64;
    for k in 0..=max_iter {
        let g = problem.grad(&x);
        samples += n;
        let next = prox_point(kernel, &problem.phi, &x, &g, lambda)?;
        let mut rec = IterRecord::new(k, 0, k, x.clone(), problem.psi(&x), lambda, samples);
        rec.norm_g = Some(dist(&x, &next) / lambda);
        rec.norm_d = Some(dist(&kernel.grad(&x), &kernel.grad(&next)) / lambda);
        rec.flags.full_batch = true;
        trace.records.push(rec);
        if k < max_iter {
            x = next;
        }
    }
    trace.iterations = max_iter;
    trace.total_samples = samples;
    trace.x_final = x;
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::make_example2;

    #[test]
    fn monomial_counterexample_closed_form() {
        let p = make_example2(4).unwrap();
        let t = bpg_deterministic(&p, &p.kernel, 1.0, &[0.0], 1000).unwrap();
        assert_eq!(t.records[1].x, vec![1.0]);
        for r in &t.records {
            let exact = (r.k as f64).cbrt();
            assert!((r.x[0] - exact).abs() <= 1e-9, "k={} x={}", r.k, r.x[0]);
            assert!((r.norm_d.unwrap() - 1.0).abs() <= 1e-9);
        }
    }
}
