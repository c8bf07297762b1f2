//! Recursive variance-reduced gradient estimator.

use crate::numerics::RandomStream;
use crate::problems::{Objective, Sample};

/// Draws `b` samples with replacement.
pub fn draw_batch(obj: &dyn Objective, stream: &mut RandomStream, b: usize) -> Vec<Sample> {
    (0..b).map(|_| obj.draw(stream)).collect()
}

/// Mean of sampled gradients at `x`.
pub fn batch_mean(obj: &dyn Objective, batch: &[Sample], x: &[f64]) -> Vec<f64> {
    let mut v = vec![0.0; x.len()];
    let w = 1.0 / batch.len() as f64;
    for s in batch {
        obj.add_sample_grad(s, x, w, &mut v);
    }
    v
}

/// `v + (1/|B|) Σ (∇f_ξ(x_cur) - ∇f_ξ(x_prev))`.
pub fn sarah_step(v: &[f64], obj: &dyn Objective, batch: &[Sample], x_cur: &[f64], x_prev: &[f64]) -> Vec<f64> {
    let mut out = v.to_vec();
    if batch.is_empty() || x_cur == x_prev {
        return out;
    }
    let w = 1.0 / batch.len() as f64;
    for s in batch {
        obj.add_sample_grad(s, x_cur, w, &mut out);
        obj.add_sample_grad(s, x_prev, -w, &mut out);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::vecops::dist;
    use crate::problems::make_cubic_finite_sum;

    #[test]
    fn full_batch_telescopes() {
        let p = make_cubic_finite_sum(5, 2, 1).unwrap();
        let obj = p.objective.as_ref();
        let all: Vec<Sample> = (0..5).map(Sample::Index).collect();
        let x0 = [0.1, 0.2];
        let x1 = [0.4, -0.3];
        let v = sarah_step(&p.grad(&x0), obj, &all, &x1, &x0);
        assert!(dist(&v, &p.grad(&x1)) < 1e-14);
    }

    #[test]
    fn unchanged_point_keeps_estimate() {
        let p = make_cubic_finite_sum(5, 2, 1).unwrap();
        let v = vec![1.0, 2.0];
        let out = sarah_step(&v, p.objective.as_ref(), &[Sample::Index(2)], &[0.3, 0.3], &[0.3, 0.3]);
        assert_eq!(out, v);
    }
}
