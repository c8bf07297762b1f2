use bpg_core::numerics::vecops::{norm_sq, sub};
use bpg_core::problems::make_cubic_finite_sum;
use bpg_core::solvers::sarah_step;
use bpg_core::Sample;
use proptest::prelude::*;

/// All ordered batches of size `b` drawn with replacement from `0..n`.
fn batches(n: usize, b: usize) -> Vec<Vec<Sample>> {
    let mut out = vec![vec![]];
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

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// One recursive step: the estimate error is a martingale and its
    /// increment has second moment at most the averaged component
    /// differences over `b`.
    #[test]
    fn one_step_martingale_and_variance(
        seed in 0u64..100,
        n in 1usize..7,
        b in 1usize..3,
        x_prev in prop::collection::vec(-1.0f64..1.0, 2),
        x_cur in prop::collection::vec(-1.0f64..1.0, 2),
        noise in prop::collection::vec(-1.0f64..1.0, 2),
    ) {
        let p = make_cubic_finite_sum(n, 2, seed).unwrap();
        let obj = p.objective.as_ref();
        let gp = p.grad(&x_prev);
        let err_prev = noise.clone();
        let v: Vec<f64> = gp.iter().zip(&noise).map(|(g, e)| g + e).collect();
        let gc = p.grad(&x_cur);
        let all = batches(n, b);
        let mut mean = [0.0; 2];
        let mut second = 0.0;
        for batch in &all {
            let e = sub(&sarah_step(&v, obj, batch, &x_cur, &x_prev), &gc);
            for (m, ei) in mean.iter_mut().zip(&e) {
                *m += ei / all.len() as f64;
            }
            second += norm_sq(&sub(&e, &err_prev)) / all.len() as f64;
        }
        for (m, e) in mean.iter().zip(&err_prev) {
            prop_assert!((m - e).abs() <= 1e-12);
        }
        let spread: f64 = (0..n)
            .map(|i| norm_sq(&sub(&obj.component_grad(i, &x_cur), &obj.component_grad(i, &x_prev))))
            .sum::<f64>()
            / (b * n) as f64;
        prop_assert!(second <= spread + 1e-12);
    }
}
