use approx::assert_relative_eq;
use bpg_core::numerics::{fd_gradient, fd_hessian};
use bpg_core::Kernel;
use proptest::prelude::*;

fn point(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, dim)
}

fn kappa_at(kernel: &Kernel, x: &[f64]) -> f64 {
    let (lo, hi) = kernel.hess_eig_bounds(x);
    hi / lo
}

proptest! {
    #[test]
    fn pointwise_condition_number_at_most_r_plus_one(
        r in prop::sample::select(vec![1u32, 2, 4, 8]),
        x in (1usize..5).prop_flat_map(point),
    ) {
        let k = Kernel::Polynomial(r);
        prop_assert!(kappa_at(&k, &x) <= (r + 1) as f64 * (1.0 + 1e-12));
    }

    #[test]
    fn ball_condition_number_within_regularity_bound(
        r in prop::sample::select(vec![1u32, 2, 4, 8]),
        c in (1usize..5).prop_flat_map(point),
        frac in 0.0f64..=1.0,
    ) {
        let k = Kernel::Polynomial(r);
        let reg = k.regularity().unwrap();
        let (mu, l) = k.mu_l_over_ball(&c, frac * reg.delta / 2.0);
        prop_assert!(mu >= reg.mu);
        prop_assert!(l / mu <= reg.kappa_delta * (1.0 + 1e-12));
    }

    #[test]
    fn bregman_divergence_sandwiched_by_segment_curvature(
        r in 1u32..6,
        (x, y) in (1usize..4).prop_flat_map(|d| (point(d), point(d))),
    ) {
        let k = Kernel::Polynomial(r);
        let (mu, l) = k.mu_l_over_segment(&x, &y);
        let dsq: f64 = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum();
        let div = k.bregman_div(&y, &x);
        let slack = 1e-9 * (1.0 + div.abs());
        prop_assert!(div >= 0.5 * mu * dsq - slack);
        prop_assert!(div <= 0.5 * l * dsq + slack);
    }

    #[test]
    fn gradient_inverse_round_trip(r in 1u32..9, x in (1usize..5).prop_flat_map(point)) {
        for k in [Kernel::Quadratic, Kernel::Polynomial(r)] {
            let back = k.grad_inverse(&k.grad(&x)).unwrap();
            for (a, b) in back.iter().zip(&x) {
                prop_assert!((a - b).abs() <= 1e-10 * (1.0 + b.abs()));
            }
        }
    }

    #[test]
    fn hessian_solve_inverts_hessian(r in 1u32..6, x in point(3), v in point(3)) {
        let k = Kernel::Polynomial(r);
        let w = k.hess_solve(&x, &v).unwrap();
        let back = k.hess_apply(&x, &w);
        for (a, b) in back.iter().zip(&v) {
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + b.abs()));
        }
    }
}

#[test]
fn derivatives_match_finite_differences() {
    let x = [0.7, -0.4, 0.2];
    for k in [Kernel::Quadratic, Kernel::Polynomial(1), Kernel::Polynomial(4)] {
        let g = fd_gradient(|y| k.value(y), &x, 1e-6).unwrap();
        for (a, b) in g.iter().zip(k.grad(&x)) {
            assert_relative_eq!(*a, b, epsilon = 1e-7);
        }
        let h = fd_hessian(|y| k.value(y), &x, 1e-4).unwrap();
        let exact = k.hess_matrix(&x);
        for (row, erow) in h.iter().zip(&exact) {
            for (a, b) in row.iter().zip(erow) {
                assert_relative_eq!(*a, *b, epsilon = 1e-5);
            }
        }
    }
}

#[test]
fn monomial_kernel_has_no_uniform_regularity() {
    let k = Kernel::monomial(4).unwrap();
    assert!(k.regularity().is_err());
    assert!(k.epoch_radius(&[1.0]).is_err());
}

#[test]
fn epoch_radius_grows_with_anchor_norm() {
    let k = Kernel::Polynomial(2);
    assert_relative_eq!(k.epoch_radius(&[0.0, 0.0]).unwrap(), 0.25);
    assert_relative_eq!(k.epoch_radius(&[10.0, 0.0]).unwrap(), 2.0);
}
