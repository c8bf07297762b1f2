use bpg_core::numerics::vecops::{dist, norm};
use bpg_core::prox::{kkt_residual_check, prox_grad_loop, prox_map, prox_point};
use bpg_core::{CompositeTerm, Kernel};
use proptest::prelude::*;

fn kernels() -> impl Strategy<Value = Kernel> {
    prop_oneof![
        Just(Kernel::Quadratic),
        Just(Kernel::Polynomial(1)),
        Just(Kernel::Polynomial(2)),
        Just(Kernel::Polynomial(4)),
    ]
}

fn vec2() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn closed_form_matches_generic_solver(
        kernel in kernels(),
        x in vec2(),
        v in vec2(),
        lambda in 0.05f64..1.0,
        weight in prop_oneof![Just(0.0), 0.01f64..0.5],
    ) {
        let phi = CompositeTerm::l1(weight).unwrap();
        let y = prox_point(&kernel, &phi, &x, &v, lambda).unwrap();
        // a ball large enough to be inactive turns the inner loop into a
        // plain solver for the same problem
        let radius = 2.0 * (norm(&y) + norm(&x) + 1.0);
        let center = vec![0.0; 2];
        let inner = prox_grad_loop(&kernel, weight, &center, radius, &x, &v, lambda, 1e-12, x.clone()).unwrap();
        prop_assert!(dist(&y, &inner) <= 1e-8, "closed {:?} inner {:?}", y, inner);
    }

    #[test]
    fn kkt_residual_is_small(
        kernel in kernels(),
        x in vec2(),
        v in prop::collection::vec(-20.0f64..20.0, 2),
        lambda in 0.05f64..1.0,
        weight in prop_oneof![Just(0.0), 0.01f64..0.5],
        radius in 0.05f64..1.0,
        constrained in any::<bool>(),
    ) {
        let base = CompositeTerm::l1(weight).unwrap();
        let phi = if constrained { base.with_ball(&x, radius).unwrap() } else { base };
        let res = prox_map(&kernel, &phi, &x, &v, lambda).unwrap();
        prop_assert!(res.kkt_residual <= 1e-9, "residual {}", res.kkt_residual);
        prop_assert!(phi.value(&res.y).is_finite());
    }

    #[test]
    fn constrained_output_never_beats_feasible_points(
        kernel in kernels(),
        x in vec2(),
        v in prop::collection::vec(-20.0f64..20.0, 2),
        lambda in 0.05f64..1.0,
        radius in 0.05f64..0.5,
        angle in 0.0f64..std::f64::consts::TAU,
        t in 0.0f64..=1.0,
    ) {
        let phi = CompositeTerm::Zero.with_ball(&x, radius).unwrap();
        let obj = |y: &[f64]| -> f64 {
            v.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() + kernel.bregman_div(y, &x) / lambda
        };
        let y = prox_point(&kernel, &phi, &x, &v, lambda).unwrap();
        let z = [x[0] + t * radius * angle.cos(), x[1] + t * radius * angle.sin()];
        prop_assert!(obj(&y) <= obj(&z) + 1e-10);
    }
}

#[test]
fn nonpositive_step_rejected() {
    let e = prox_point(&Kernel::Quadratic, &CompositeTerm::Zero, &[0.0], &[1.0], 0.0);
    assert!(e.is_err());
}

#[test]
fn kkt_check_flags_wrong_points() {
    let k = Kernel::Polynomial(2);
    let x = [0.3, 0.1];
    let v = [1.0, -2.0];
    let r = kkt_residual_check(&k, &CompositeTerm::Zero, &x, &v, 0.5, &[0.0, 0.0]);
    assert!(r > 1e-3);
}
