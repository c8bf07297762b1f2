use bpg_core::mappings::{eval_mappings, limiting_map};
use bpg_core::numerics::vecops::{dist, norm, sub};
use bpg_core::problems::{make_cubic_finite_sum, make_example1};
use bpg_core::{CompositeTerm, Kernel};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn new_mapping_over_old_within_segment_curvature(
        seed in 0u64..50,
        r in 1u32..5,
        x in prop::collection::vec(-2.0f64..2.0, 3),
        lambda in 1e-3f64..2.0,
        weight in prop_oneof![Just(0.0), 0.001f64..0.3],
    ) {
        let p = make_cubic_finite_sum(8, 3, seed).unwrap();
        let k = Kernel::Polynomial(r);
        let phi = CompositeTerm::l1(weight).unwrap();
        let m = eval_mappings(&k, &phi, &x, &p.grad(&x), lambda).unwrap();
        let (ng, nd) = (norm(&m.g), norm(&m.d));
        prop_assume!(ng > 1e-8);
        let (mu, l) = k.mu_l_over_segment(&x, &m.x_plus);
        let ratio = nd / ng;
        prop_assert!(ratio >= mu * (1.0 - 1e-9) && ratio <= l * (1.0 + 1e-9), "{} not in [{}, {}]", ratio, mu, l);
    }

    #[test]
    fn smooth_new_mapping_is_the_gradient(
        seed in 0u64..50,
        r in 1u32..5,
        x in prop::collection::vec(-2.0f64..2.0, 3),
        lambda in 1e-3f64..2.0,
    ) {
        let p = make_cubic_finite_sum(8, 3, seed).unwrap();
        let g = p.grad(&x);
        for k in [Kernel::Quadratic, Kernel::Polynomial(r)] {
            let m = eval_mappings(&k, &CompositeTerm::Zero, &x, &g, lambda).unwrap();
            prop_assert!(dist(&m.d, &g) <= 1e-9 * (1.0 + norm(&g)));
        }
    }
}

/// Empirical order of `‖𝒢^λ - [∇²h]⁻¹∇f‖` in `λ`.
#[test]
fn old_mapping_tends_to_limiting_map_linearly() {
    let p = make_example1(4).unwrap();
    let k = p.kernel;
    let x = [0.8, -0.3];
    let lim = limiting_map(&k, &p, &x).unwrap();
    let err = |lambda: f64| {
        let m = eval_mappings(&k, &CompositeTerm::Zero, &x, &p.grad(&x), lambda).unwrap();
        norm(&sub(&m.g, &lim))
    };
    let (e2, e3, e4) = (err(1e-2), err(1e-3), err(1e-4));
    assert!((e2 / e3).log10() >= 0.9, "{e2} {e3}");
    assert!((e3 / e4).log10() >= 0.9, "{e3} {e4}");
}
