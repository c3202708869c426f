use calabi_core::calabi::{calabi_eq1, CalabiOptions};
use calabi_core::exprlang::bump;
use calabi_core::genfun::{psi_apply, psi_inverse_apply, GeneratingFunction};
use calabi_core::geom::{distance, LiouvilleFlow, QuadratureRule, SupportBox};
use calabi_core::hamflow::{flow, HamiltonianField};
use proptest::prelude::*;

/// `a·b(r)·(1 + βq)` on the unit disc with a centered-difference
/// gradient.
fn tilted(a: f64, beta: f64) -> HamiltonianField {
    HamiltonianField::from_fn_with_gradient(
        1,
        SupportBox::centered(2, 1.0),
        move |_, x| a * bump(x[0].hypot(x[1])) * (1.0 + beta * x[0]),
        move |_, x, g| {
            let h = 1e-6;
            for i in 0..2 {
                let mut up = x.to_vec();
                let mut dn = x.to_vec();
                up[i] += h;
                dn[i] -= h;
                let f = |y: &[f64]| a * bump(y[0].hypot(y[1])) * (1.0 + beta * y[0]);
                g[i] = (f(&up) - f(&dn)) / (2.0 * h);
            }
        },
    )
    .unwrap()
    .autonomous(true)
}

fn small_genfun(a: f64, tilt: f64) -> GeneratingFunction {
    let f = move |z: &[f64]| a * (1.0 - z[0] * z[0] - z[1] * z[1]).max(0.0).powi(4) * (1.0 + tilt * z[0]);
    GeneratingFunction::from_fn(1, SupportBox::centered(2, 1.0), f, move |z, g| {
        let u = (1.0 - z[0] * z[0] - z[1] * z[1]).max(0.0);
        let w = 1.0 + tilt * z[0];
        g[0] = a * (-8.0 * z[0] * u.powi(3) * w + tilt * u.powi(4));
        g[1] = a * (-8.0 * z[1] * u.powi(3) * w);
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn flow_backward_undoes_flow_forward(
        a in -0.8f64..0.8, beta in -0.5f64..0.5, q in -1.2f64..1.2, p in -1.2f64..1.2,
    ) {
        let h = tilted(a, beta);
        let y = flow(&h, 0.0, 1.0, &[q, p], 200).unwrap();
        let back = flow(&h, 1.0, 0.0, &y, 200).unwrap();
        prop_assert!(distance(&back, &[q, p]) < 1e-9);
    }

    #[test]
    fn psi_inverse_undoes_psi(
        a in -0.05f64..0.05, tilt in -0.5f64..0.5, x in -1.1f64..1.1, y in -1.1f64..1.1,
    ) {
        let s = small_genfun(a, tilt);
        let image = psi_apply(&s, &[x, y]).unwrap();
        let back = psi_inverse_apply(&s, &image).unwrap();
        prop_assert!(distance(&back, &[x, y]) < 1e-9);
    }

    #[test]
    fn liouville_flow_is_a_group(s in -1.0f64..1.0, t in -1.0f64..1.0, q in -2.0f64..2.0, p in -2.0f64..2.0) {
        let flow = LiouvilleFlow::new(vec![0.3, -0.2]);
        let two_step = flow.apply(t, &flow.apply(s, &[q, p]));
        let one_step = flow.apply(s + t, &[q, p]);
        prop_assert!(distance(&two_step, &one_step) < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn calabi_is_linear_in_autonomous_hamiltonians(c in -3.0f64..3.0) {
        let opts = CalabiOptions::default().with_cells(64).with_rule(QuadratureRule::Trapezoid);
        let base = calabi_eq1(&tilted(0.5, 0.3), &opts).unwrap().value;
        let scaled = calabi_eq1(&tilted(0.5 * c, 0.3), &opts).unwrap().value;
        prop_assert!((scaled - c * base).abs() < 1e-12 * (1.0 + base.abs()));
    }
}
