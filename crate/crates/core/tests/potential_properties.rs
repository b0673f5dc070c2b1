use proptest::prelude::*;
use twopatch::audit::{quotient_second_derivative, sqrt_derivatives};
use twopatch::{shifted_potential_g, Branch, PatchProblem, Potential, ReactionSpec};

fn richards() -> impl Strategy<Value = (f64, f64, f64, f64)> {
    (0.2f64..3.0, 0.5f64..4.0, 0.25f64..5.0, 0.3f64..3.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn closed_form_matches_quadrature((r, k, p, d) in richards(), t in 0.001f64..2.0) {
        let spec = ReactionSpec::richards(r, k, p).unwrap();
        let exact = Potential::new(spec.clone(), d).unwrap();
        let quad = Potential::new(spec, d).unwrap().quadrature_only();
        let u = t * k;
        let (a, b) = (exact.value(u).unwrap(), quad.value(u).unwrap());
        prop_assert!((a - b).abs() <= 1e-10 * a.abs().max(1e-300) + 1e-14, "{a} vs {b}");
    }

    #[test]
    fn first_derivative_matches_differences((r, k, p, d) in richards(), t in 0.1f64..2.0) {
        let pot = Potential::new(ReactionSpec::richards(r, k, p).unwrap(), d).unwrap();
        let u = t * k;
        let h = 1e-5 * u;
        let fd = (pot.value(u + h).unwrap() - pot.value(u - h).unwrap()) / (2.0 * h);
        let exact = pot.derivative(u, 1).unwrap();
        prop_assert!((fd - exact).abs() <= 1e-6 * exact.abs().max(1e-3));
    }

    #[test]
    fn inversion_undoes_evaluation((r, k, p, d) in richards(), t in 0.0f64..1.0) {
        let pot = Potential::new(ReactionSpec::richards(r, k, p).unwrap(), d).unwrap();
        // increasing branch on [0, K]
        let u = t * k;
        let back = pot.invert(pot.value(u).unwrap(), Branch::IncreasingOnZeroK).unwrap();
        prop_assert!((back - u).abs() <= 1e-10 * k.max(1.0));
        // decreasing branch past K
        let w = k * (1.0 + 2.0 * t);
        let back = pot.invert(pot.value(w).unwrap(), Branch::DecreasingPastK).unwrap();
        prop_assert!((back - w).abs() <= 1e-10 * k.max(1.0));
    }

    #[test]
    fn shifted_potential_is_positive(km in 0.2f64..2.0, ratio in 1.05f64..4.0, t in 0.0f64..1.0, p in 0.3f64..4.0) {
        let kp = km * ratio;
        let problem = PatchProblem::new(
            ReactionSpec::richards(1.0, km, p).unwrap(),
            ReactionSpec::logistic(1.0, kp).unwrap(),
            1.2, 2.0, 1.0, 1.0,
        ).unwrap();
        let eps = 1e-9 * (kp - km);
        let u = km + eps + t * (kp - km - 2.0 * eps);
        prop_assert!(shifted_potential_g(&problem, u).unwrap() > 0.0);
    }

    #[test]
    fn sqrt_identity_matches_differences((r, k, p, d) in richards(), t in 0.05f64..0.95) {
        let pot = Potential::new(ReactionSpec::richards(r, k, p).unwrap(), d).unwrap();
        let u = t * k;
        let h = 2e-3 * u;
        let s = |x: f64| pot.value(x).unwrap().sqrt();
        let fd = (-s(u + 2.0 * h) + 16.0 * s(u + h) - 30.0 * s(u) + 16.0 * s(u - h) - s(u - 2.0 * h))
            / (12.0 * h * h);
        let jet = [
            pot.value(u).unwrap(),
            pot.derivative(u, 1).unwrap(),
            pot.derivative(u, 2).unwrap(),
            pot.derivative(u, 3).unwrap(),
        ];
        let exact = sqrt_derivatives(jet)[2];
        // floor: rounding in the stencil, relative to the scale √F/u² of the terms
        let floor = 1e-9 * s(u) / (u * u);
        prop_assert!((fd - exact).abs() <= 1e-5 * exact.abs() + floor, "{fd} vs {exact}");
    }

    #[test]
    fn quotient_identity_matches_differences((r, k, p, d) in richards(), t in 0.05f64..0.9) {
        let pot = Potential::new(ReactionSpec::richards(r, k, p).unwrap(), d).unwrap();
        let u = t * k;
        let q = |x: f64| {
            let f1 = pot.derivative(x, 1).unwrap();
            pot.value(x).unwrap() / (f1 * f1)
        };
        let h = 1e-3 * u;
        // fourth-order second difference
        let fd = (-q(u + 2.0 * h) + 16.0 * q(u + h) - 30.0 * q(u) + 16.0 * q(u - h) - q(u - 2.0 * h))
            / (12.0 * h * h);
        let jet = [
            pot.value(u).unwrap(),
            pot.derivative(u, 1).unwrap(),
            pot.derivative(u, 2).unwrap(),
            pot.derivative(u, 3).unwrap(),
        ];
        let exact = quotient_second_derivative(jet);
        prop_assert!((fd - exact).abs() <= 1e-5 * exact.abs().max(1e-8 * q(u) / (u * u)), "{fd} vs {exact}");
    }
}
