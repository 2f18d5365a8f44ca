use num_complex::Complex64;
use proptest::prelude::*;
use tefree::symbol::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Points on the three normalized contours, away from the real axis for Z1.
fn zone_point() -> impl Strategy<Value = Complex64> {
    prop_oneof![
        (prop_oneof![-5.0f64..-1e-3, 1e-3f64..5.0]).prop_map(|t| c(1.0, t)),
        (-5.0f64..5.0).prop_map(|t| c(-1.0, t)),
        (-5.0f64..5.0, prop_oneof![Just(-1.0), Just(1.0)]).prop_map(|(s, t)| c(s, t)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn rho_solves_its_quadratic(z in zone_point(), r0 in 0.0f64..400.0, m in 0.1f64..8.0) {
        let p = rho(r0, m, z).unwrap();
        let scale = r0 + m * z.norm();
        prop_assert!((p * p + r0 - m * z).norm() <= 1e-14 * scale.max(1.0));
        prop_assert!(p.im > 0.0);
    }

    #[test]
    fn rho_modulus_grows_with_r0_on_the_second_zone(t in -5.0f64..5.0, a in 0.0f64..100.0, d in 0.0f64..100.0, m in 0.1f64..8.0) {
        let z = c(-1.0, t);
        let lo = rho(a, m, z).unwrap().norm();
        let hi = rho(a + d, m, z).unwrap().norm();
        prop_assert!(hi >= lo * (1.0 - 1e-15));
        let quartic = (a - m * z.re).powi(2) + (m * z.im).powi(2);
        prop_assert!((lo.powi(4) - quartic).abs() <= 1e-12 * quartic);
    }

    #[test]
    fn imaginary_part_lower_bound(z in zone_point(), r0 in 0.0f64..400.0, m in 0.1f64..8.0) {
        prop_assume!(z.im != 0.0);
        let p = rho(r0, m, z).unwrap();
        prop_assert!(2.0 * p.im * p.norm() >= m * z.im.abs() * (1.0 - 1e-12));
    }

    #[test]
    fn factored_inversion_matches_direct(t in -3.0f64..3.0, r0 in 0.0f64..50.0, c1 in 0.5f64..3.0, n1 in 0.5f64..3.0) {
        let p = MediaAt { c1, n1, c2: 1.0, n2: 1.0 };
        prop_assume!((c1 * n1 - 1.0).abs() > 0.05);
        let z = c(-1.0, t);
        let direct = c1 * rho(r0, p.m1(), z).unwrap() - rho(r0, p.m2(), z).unwrap();
        let fact = inversion_factored(&p, r0, z).unwrap();
        prop_assert!((direct - fact).norm() <= 1e-10 * direct.norm().max(1e-3));
    }

    #[test]
    fn kappa_derivative_matches_differences(t in -2.0f64..2.0, r0 in 0.0f64..30.0) {
        let p = MediaAt { c1: 1.0, n1: 4.0, c2: 2.0, n2: 1.0 };
        let z = c(-1.0, t);
        let d = 1e-5;
        let k = |w: Complex64| kappa_at(&p, r0, w).unwrap();
        let fd = (k(z + c(0.0, d)) - k(z - c(0.0, d))) / c(0.0, 2.0 * d);
        let exact = kappa_derivative(&p, r0, z).unwrap();
        prop_assert!((fd - exact).norm() <= 1e-8 * exact.norm().max(1e-2));
    }
}

#[test]
fn japanese_bracket_powers_have_stable_class_norms() {
    let params = ClassParams { ell: 2.0, delta1: 0.0, delta2: 1.0, max_order: 3 };
    let eval = |g: &GridSpec| {
        let a = SymbolGrid::from_fn(1.0, *g, |_, xi| c(japanese(xi).powi(2), 0.0));
        let mu = SymbolGrid::from_fn(1.0, *g, |_, xi| c(japanese(xi), 0.0));
        class_norm_on_grid(&a, &mu, &params).unwrap().0
    };
    let g = GridSpec::new(16, 257, 30.0).unwrap();
    let (a, b) = (eval(&g), eval(&g.refined()));
    assert!(a.is_finite() && (a - b).abs() < 1e-3 * a, "{a} {b}");
}

#[test]
fn inversion_identity_on_a_variable_medium() {
    let mp = MediumPair {
        c1: BoundaryFunction::constant(2.0),
        n1: BoundaryFunction { mean: 4.0, cos: vec![0.5], sin: vec![] },
        ..MediumPair::constant(2.0, 4.0, 1.0, 1.0)
    };
    let geom = BoundaryGeometry::circle(1.0);
    let grid = GridSpec::new(32, 129, 10.0).unwrap();
    let sp = SpectralPoint::new(0.1, c(-1.0, 0.3), Zone::Z2, 0.0).unwrap();
    assert!(inversion_identity_defect(&mp, &sp, &geom, &grid).unwrap() <= 1e-12);
}
