//! Property tests for the library's structural invariants.

use std::collections::HashMap;

use nalgebra::{Vector2, Vector3};
use proptest::prelude::*;

use flow3::dissipative::wilson_interval;
use flow3::expr;
use flow3::flowcore::{builtin, DomainSpec};
use flow3::linalg::{eig_from_trace_det, spectral_norm2};
use flow3::splitting::graph_angle;
use flow3::surgery::{choose_budget, sink_via_shear, SaddleData};
use flow3::VectorFieldSpec;

fn gentle_torus_field() -> VectorFieldSpec {
    let tau = 2.0 * std::f64::consts::PI;
    VectorFieldSpec::analytic(
        "gentle",
        DomainSpec::torus([1.0, 1.0, 1.0]).unwrap(),
        move |x: &Vector3<f64>| {
            Vector3::new(
                0.30 + 0.08 * (tau * x.y).sin(),
                0.25 + 0.08 * (tau * x.z).cos(),
                0.35 + 0.08 * (tau * x.x).sin(),
            )
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// Flow composition and time reversal on a smooth torus field.
    #[test]
    fn flow_composition_and_reversal(
        x in 0.0f64..1.0, y in 0.0f64..1.0, z in 0.0f64..1.0,
        s in 0.1f64..1.5, t in 0.1f64..1.5,
    ) {
        let spec = gentle_torus_field();
        let p = Vector3::new(x, y, z);
        let whole = spec.advance(&p, s + t, 1e-10).unwrap();
        let mid = spec.advance(&p, s, 1e-10).unwrap();
        let two = spec.advance(&mid, t, 1e-10).unwrap();
        prop_assert!(spec.domain.distance(&whole, &two) < 1e-8);
        let back = spec.advance(&whole, -(s + t), 1e-10).unwrap();
        prop_assert!(spec.domain.distance(&back, &p) < 1e-8);
    }

    /// The fundamental matrix keeps positive determinant.
    #[test]
    fn fundamental_matrix_orientation(
        x in 0.0f64..1.0, y in 0.0f64..1.0, z in 0.0f64..1.0,
        t in 0.2f64..2.0,
    ) {
        let spec = gentle_torus_field();
        let (_, tan) = spec.flow_with_tangent(&Vector3::new(x, y, z), t, 1e-10).unwrap();
        prop_assert!(tan.matrix.determinant() > 0.0);
    }
}

proptest! {
    /// Eigenvalues from trace/determinant satisfy the characteristic
    /// polynomial and the modulus ordering.
    #[test]
    fn eig_solves_characteristic_polynomial(tr in -50.0f64..50.0, det in -25.0f64..25.0) {
        let (a, b) = eig_from_trace_det(tr, det);
        prop_assert!(a.norm() <= b.norm() + 1e-12);
        for e in [a, b] {
            let p = e * e - e * tr + num_complex::Complex64::new(det, 0.0);
            let scale = 1.0 + tr.abs().powi(2) + det.abs();
            prop_assert!(p.norm() <= 1e-10 * scale, "residual {} for ({tr}, {det})", p.norm());
        }
        prop_assert!(((a * b).re - det).abs() <= 1e-10 * (1.0 + det.abs()));
    }

    /// |tan| symmetry of the 2D graph angle.
    #[test]
    fn graph_angle_symmetry(th in 0.0f64..6.283, ph in 0.0f64..6.283) {
        let e = Vector2::new(th.cos(), th.sin());
        let f = Vector2::new(ph.cos(), ph.sin());
        match (graph_angle(&e, &f), graph_angle(&f, &e)) {
            (Ok(a), Ok(b)) => prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a)),
            (Err(_), Err(_)) => {}
            // near-perpendicular pairs can land on either side of the
            // representability boundary
            (Ok(a), Err(_)) | (Err(_), Ok(a)) => prop_assert!(a > 1e12),
        }
    }

    /// Derived budgets always satisfy their own inequalities.
    #[test]
    fn budgets_feasible(
        c in 0.2f64..100.0,
        frac in 0.005f64..1.0,
        rate in 0.02f64..0.995,
        alpha in 0.005f64..50.0,
    ) {
        let b = choose_budget(c, frac * c, rate, alpha).unwrap();
        prop_assert!(b.valid());
    }

    /// Shear surgery: traceless, determinant λμ, contracting modulus.
    #[test]
    fn shear_surgery_exact(
        lambda in -0.95f64..0.95,
        mu_mag in 1.05f64..6.0,
        neg in any::<bool>(),
        gamma in 1e-3f64..2.0,
    ) {
        prop_assume!(lambda.abs() > 1e-3);
        let mu = if neg { -mu_mag } else { mu_mag };
        prop_assume!((lambda * mu).abs() < 0.98);
        let data = SaddleData::new(lambda, mu, gamma, 1.0).unwrap();
        let r = sink_via_shear(&data).unwrap();
        prop_assert!(r.trace.abs() <= 1e-12);
        prop_assert!((r.det - lambda * mu).abs() <= 1e-12);
        prop_assert!(r.modulus < 1.0);
    }

    /// Wilson intervals bracket the point estimate inside [0, 1].
    #[test]
    fn wilson_brackets_estimate(hits in 0u64..1000, extra in 0u64..1000) {
        let n = hits + extra;
        prop_assume!(n > 0);
        let (lo, hi) = wilson_interval(hits, n);
        let p = hits as f64 / n as f64;
        prop_assert!((0.0..=1.0).contains(&lo));
        prop_assert!((0.0..=1.0).contains(&hi));
        prop_assert!(lo <= p + 1e-12 && p <= hi + 1e-12);
    }

    /// Numeric literals round-trip through the expression parser.
    #[test]
    fn expression_literals_round_trip(v in -1e6f64..1e6) {
        let src = format!("{v:?}");
        let e = expr::parse(&src, &HashMap::new()).unwrap();
        let got = e.eval(0.0, 0.0, 0.0);
        prop_assert!((got - v).abs() <= 1e-12 * (1.0 + v.abs()));
    }

    /// Spectral norm dominates the matrix action on unit vectors.
    #[test]
    fn spectral_norm_dominates(a in -5.0f64..5.0, b in -5.0f64..5.0, c in -5.0f64..5.0, d in -5.0f64..5.0, th in 0.0f64..6.283) {
        let m = nalgebra::Matrix2::new(a, b, c, d);
        let v = Vector2::new(th.cos(), th.sin());
        prop_assert!((m * v).norm() <= spectral_norm2(&m) + 1e-10);
    }
}

#[test]
fn builtin_registry_names() {
    for name in flow3::flowcore::builtin_names() {
        let spec = builtin(name, &Default::default()).unwrap();
        assert_eq!(&spec.name, name);
    }
    assert!(builtin("no-such-flow", &Default::default()).is_err());
}
