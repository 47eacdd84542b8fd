//! Shared test fixtures: the builtin flows plus gentle trigonometric torus
//! fields with analytic derivatives.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::Matrix3;

use super::{builtin, DomainSpec, VectorFieldSpec, V3};

pub fn rotation() -> VectorFieldSpec {
    builtin("rotation", &BTreeMap::new()).unwrap()
}

pub fn cylinder(c: f64) -> VectorFieldSpec {
    let mut p = BTreeMap::new();
    p.insert("c".to_string(), c);
    builtin("cylinder", &p).unwrap()
}

pub fn catmap() -> VectorFieldSpec {
    builtin("catmap-suspension", &BTreeMap::new()).unwrap()
}

/// Gentle trigonometric torus field with analytic Jacobian; zero divergence.
pub fn trig_field() -> VectorFieldSpec {
    let tau = 2.0 * PI;
    VectorFieldSpec::analytic(
        "trig",
        DomainSpec::torus([1.0, 1.0, 1.0]).unwrap(),
        move |x: &V3| {
            V3::new(
                0.30 + 0.10 * (tau * x.y).sin(),
                0.25 + 0.10 * (tau * x.z).cos(),
                0.35 + 0.10 * (tau * x.x).sin(),
            )
        },
    )
    .with_jacobian(move |x: &V3| {
        Matrix3::new(
            0.0,
            0.10 * tau * (tau * x.y).cos(),
            0.0,
            0.0,
            0.0,
            -0.10 * tau * (tau * x.z).sin(),
            0.10 * tau * (tau * x.x).cos(),
            0.0,
            0.0,
        )
    })
    .with_divergence(|_| 0.0)
}

/// Torus field with sign-changing divergence (mean zero over the torus).
pub fn trig_field_div() -> VectorFieldSpec {
    let tau = 2.0 * PI;
    VectorFieldSpec::analytic(
        "trig-div",
        DomainSpec::torus([1.0, 1.0, 1.0]).unwrap(),
        move |x: &V3| {
            V3::new(
                0.30 + 0.06 * (tau * x.x).sin() + 0.08 * (tau * x.y).sin(),
                0.25 + 0.05 * (tau * x.y).cos(),
                0.35 + 0.07 * (tau * x.z).sin() + 0.06 * (tau * x.x).cos(),
            )
        },
    )
    .with_jacobian(move |x: &V3| {
        Matrix3::new(
            0.06 * tau * (tau * x.x).cos(),
            0.08 * tau * (tau * x.y).cos(),
            0.0,
            0.0,
            -0.05 * tau * (tau * x.y).sin(),
            0.0,
            -0.06 * tau * (tau * x.x).sin(),
            0.0,
            0.07 * tau * (tau * x.z).cos(),
        )
    })
    .with_divergence(move |x: &V3| {
        0.06 * tau * (tau * x.x).cos() - 0.05 * tau * (tau * x.y).sin()
            + 0.07 * tau * (tau * x.z).cos()
    })
}

