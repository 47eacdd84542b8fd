//! Builtin flow registry and expression-defined fields.
//!
//! Builtins:
//! - `rotation`: constant translation field on the unit torus, parameters
//!   `vx`, `vy`, `vz` (defaults 1, √2, √3 — an irrational slope).
//! - `cylinder`: planar limit-cycle field with exponential z-dynamics,
//!   ẋ = x(1−r²)−y, ẏ = y(1−r²)+x, ż = c·z, on a box with a shell-shaped
//!   trapping region around the unit circle. Parameter `c` (default 1).
//! - `catmap-suspension`: suspension of the hyperbolic torus automorphism
//!   [[2,1],[1,1]] with unit roof, evaluated in closed form.

use std::collections::{BTreeMap, HashMap};

use nalgebra::{Matrix2, Matrix3, Vector3};

use super::{DomainSpec, FieldKind, VectorFieldSpec, V3};
use crate::error::{FlowError, Result};
use crate::expr::{self, Expr};
use crate::region::RegionSpec;

#[derive(Debug, thiserror::Error)]
pub enum BuiltinError {
    #[error("unknown builtin flow `{0}`")]
    Unknown(String),
}

pub fn builtin_names() -> &'static [&'static str] {
    &["rotation", "cylinder", "catmap-suspension"]
}

/// Construct a builtin flow by name with a parameter map.
pub fn builtin(name: &str, params: &BTreeMap<String, f64>) -> Result<VectorFieldSpec> {
    match name {
        "rotation" => Ok(rotation(params)),
        "cylinder" => Ok(cylinder(params)),
        "catmap-suspension" => Ok(catmap_suspension(params)),
        other => Err(FlowError::Config(format!("unknown builtin flow `{other}`"))),
    }
}

fn get(params: &BTreeMap<String, f64>, key: &str, default: f64) -> f64 {
    params.get(key).copied().unwrap_or(default)
}

fn rotation(params: &BTreeMap<String, f64>) -> VectorFieldSpec {
    let v = V3::new(
        get(params, "vx", 1.0),
        get(params, "vy", 2.0f64.sqrt()),
        get(params, "vz", 3.0f64.sqrt()),
    );
    let mut spec = VectorFieldSpec::analytic(
        "rotation",
        DomainSpec::torus([1.0, 1.0, 1.0]).expect("unit torus"),
        move |_| v,
    )
    .with_jacobian(|_| Matrix3::zeros())
    .with_divergence(|_| 0.0);
    spec.params = params.clone();
    if spec.params.is_empty() {
        spec.params.insert("vx".into(), v.x);
        spec.params.insert("vy".into(), v.y);
        spec.params.insert("vz".into(), v.z);
    }
    spec
}

fn cylinder(params: &BTreeMap<String, f64>) -> VectorFieldSpec {
    let c = get(params, "c", 1.0);
    let field = move |x: &V3| {
        let r2 = x.x * x.x + x.y * x.y;
        V3::new(x.x * (1.0 - r2) - x.y, x.y * (1.0 - r2) + x.x, c * x.z)
    };
    let jac = move |x: &V3| {
        let (a, b) = (x.x, x.y);
        Matrix3::new(
            1.0 - 3.0 * a * a - b * b,
            -2.0 * a * b - 1.0,
            0.0,
            -2.0 * a * b + 1.0,
            1.0 - a * a - 3.0 * b * b,
            0.0,
            0.0,
            0.0,
            c,
        )
    };
    let div = move |x: &V3| 2.0 - 4.0 * (x.x * x.x + x.y * x.y) + c;
    // generous z-walls: with c > 0 the vertical transient of a shooting seed
    // must stay inside the box for one full revolution
    let mut spec = VectorFieldSpec::analytic(
        "cylinder",
        DomainSpec::boxed([-2.0, -2.0, -40.0], [2.0, 2.0, 40.0]).expect("cylinder box"),
        field,
    )
    .with_jacobian(jac)
    .with_divergence(div)
    .with_trapping(RegionSpec::Shell { r_min: 0.5, r_max: 1.5, z_abs: 0.5 });
    spec.params.insert("c".into(), c);
    spec
}

fn catmap_suspension(params: &BTreeMap<String, f64>) -> VectorFieldSpec {
    // integer-entry automorphism, determinant +1
    let a = get(params, "a", 2.0);
    let b = get(params, "b", 1.0);
    let c = get(params, "c", 1.0);
    let d = get(params, "d", 1.0);
    let fwd = Matrix2::new(a, b, c, d);
    let det = a * d - b * c;
    let inv = Matrix2::new(d, -b, -c, a) / det;
    let mut spec = VectorFieldSpec {
        name: "catmap-suspension".into(),
        domain: DomainSpec::torus([1.0, 1.0, 1.0]).expect("unit torus"),
        trapping: None,
        params: BTreeMap::new(),
        kind: FieldKind::Suspension { fwd, inv },
    };
    for (k, v) in [("a", a), ("b", b), ("c", c), ("d", d)] {
        spec.params.insert(k.into(), v);
    }
    spec
}

/// Build a field from three component expressions over x, y, z and named
/// constants. The Jacobian falls back to finite differences.
pub fn from_expressions(
    name: impl Into<String>,
    components: [&str; 3],
    constants: &HashMap<String, f64>,
    domain: DomainSpec,
) -> std::result::Result<VectorFieldSpec, expr::ParseError> {
    let fx: Expr = expr::parse(components[0], constants)?;
    let fy: Expr = expr::parse(components[1], constants)?;
    let fz: Expr = expr::parse(components[2], constants)?;
    Ok(VectorFieldSpec::analytic(name, domain, move |x: &V3| {
        Vector3::new(
            fx.eval(x.x, x.y, x.z),
            fy.eval(x.x, x.y, x.z),
            fz.eval(x.x, x.y, x.z),
        )
    }))
}
