//! Closed-form flow of a torus-automorphism suspension.
//!
//! The chart is the unit cube with z as the roof coordinate: the field is
//! (0, 0, 1) and crossing z = 1 applies the automorphism to (x, y) mod 1.
//! Positions are piecewise linear in time, the derivative cocycle is the
//! matrix power of the automorphism, and the flow preserves volume.

use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};

use super::{DomainSpec, IntegrationStats, ScanEnd, V3};
use crate::error::Result;

fn wrap2(v: Vector2<f64>) -> Vector2<f64> {
    Vector2::new(v.x.rem_euclid(1.0), v.y.rem_euclid(1.0))
}

/// Advance the chart point by `t` (either sign), applying the map at every
/// roof crossing.
pub(crate) fn advance(
    domain: &DomainSpec,
    fwd: &Matrix2<f64>,
    inv: &Matrix2<f64>,
    x0: &V3,
    t: f64,
) -> V3 {
    let start = domain.wrap(x0);
    let mut xy = Vector2::new(start.x, start.y);
    let mut z = start.z;
    let mut remaining = t;
    if t >= 0.0 {
        loop {
            let to_roof = 1.0 - z;
            if remaining < to_roof {
                z += remaining;
                break;
            }
            remaining -= to_roof;
            xy = wrap2(fwd * xy);
            z = 0.0;
        }
    } else {
        loop {
            // distance down to the floor
            if -remaining <= z {
                z += remaining;
                break;
            }
            remaining += z;
            xy = wrap2(inv * xy);
            z = 1.0;
        }
    }
    Vector3::new(xy.x, xy.y, z.rem_euclid(1.0))
}

/// Derivative cocycle DX_t in the chart trivialization: the automorphism
/// power on (x, y), identity on z.
pub(crate) fn tangent(
    domain: &DomainSpec,
    fwd: &Matrix2<f64>,
    inv: &Matrix2<f64>,
    x0: &V3,
    t: f64,
) -> Matrix3<f64> {
    let z = domain.wrap(x0).z;
    let crossings = (z + t).floor() as i64;
    let mut m2 = Matrix2::identity();
    let step = if crossings >= 0 { fwd } else { inv };
    for _ in 0..crossings.unsigned_abs() {
        m2 = step * m2;
    }
    let mut m = Matrix3::identity();
    m[(0, 0)] = m2[(0, 0)];
    m[(0, 1)] = m2[(0, 1)];
    m[(1, 0)] = m2[(1, 0)];
    m[(1, 1)] = m2[(1, 1)];
    m
}

/// Dense scan mirroring `VectorFieldSpec::scan` for the closed-form flow.
/// Samples land at spacing <= dt_max and at every roof crossing.
pub(crate) fn scan(
    domain: &DomainSpec,
    fwd: &Matrix2<f64>,
    inv: &Matrix2<f64>,
    x0: &V3,
    t_end: f64,
    dt_max: f64,
    mut visit: impl FnMut(f64, &V3) -> bool,
) -> Result<ScanEnd> {
    let start = domain.wrap(x0);
    let mut stats = IntegrationStats::default();
    let here = |xy: &Vector2<f64>, z: f64| Vector3::new(xy.x, xy.y, z);

    let mut xy = Vector2::new(start.x, start.y);
    let mut z = start.z;
    let mut t = 0.0f64;

    if !visit(0.0, &here(&xy, z)) {
        return Ok(ScanEnd { t: 0.0, x: here(&xy, z), stats, halted: true });
    }
    if t_end == 0.0 {
        return Ok(ScanEnd { t: 0.0, x: here(&xy, z), stats, halted: false });
    }
    let dir = t_end.signum();
    let emit_spacing = if dt_max.is_finite() { dt_max } else { f64::MAX };

    loop {
        let remaining = t_end - t;
        if remaining * dir <= 0.0 {
            break;
        }
        // time to the next roof/floor crossing in the travel direction;
        // crossing comparisons must match `advance` exactly
        let to_boundary = if dir > 0.0 { 1.0 - z } else { z };
        let crossing = if dir > 0.0 {
            to_boundary <= remaining.abs()
        } else {
            to_boundary < remaining.abs()
        };
        let seg = to_boundary.min(remaining.abs());
        // dense samples inside this fiber segment
        let mut emitted = 0.0f64;
        while emitted + emit_spacing < seg {
            emitted += emit_spacing;
            let zt = z + dir * emitted;
            if !visit(t + dir * emitted, &here(&xy, zt)) {
                let p = here(&xy, zt);
                return Ok(ScanEnd { t: t + dir * emitted, x: p, stats, halted: true });
            }
        }
        t += dir * seg;
        stats.steps += 1;
        if crossing {
            // forward: the roof point is represented as (A(x,y), 0);
            // backward: the floor point keeps its own (x,y) at z = 0
            if dir > 0.0 {
                xy = wrap2(fwd * xy);
            }
            z = 0.0;
            if !visit(t, &here(&xy, z)) {
                return Ok(ScanEnd { t, x: here(&xy, z), stats, halted: true });
            }
            if (t_end - t) * dir <= 0.0 {
                return Ok(ScanEnd { t, x: here(&xy, z), stats, halted: false });
            }
            if dir < 0.0 {
                // continue below the floor on the mapped representative
                xy = wrap2(inv * xy);
                z = 1.0;
            }
        } else {
            // reached t_end inside the fiber
            z += dir * seg;
            let p = here(&xy, z.rem_euclid(1.0));
            if !visit(t, &p) {
                return Ok(ScanEnd { t, x: p, stats, halted: true });
            }
            break;
        }
    }
    Ok(ScanEnd { t: t_end, x: here(&xy, z.rem_euclid(1.0)), stats, halted: false })
}
