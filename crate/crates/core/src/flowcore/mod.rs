//! Vector fields, trajectories, and the variational machinery.
//!
//! A [`VectorFieldSpec`] bundles a nonsingular field with its domain and
//! (optionally) analytic Jacobian and divergence. Trajectories, fundamental
//! matrices and the Liouville log-determinant are integrated from it, all
//! under one adaptive error controller. Suspension flows (constant vertical
//! field over a torus automorphism) are evaluated in closed form.

mod builtins;
pub mod integrator;
mod suspension;

pub use builtins::{builtin, builtin_names, from_expressions, BuiltinError};
pub use integrator::IntegrationStats;

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{Matrix2, Matrix3, Vector3};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{FlowError, Result};
use crate::region::RegionSpec;
use integrator::{Integrator, Step, StepControl};

pub type V3 = Vector3<f64>;
pub type M3 = Matrix3<f64>;

/// Field norms below this are treated as singularities.
pub const SINGULARITY_FLOOR: f64 = 1e-12;

/// Default spacing bound for dense trajectory samples (time units).
pub const DENSE_SPACING: f64 = 0.1;

/// Phase-space domain: a flat 3-torus or an axis-aligned box. Torus axes all
/// wrap; box axes never do.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DomainSpec {
    Torus { periods: [f64; 3] },
    Box { min: [f64; 3], max: [f64; 3] },
}

impl DomainSpec {
    pub fn torus(periods: [f64; 3]) -> Result<Self> {
        if periods.iter().any(|&p| !(p > 0.0)) {
            return Err(FlowError::Config("torus periods must be strictly positive".into()));
        }
        Ok(DomainSpec::Torus { periods })
    }

    pub fn boxed(min: [f64; 3], max: [f64; 3]) -> Result<Self> {
        if (0..3).any(|i| !(max[i] > min[i])) {
            return Err(FlowError::Config("box bounds must have positive volume".into()));
        }
        Ok(DomainSpec::Box { min, max })
    }

    /// Reduce a point to the fundamental domain (identity on boxes).
    pub fn wrap(&self, x: &V3) -> V3 {
        match self {
            DomainSpec::Torus { periods } => {
                V3::new(x.x.rem_euclid(periods[0]), x.y.rem_euclid(periods[1]), x.z.rem_euclid(periods[2]))
            }
            DomainSpec::Box { .. } => *x,
        }
    }

    pub fn contains(&self, x: &V3) -> bool {
        match self {
            DomainSpec::Torus { .. } => true,
            DomainSpec::Box { min, max } => (0..3).all(|i| x[i] >= min[i] && x[i] <= max[i]),
        }
    }

    /// Shortest displacement from `x` to `y` under the domain metric.
    pub fn displacement(&self, x: &V3, y: &V3) -> V3 {
        match self {
            DomainSpec::Torus { periods } => {
                let mut d = y - x;
                for i in 0..3 {
                    let p = periods[i];
                    d[i] = d[i].rem_euclid(p);
                    if d[i] > p / 2.0 {
                        d[i] -= p;
                    }
                }
                d
            }
            DomainSpec::Box { .. } => y - x,
        }
    }

    /// Wrapped distance.
    pub fn distance(&self, x: &V3, y: &V3) -> f64 {
        self.displacement(x, y).norm()
    }

    /// Bounding box of the fundamental domain.
    pub fn bounds(&self) -> ([f64; 3], [f64; 3]) {
        match self {
            DomainSpec::Torus { periods } => ([0.0; 3], *periods),
            DomainSpec::Box { min, max } => (*min, *max),
        }
    }

    pub fn volume(&self) -> f64 {
        let (lo, hi) = self.bounds();
        (0..3).map(|i| hi[i] - lo[i]).product()
    }
}

type FieldFn = Arc<dyn Fn(&V3) -> V3 + Send + Sync>;
type JacFn = Arc<dyn Fn(&V3) -> M3 + Send + Sync>;
type DivFn = Arc<dyn Fn(&V3) -> f64 + Send + Sync>;

#[derive(Clone)]
pub(crate) enum FieldKind {
    Analytic {
        field: FieldFn,
        jacobian: Option<JacFn>,
        divergence: Option<DivFn>,
    },
    /// Unit-speed vertical field over a torus automorphism with unit roof.
    /// The chart is [0,1)^3 and crossing the roof applies the map to (x, y).
    Suspension { fwd: Matrix2<f64>, inv: Matrix2<f64> },
}

/// A nonsingular 3D vector field with its domain.
#[derive(Clone)]
pub struct VectorFieldSpec {
    pub name: String,
    pub domain: DomainSpec,
    /// Optional compact region the analysis treats as the invariant core of a
    /// box domain; Monte Carlo sampling is restricted to it.
    pub trapping: Option<RegionSpec>,
    /// Named parameters for reporting/reproducibility.
    pub params: BTreeMap<String, f64>,
    pub(crate) kind: FieldKind,
}

impl std::fmt::Debug for VectorFieldSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VectorFieldSpec")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("params", &self.params)
            .finish()
    }
}

/// A dense-sampled trajectory segment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectorySegment {
    pub start: [f64; 3],
    pub end: [f64; 3],
    pub elapsed: f64,
    /// (time, wrapped position); times strictly monotone from 0 to `elapsed`.
    pub samples: Vec<(f64, [f64; 3])>,
    pub stats: IntegrationStats,
}

impl TrajectorySegment {
    pub fn end_point(&self) -> V3 {
        V3::new(self.end[0], self.end[1], self.end[2])
    }
}

/// Fundamental matrix of the variational equation along a trajectory,
/// together with the Liouville log-determinant accumulator.
#[derive(Debug, Clone)]
pub struct TangentState {
    pub base: V3,
    pub elapsed: f64,
    pub matrix: M3,
    pub logdet: f64,
}

/// Endpoint of a dense scan (possibly halted early by the visitor).
#[derive(Debug, Clone)]
pub struct ScanEnd {
    pub t: f64,
    pub x: V3,
    pub stats: IntegrationStats,
    pub halted: bool,
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0 && tol <= 1e-3) {
        return Err(FlowError::Config(format!("tolerance {tol} outside (0, 1e-3]")));
    }
    Ok(())
}

impl VectorFieldSpec {
    pub fn analytic(
        name: impl Into<String>,
        domain: DomainSpec,
        field: impl Fn(&V3) -> V3 + Send + Sync + 'static,
    ) -> Self {
        VectorFieldSpec {
            name: name.into(),
            domain,
            trapping: None,
            params: BTreeMap::new(),
            kind: FieldKind::Analytic { field: Arc::new(field), jacobian: None, divergence: None },
        }
    }

    pub fn with_jacobian(mut self, jac: impl Fn(&V3) -> M3 + Send + Sync + 'static) -> Self {
        if let FieldKind::Analytic { jacobian, .. } = &mut self.kind {
            *jacobian = Some(Arc::new(jac));
        }
        self
    }

    pub fn with_divergence(mut self, div: impl Fn(&V3) -> f64 + Send + Sync + 'static) -> Self {
        if let FieldKind::Analytic { divergence, .. } = &mut self.kind {
            *divergence = Some(Arc::new(div));
        }
        self
    }

    pub fn with_trapping(mut self, region: RegionSpec) -> Self {
        self.trapping = Some(region);
        self
    }

    /// Raw field value at the wrapped point, without domain/singularity checks.
    fn field_raw(&self, x: &V3) -> V3 {
        match &self.kind {
            FieldKind::Analytic { field, .. } => field(&self.domain.wrap(x)),
            FieldKind::Suspension { .. } => V3::new(0.0, 0.0, 1.0),
        }
    }

    /// Evaluate X(x). Errors if x is outside the domain or the field norm is
    /// below the singularity floor.
    pub fn evaluate_field(&self, x: &V3) -> Result<V3> {
        let xw = self.domain.wrap(x);
        if !self.domain.contains(&xw) {
            return Err(FlowError::out_of_domain(&xw, 0.0));
        }
        let v = self.field_raw(&xw);
        let n = v.norm();
        if n < SINGULARITY_FLOOR {
            return Err(FlowError::singularity(&xw, n));
        }
        Ok(v)
    }

    /// Jacobian of the field: analytic if provided, otherwise central finite
    /// differences with step 1e-5 * (1 + |x|).
    pub fn jacobian_at(&self, x: &V3) -> Result<M3> {
        let xw = self.domain.wrap(x);
        if !self.domain.contains(&xw) {
            return Err(FlowError::out_of_domain(&xw, 0.0));
        }
        match &self.kind {
            FieldKind::Analytic { jacobian: Some(j), .. } => Ok(j(&xw)),
            FieldKind::Analytic { .. } => Ok(self.fd_jacobian(&xw)),
            FieldKind::Suspension { .. } => Ok(M3::zeros()),
        }
    }

    fn fd_jacobian(&self, x: &V3) -> M3 {
        let h = 1e-5 * (1.0 + x.norm());
        let mut j = M3::zeros();
        for col in 0..3 {
            let mut xp = *x;
            let mut xm = *x;
            xp[col] += h;
            xm[col] -= h;
            let d = (self.field_raw(&xp) - self.field_raw(&xm)) / (2.0 * h);
            for row in 0..3 {
                j[(row, col)] = d[row];
            }
        }
        j
    }

    /// div X(x): analytic if provided, else the trace of the Jacobian
    /// (finite differences when no analytic Jacobian exists either).
    pub fn divergence_at(&self, x: &V3) -> Result<f64> {
        let xw = self.domain.wrap(x);
        if !self.domain.contains(&xw) {
            return Err(FlowError::out_of_domain(&xw, 0.0));
        }
        match &self.kind {
            FieldKind::Analytic { divergence: Some(d), .. } => Ok(d(&xw)),
            FieldKind::Suspension { .. } => Ok(0.0),
            _ => Ok(self.jacobian_at(&xw)?.trace()),
        }
    }

    /// Stream wrapped positions along the trajectory at spacing <= dt_max.
    /// `visit(t, x)` returning false halts the scan. The visitor always sees
    /// t = 0 first and the exact endpoint last (unless it halts or the
    /// trajectory errors out).
    pub fn scan(
        &self,
        x: &V3,
        t_end: f64,
        tol: f64,
        dt_max: f64,
        visit: impl FnMut(f64, &V3) -> bool,
    ) -> Result<ScanEnd> {
        check_tol(tol)?;
        if !t_end.is_finite() {
            return Err(FlowError::Config("flow time must be finite".into()));
        }
        match &self.kind {
            FieldKind::Analytic { .. } => self.scan_analytic(x, t_end, tol, dt_max, visit),
            FieldKind::Suspension { fwd, inv } => {
                suspension::scan(&self.domain, fwd, inv, x, t_end, dt_max, visit)
            }
        }
    }

    fn scan_analytic(
        &self,
        x0: &V3,
        t_end: f64,
        tol: f64,
        dt_max: f64,
        mut visit: impl FnMut(f64, &V3) -> bool,
    ) -> Result<ScanEnd> {
        let start = self.domain.wrap(x0);
        self.evaluate_field(&start)?;
        if !visit(0.0, &start) {
            return Ok(ScanEnd { t: 0.0, x: start, stats: IntegrationStats::default(), halted: true });
        }
        if t_end == 0.0 {
            return Ok(ScanEnd { t: 0.0, x: start, stats: IntegrationStats::default(), halted: false });
        }

        let dir = t_end.signum();
        // cap steps at the sample spacing so emitted samples sit at (or next
        // to) step endpoints and inherit the integrator's accuracy rather
        // than the cubic interpolant's
        let mut integ = Integrator::with_tol(tol);
        integ.h_max = dt_max.clamp(1e-3, integ.h_max);
        let mut failure: Option<FlowError> = None;
        let mut halted_by_visitor = false;
        let mut next_sample = dt_max * dir;

        let rhs = |_t: f64, y: &V3| self.field_raw(y);
        let run = integ.run(rhs, 0.0, t_end, start, |step: &Step<3>| {
            // singularity screen at step endpoints
            let speed = step.f1.norm();
            if speed < SINGULARITY_FLOOR {
                failure = Some(FlowError::singularity(&self.domain.wrap(&step.y1), speed));
                return StepControl::Halt;
            }
            // domain exit (box domains only)
            if !self.domain.contains(&step.y1) {
                let t_exit = refine_exit(&self.domain, step);
                let p = step.interp(t_exit);
                failure = Some(FlowError::out_of_domain(&p, t_exit));
                return StepControl::Halt;
            }
            // dense samples strictly inside the step
            while (next_sample - step.t1) * dir < 0.0 {
                if (next_sample - step.t0) * dir > 0.0 {
                    let p = self.domain.wrap(&step.interp(next_sample));
                    if !visit(next_sample, &p) {
                        halted_by_visitor = true;
                        return StepControl::Halt;
                    }
                }
                next_sample += dt_max * dir;
            }
            // always emit the step endpoint
            let p = self.domain.wrap(&step.y1);
            if (next_sample - step.t1) * dir <= 0.0 {
                next_sample = step.t1 + dt_max * dir;
            }
            if !visit(step.t1, &p) {
                halted_by_visitor = true;
                return StepControl::Halt;
            }
            StepControl::Continue
        })?;

        if let Some(e) = failure {
            return Err(e);
        }
        Ok(ScanEnd {
            t: run.t,
            x: self.domain.wrap(&run.y),
            stats: run.stats,
            halted: halted_by_visitor,
        })
    }

    /// Integrate the flow and return a dense-sampled trajectory segment.
    pub fn flow(&self, x: &V3, t: f64, tol: f64) -> Result<TrajectorySegment> {
        let mut samples = Vec::new();
        let end = self.scan(x, t, tol, DENSE_SPACING, |tt, p| {
            samples.push((tt, [p.x, p.y, p.z]));
            true
        })?;
        Ok(TrajectorySegment {
            start: {
                let s = self.domain.wrap(x);
                [s.x, s.y, s.z]
            },
            end: [end.x.x, end.x.y, end.x.z],
            elapsed: end.t,
            samples,
            stats: end.stats,
        })
    }

    /// Endpoint of the flow map only (no dense samples).
    pub fn advance(&self, x: &V3, dt: f64, tol: f64) -> Result<V3> {
        check_tol(tol)?;
        match &self.kind {
            FieldKind::Suspension { fwd, inv } => {
                Ok(suspension::advance(&self.domain, fwd, inv, x, dt))
            }
            FieldKind::Analytic { .. } => {
                let end = self.scan_analytic(x, dt, tol, f64::INFINITY, |_, _| true)?;
                Ok(end.x)
            }
        }
    }

    /// Integrate the flow together with the variational equation and the
    /// Liouville log-determinant. The fundamental matrix lives in the flat
    /// trivialization of the tangent bundle.
    pub fn flow_with_tangent(&self, x: &V3, t: f64, tol: f64) -> Result<(TrajectorySegment, TangentState)> {
        check_tol(tol)?;
        if let FieldKind::Suspension { fwd, inv } = &self.kind {
            let seg = {
                let mut samples = Vec::new();
                let end = suspension::scan(&self.domain, fwd, inv, x, t, DENSE_SPACING, |tt, p| {
                    samples.push((tt, [p.x, p.y, p.z]));
                    true
                })?;
                TrajectorySegment {
                    start: {
                        let s = self.domain.wrap(x);
                        [s.x, s.y, s.z]
                    },
                    end: [end.x.x, end.x.y, end.x.z],
                    elapsed: end.t,
                    samples,
                    stats: end.stats,
                }
            };
            let matrix = suspension::tangent(&self.domain, fwd, inv, x, t);
            let tangent = TangentState { base: self.domain.wrap(x), elapsed: t, matrix, logdet: 0.0 };
            return Ok((seg, tangent));
        }

        // augmented state: [position(3) | fundamental matrix, column-major (9) | logdet(1)]
        let start = self.domain.wrap(x);
        self.evaluate_field(&start)?;
        let mut y0 = nalgebra::SVector::<f64, 13>::zeros();
        for i in 0..3 {
            y0[i] = start[i];
        }
        y0[3] = 1.0;
        y0[7] = 1.0;
        y0[11] = 1.0;

        let rhs = |_t: f64, y: &nalgebra::SVector<f64, 13>| {
            let pos = V3::new(y[0], y[1], y[2]);
            let j = match &self.kind {
                FieldKind::Analytic { jacobian: Some(jac), .. } => jac(&self.domain.wrap(&pos)),
                _ => self.fd_jacobian(&self.domain.wrap(&pos)),
            };
            let f = self.field_raw(&pos);
            let m = M3::from_column_slice(&y.as_slice()[3..12]);
            let dm = j * m;
            let mut dy = nalgebra::SVector::<f64, 13>::zeros();
            for i in 0..3 {
                dy[i] = f[i];
            }
            dy.as_mut_slice()[3..12].copy_from_slice(dm.as_slice());
            dy[12] = j.trace();
            dy
        };

        let integ = Integrator::with_tol(tol);
        let mut failure: Option<FlowError> = None;
        let mut samples: Vec<(f64, [f64; 3])> = vec![(0.0, [start.x, start.y, start.z])];
        let dir = if t == 0.0 { 1.0 } else { t.signum() };
        let mut next_sample = DENSE_SPACING * dir;
        let run = integ.run(rhs, 0.0, t, y0, |step| {
            let pos1 = V3::new(step.y1[0], step.y1[1], step.y1[2]);
            let speed = V3::new(step.f1[0], step.f1[1], step.f1[2]).norm();
            if speed < SINGULARITY_FLOOR {
                failure = Some(FlowError::singularity(&self.domain.wrap(&pos1), speed));
                return StepControl::Halt;
            }
            if !self.domain.contains(&pos1) {
                let mut lo = step.t0;
                let mut hi = step.t1;
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    let y = step.interp(mid);
                    if self.domain.contains(&V3::new(y[0], y[1], y[2])) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let y = step.interp(hi);
                failure = Some(FlowError::out_of_domain(&V3::new(y[0], y[1], y[2]), hi));
                return StepControl::Halt;
            }
            while (next_sample - step.t1) * dir < 0.0 {
                if (next_sample - step.t0) * dir > 0.0 {
                    let y = step.interp(next_sample);
                    let p = self.domain.wrap(&V3::new(y[0], y[1], y[2]));
                    samples.push((next_sample, [p.x, p.y, p.z]));
                }
                next_sample += DENSE_SPACING * dir;
            }
            let p = self.domain.wrap(&pos1);
            if (next_sample - step.t1) * dir <= 0.0 {
                next_sample = step.t1 + DENSE_SPACING * dir;
            }
            samples.push((step.t1, [p.x, p.y, p.z]));
            StepControl::Continue
        })?;
        if let Some(e) = failure {
            return Err(e);
        }

        let endw = self.domain.wrap(&V3::new(run.y[0], run.y[1], run.y[2]));
        if samples.last().map(|s| s.0) != Some(run.t) {
            samples.push((run.t, [endw.x, endw.y, endw.z]));
        }
        let matrix = M3::from_column_slice(&run.y.as_slice()[3..12]);
        let seg = TrajectorySegment {
            start: [start.x, start.y, start.z],
            end: [endw.x, endw.y, endw.z],
            elapsed: run.t,
            samples,
            stats: run.stats,
        };
        let tangent = TangentState { base: start, elapsed: run.t, matrix, logdet: run.y[12] };
        Ok((seg, tangent))
    }

    /// Endpoint of the flow map together with the Liouville log-determinant
    /// over the leg, in one integration.
    pub fn advance_with_logdet(&self, x: &V3, dt: f64, tol: f64) -> Result<(V3, f64)> {
        check_tol(tol)?;
        if let FieldKind::Suspension { fwd, inv } = &self.kind {
            return Ok((suspension::advance(&self.domain, fwd, inv, x, dt), 0.0));
        }
        let start = self.domain.wrap(x);
        self.evaluate_field(&start)?;
        let mut y0 = nalgebra::SVector::<f64, 4>::zeros();
        for i in 0..3 {
            y0[i] = start[i];
        }
        let rhs = |_t: f64, y: &nalgebra::SVector<f64, 4>| {
            let pos = V3::new(y[0], y[1], y[2]);
            let f = self.field_raw(&pos);
            let div = match &self.kind {
                FieldKind::Analytic { divergence: Some(d), .. } => d(&self.domain.wrap(&pos)),
                FieldKind::Analytic { jacobian: Some(j), .. } => j(&self.domain.wrap(&pos)).trace(),
                _ => self.fd_jacobian(&self.domain.wrap(&pos)).trace(),
            };
            nalgebra::SVector::<f64, 4>::new(f.x, f.y, f.z, div)
        };
        let integ = Integrator::with_tol(tol);
        let mut failure: Option<FlowError> = None;
        let run = integ.run(rhs, 0.0, dt, y0, |step| {
            let pos1 = V3::new(step.y1[0], step.y1[1], step.y1[2]);
            if !self.domain.contains(&pos1) {
                failure = Some(FlowError::out_of_domain(&pos1, step.t1));
                return StepControl::Halt;
            }
            StepControl::Continue
        })?;
        if let Some(e) = failure {
            return Err(e);
        }
        Ok((self.domain.wrap(&V3::new(run.y[0], run.y[1], run.y[2])), run.y[3]))
    }

    /// ∫₀ᵗ div X(X_s(x)) ds, integrated alongside the trajectory. By
    /// Liouville's formula this equals log det DX_t(x).
    pub fn liouville_logdet(&self, x: &V3, t: f64, tol: f64) -> Result<f64> {
        Ok(self.advance_with_logdet(x, t, tol)?.1)
    }

    /// Shortest displacement from `from` to `to` respecting the phase-space
    /// identifications. For suspension flows the roof gluing twists the
    /// (x, y) fibers, so points are also compared across one roof lift in
    /// either direction.
    pub fn local_displacement(&self, from: &V3, to: &V3) -> V3 {
        match &self.kind {
            FieldKind::Suspension { fwd, inv } => {
                let wrap_xy = |mut d: V3| {
                    for i in 0..2 {
                        d[i] = d[i].rem_euclid(1.0);
                        if d[i] > 0.5 {
                            d[i] -= 1.0;
                        }
                    }
                    d
                };
                let base = wrap_xy(V3::new(to.x - from.x, to.y - from.y, to.z - from.z));
                // lift `to` down through the floor: (x,y,z) ~ (A⁻¹(x,y), z+1)
                let up = {
                    let m = inv * nalgebra::Vector2::new(to.x, to.y);
                    wrap_xy(V3::new(m.x - from.x, m.y - from.y, to.z + 1.0 - from.z))
                };
                // lift `to` up through the roof: (x,y,z) ~ (A(x,y), z-1)
                let down = {
                    let m = fwd * nalgebra::Vector2::new(to.x, to.y);
                    wrap_xy(V3::new(m.x - from.x, m.y - from.y, to.z - 1.0 - from.z))
                };
                [base, up, down]
                    .into_iter()
                    .min_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap())
                    .unwrap()
            }
            FieldKind::Analytic { .. } => self.domain.displacement(from, to),
        }
    }

    /// Uniform sample of the normalized reference measure: the whole torus,
    /// or the declared trapping region of a box domain.
    pub fn sample_domain(&self, rng: &mut impl Rng) -> V3 {
        match (&self.domain, &self.trapping) {
            (d @ DomainSpec::Box { .. }, Some(region)) => region.sample(d, rng),
            (d, _) => {
                let (lo, hi) = d.bounds();
                V3::new(
                    rng.gen_range(lo[0]..hi[0]),
                    rng.gen_range(lo[1]..hi[1]),
                    rng.gen_range(lo[2]..hi[2]),
                )
            }
        }
    }
}

/// Bisect the exit time of a step that left a box domain.
fn refine_exit(domain: &DomainSpec, step: &Step<3>) -> f64 {
    let mut lo = step.t0;
    let mut hi = step.t1;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if domain.contains(&step.interp(mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

#[cfg(test)]
pub(crate) mod testflows;
