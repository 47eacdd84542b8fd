//! Periodic-orbit location and classification.
//!
//! Orbits are found as fixed points of (possibly iterated) Poincaré-section
//! return maps, polished by damped Newton on the 2D displacement. Floquet
//! multipliers come from the monodromy trace together with the Liouville
//! determinant: extracting the strongly contracted multiplier straight from
//! matrix entries would lose it to unstable-mode contamination, while the
//! dominant root of the characteristic polynomial and det/μ are both
//! well-conditioned.

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FlowError, Result};
use crate::flowcore::{DomainSpec, VectorFieldSpec, V3};
use crate::linalg::eig_from_trace_det;
use crate::linpoincare::{frame_change, linear_poincare, mat2_rows, NormalFrame};

/// Relative slack around modulus 1 below which an orbit is non-hyperbolic.
pub const TOL_EIG: f64 = 1e-6;

/// A transversal disc used to take return maps.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SectionSpec {
    pub anchor: [f64; 3],
    pub normal: [f64; 3],
    pub half_width: f64,
}

impl SectionSpec {
    /// Build a section, checking transversality at the anchor:
    /// |<X(anchor), n>| >= 0.1 |X(anchor)|.
    pub fn new(spec: &VectorFieldSpec, anchor: V3, normal: V3, half_width: f64) -> Result<Self> {
        let n = normal.normalize();
        let v = spec.evaluate_field(&anchor)?;
        if v.dot(&n).abs() < 0.1 * v.norm() {
            return Err(FlowError::NonTransversalSection);
        }
        if !(half_width > 0.0) {
            return Err(FlowError::Config("section half-width must be positive".into()));
        }
        Ok(SectionSpec {
            anchor: [anchor.x, anchor.y, anchor.z],
            normal: [n.x, n.y, n.z],
            half_width,
        })
    }

    pub fn anchor_v(&self) -> V3 {
        V3::new(self.anchor[0], self.anchor[1], self.anchor[2])
    }

    pub fn normal_v(&self) -> V3 {
        V3::new(self.normal[0], self.normal[1], self.normal[2])
    }

    /// Deterministic orthonormal basis of the section plane.
    pub fn plane_axes(&self) -> (V3, V3) {
        let n = self.normal_v();
        let a = [n.x.abs(), n.y.abs(), n.z.abs()];
        let mut best = 0;
        for i in 1..3 {
            if a[i] < a[best] {
                best = i;
            }
        }
        let mut e = V3::zeros();
        e[best] = 1.0;
        let p1 = (e - n * e.dot(&n)).normalize();
        let p2 = n.cross(&p1);
        (p1, p2)
    }

    /// In-plane coordinates of a point (via the wrapped displacement).
    pub fn coords(&self, domain: &DomainSpec, x: &V3) -> Vector2<f64> {
        let d = domain.displacement(&self.anchor_v(), x);
        let (p1, p2) = self.plane_axes();
        Vector2::new(d.dot(&p1), d.dot(&p2))
    }

    /// Embed in-plane coordinates into 3-space.
    pub fn point_at(&self, uv: &Vector2<f64>) -> V3 {
        let (p1, p2) = self.plane_axes();
        self.anchor_v() + p1 * uv.x + p2 * uv.y
    }

    /// Signed offset of `x` from the plane, oriented so the flow crosses in
    /// the positive direction at the anchor.
    fn signed_offset(&self, domain: &DomainSpec, x: &V3, orient: f64) -> f64 {
        domain.displacement(&self.anchor_v(), x).dot(&self.normal_v()) * orient
    }
}

/// First return of `x` to the section disc in the anchor's crossing
/// direction: (return point, return time).
pub fn return_map(
    spec: &VectorFieldSpec,
    section: &SectionSpec,
    x: &V3,
    tol: f64,
    horizon: f64,
) -> Result<(V3, f64)> {
    return_map_widened(spec, section, x, tol, horizon, section.half_width)
}

/// Return map with a custom in-plane radius: Newton shooting accepts plane
/// crossings outside the disc (transients of far seeds return far before
/// the iteration pulls them in), while the public op enforces the disc.
fn return_map_widened(
    spec: &VectorFieldSpec,
    section: &SectionSpec,
    x: &V3,
    tol: f64,
    horizon: f64,
    max_offset: f64,
) -> Result<(V3, f64)> {
    let orient = {
        let v = spec.evaluate_field(&section.anchor_v())?;
        v.dot(&section.normal_v()).signum()
    };
    let domain = &spec.domain;
    // wrap-jump guard: a sawtooth discontinuity of the signed offset on tori
    let jump_guard = match domain {
        DomainSpec::Torus { periods } => 0.45 * periods.iter().cloned().fold(f64::INFINITY, f64::min),
        DomainSpec::Box { .. } => f64::INFINITY,
    };
    let dt_scan = 0.05f64;

    let mut armed = false;
    let mut prev: Option<(f64, f64)> = None; // (t, sigma)
    let mut prev_x = *x;
    let mut hit: Option<(V3, f64)> = None;

    let scan = spec.scan(x, horizon, tol, dt_scan, |t, p| {
        let sigma = section.signed_offset(domain, p, orient);
        if let Some((t0, s0)) = prev {
            let continuous = (sigma - s0).abs() <= jump_guard;
            if armed && continuous && s0 < 0.0 && sigma >= 0.0 {
                // refine the crossing by Newton on the offset
                if let Some((pt, tc)) = refine_crossing(spec, section, orient, &prev_x, t0, tol) {
                    let d = domain.displacement(&section.anchor_v(), &pt);
                    let in_plane = d - section.normal_v() * d.dot(&section.normal_v());
                    if in_plane.norm() <= max_offset && tc > 1e-12 {
                        hit = Some((pt, tc));
                        return false;
                    }
                }
            }
            if !armed && sigma < -1e-9 {
                armed = true;
            }
        } else if sigma < -1e-9 {
            armed = true;
        }
        prev = Some((t, sigma));
        prev_x = *p;
        true
    })?;
    let _ = scan;
    hit.ok_or(FlowError::NoReturn(horizon))
}

/// Newton-polish a bracketed crossing starting from the pre-crossing sample.
/// Returns the crossing point and absolute crossing time, or None if the
/// polish wanders off.
fn refine_crossing(
    spec: &VectorFieldSpec,
    section: &SectionSpec,
    orient: f64,
    x_pre: &V3,
    t_pre: f64,
    tol: f64,
) -> Option<(V3, f64)> {
    let domain = &spec.domain;
    let mut x = *x_pre;
    let mut t = t_pre;
    let scale = 1.0 + section.anchor_v().norm();
    for _ in 0..16 {
        let sigma = section.signed_offset(domain, &x, orient);
        if sigma.abs() < 1e-13 * scale {
            return Some((x, t));
        }
        let v = spec.evaluate_field(&x).ok()?;
        let dsigma = v.dot(&section.normal_v()) * orient;
        if dsigma.abs() < 1e-12 {
            return None;
        }
        let mut dt = -sigma / dsigma;
        dt = dt.clamp(-0.2, 0.2);
        x = spec.advance(&x, dt, tol).ok()?;
        t += dt;
    }
    let sigma = section.signed_offset(domain, &x, orient);
    if sigma.abs() < 1e-9 * scale {
        Some((x, t))
    } else {
        None
    }
}

/// m-fold composition of the return map.
fn return_map_iter(
    spec: &VectorFieldSpec,
    section: &SectionSpec,
    x: &V3,
    m: usize,
    tol: f64,
    horizon: f64,
) -> Result<(V3, f64)> {
    let mut p = *x;
    let mut total = 0.0;
    for _ in 0..m {
        let (q, dt) = return_map_widened(spec, section, &p, tol, horizon, f64::INFINITY)?;
        p = q;
        total += dt;
    }
    Ok((p, total))
}

/// Classification of a periodic orbit by its Floquet multipliers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OrbitClass {
    Sink,
    Source,
    Saddle,
    NonHyperbolic,
}

impl std::fmt::Display for OrbitClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            OrbitClass::Sink => "sink",
            OrbitClass::Source => "source",
            OrbitClass::Saddle => "saddle",
            OrbitClass::NonHyperbolic => "non-hyperbolic",
        };
        write!(f, "{s}")
    }
}

/// Classify from multiplier moduli with the hyperbolicity slack [`TOL_EIG`].
pub fn classify(lambda: Complex64, mu: Complex64) -> OrbitClass {
    let a = lambda.norm();
    let b = mu.norm();
    if (a - 1.0).abs() <= TOL_EIG || (b - 1.0).abs() <= TOL_EIG {
        OrbitClass::NonHyperbolic
    } else if b < 1.0 {
        OrbitClass::Sink
    } else if a > 1.0 {
        OrbitClass::Source
    } else {
        OrbitClass::Saddle
    }
}

/// A closed orbit with its normal-plane monodromy and classification.
#[derive(Debug, Clone)]
pub struct PeriodicOrbit {
    pub name: String,
    pub point: V3,
    /// Minimal period.
    pub period: f64,
    /// Monodromy of the linear Poincaré flow, as an operator on the normal
    /// plane at `point` in `frame` coordinates.
    pub monodromy: Matrix2<f64>,
    pub frame: NormalFrame,
    /// Multipliers ordered |λ| <= |μ|.
    pub lambda: Complex64,
    pub mu: Complex64,
    /// |det DX_{t_p}(p)|, from the Liouville accumulator.
    pub det_full: f64,
    pub class: OrbitClass,
    pub dissipative: bool,
    /// Closure residual |X_{t_p}(p) - p|.
    pub residual: f64,
}

impl PeriodicOrbit {
    pub fn is_saddle(&self) -> bool {
        self.class == OrbitClass::Saddle
    }
}

/// Assemble monodromy, multipliers and classification for a closed point.
fn assemble_orbit(spec: &VectorFieldSpec, p: &V3, period: f64, tol: f64) -> Result<PeriodicOrbit> {
    let pmap = linear_poincare(spec, p, period, tol)?;
    // close the loop: express the target frame in source-frame coordinates
    let closure = frame_change(&pmap.target, &pmap.source);
    let monodromy = closure * pmap.matrix;
    let det_p = pmap.det_robust();
    let (lambda, mu) = eig_from_trace_det(monodromy.trace(), det_p);
    let class = classify(lambda, mu);
    let det_full = pmap.logdet_dx.exp();
    let end = spec.advance(p, period, tol)?;
    let residual = spec.domain.distance(&end, p);
    Ok(PeriodicOrbit {
        name: "orbit".into(),
        point: *p,
        period,
        monodromy,
        frame: pmap.source,
        lambda,
        mu,
        det_full,
        class,
        dissipative: det_full < 1.0,
        residual,
    })
}

/// Reduce a candidate period to the minimal one by testing divisor returns.
fn minimal_period(spec: &VectorFieldSpec, p: &V3, period: f64, orbit_tol: f64, tol: f64) -> f64 {
    let mut t = period;
    loop {
        let mut reduced = false;
        for k in (2..=5).rev() {
            let cand = t / k as f64;
            if cand < 1e-6 {
                continue;
            }
            if let Ok(q) = spec.advance(p, cand, tol) {
                if spec.domain.distance(&q, p) < 10.0 * orbit_tol {
                    t = cand;
                    reduced = true;
                    break;
                }
            }
        }
        if !reduced {
            return t;
        }
    }
}

/// Damped Newton on the displacement of the m-fold return map.
fn newton_shoot(
    spec: &VectorFieldSpec,
    section: &SectionSpec,
    seed: &V3,
    m: usize,
    tol: f64,
    orbit_tol: f64,
    horizon: f64,
) -> Result<(V3, f64)> {
    let domain = &spec.domain;
    let disp = |uv: &Vector2<f64>| -> Result<(Vector2<f64>, f64)> {
        let x = section.point_at(uv);
        let (r, t) = return_map_iter(spec, section, &x, m, tol, horizon)?;
        Ok((section.coords(domain, &r) - uv, t))
    };

    let mut uv = section.coords(domain, &spec.domain.wrap(seed));
    let (mut g, mut tau) = disp(&uv)?;
    for _ in 0..12 {
        if g.norm() < orbit_tol {
            let p = section.point_at(&uv);
            return Ok((p, tau));
        }
        // forward-difference Jacobian of the displacement
        let h = 1e-7 * (1.0 + uv.norm());
        let mut jac = Matrix2::zeros();
        for j in 0..2 {
            let mut up = uv;
            up[j] += h;
            let (gp, _) = disp(&up)?;
            let col = (gp - g) / h;
            jac[(0, j)] = col.x;
            jac[(1, j)] = col.y;
        }
        let det = jac.determinant();
        if det.abs() < 1e-14 * (1.0 + jac.amax().powi(2)) {
            return Err(FlowError::NewtonDiverged("singular return-map Jacobian".into()));
        }
        let inv = jac.try_inverse().ok_or_else(|| {
            FlowError::NewtonDiverged("singular return-map Jacobian".into())
        })?;
        let full = -(inv * g);
        // backtracking damping
        let mut accepted = false;
        let mut lam = 1.0;
        for _ in 0..4 {
            let trial = uv + full * lam;
            if trial.norm() > 4.0 * section.half_width {
                lam *= 0.5;
                continue;
            }
            match disp(&trial) {
                Ok((gt, tt)) if gt.norm() < g.norm() * (1.0 - 0.25 * lam) + 1e-15 => {
                    uv = trial;
                    g = gt;
                    tau = tt;
                    accepted = true;
                    break;
                }
                _ => lam *= 0.5,
            }
        }
        if !accepted {
            return Err(FlowError::NewtonDiverged("damping exhausted".into()));
        }
    }
    if g.norm() < orbit_tol {
        let p = section.point_at(&uv);
        return Ok((p, tau));
    }
    Err(FlowError::NewtonDiverged(format!("no convergence, |g| = {:.3e}", g.norm())))
}

/// Locate the periodic orbit through the section near `seed` (first-return
/// fixed point), verify minimality, and classify it.
pub fn find_periodic_orbit(
    spec: &VectorFieldSpec,
    section: &SectionSpec,
    seed: &V3,
    tol: f64,
) -> Result<PeriodicOrbit> {
    find_periodic_orbit_returns(spec, section, seed, 1, tol, 1e-9, 100.0)
}

/// As [`find_periodic_orbit`], for the m-fold return map.
pub fn find_periodic_orbit_returns(
    spec: &VectorFieldSpec,
    section: &SectionSpec,
    seed: &V3,
    m: usize,
    tol: f64,
    orbit_tol: f64,
    horizon: f64,
) -> Result<PeriodicOrbit> {
    let (p, tau) = newton_shoot(spec, section, seed, m, tol, orbit_tol, horizon)?;
    let period = minimal_period(spec, &p, tau, orbit_tol, tol);
    assemble_orbit(spec, &p, period, tol)
}

/// Search budget for the orbit census.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CensusBudget {
    /// Total Newton seeds, split across sections and return counts.
    pub seeds: usize,
    /// Discard orbits with period beyond this bound.
    pub period_bound: f64,
    /// Iterate the return map up to this many times.
    pub max_returns: usize,
    /// Integration tolerance.
    pub tol: f64,
    /// Newton convergence tolerance (position units).
    pub orbit_tol: f64,
    /// Auto-placed section count (ignored when sections are supplied).
    pub auto_sections: usize,
    /// Section disc radius; per-domain heuristic when absent.
    pub section_half_width: Option<f64>,
    /// Orbits closer than this (max sample to polyline distance) are one class.
    pub dedup_eps: f64,
    /// Reject "orbits" shorter than this: grazing section tangencies produce
    /// spurious near-zero-time fixed points of the return map.
    pub min_period: f64,
}

impl Default for CensusBudget {
    fn default() -> Self {
        CensusBudget {
            seeds: 200,
            period_bound: 12.0,
            max_returns: 3,
            tol: 1e-10,
            orbit_tol: 1e-9,
            auto_sections: 4,
            section_half_width: None,
            dedup_eps: 1e-4,
            min_period: 0.25,
        }
    }
}

/// Census result: deduplicated orbits plus search statistics.
#[derive(Debug, Clone)]
pub struct OrbitCatalog {
    pub orbits: Vec<PeriodicOrbit>,
    pub sections: Vec<SectionSpec>,
    pub attempted: usize,
    pub converged: usize,
}

impl OrbitCatalog {
    pub fn count_by_class(&self, class: OrbitClass) -> usize {
        self.orbits.iter().filter(|o| o.class == class).count()
    }

    pub fn dissipative_orbits(&self) -> impl Iterator<Item = &PeriodicOrbit> {
        self.orbits.iter().filter(|o| o.dissipative)
    }
}

/// 64 evenly spaced samples along one orbit period.
pub fn orbit_samples(spec: &VectorFieldSpec, orbit: &PeriodicOrbit, tol: f64) -> Result<Vec<V3>> {
    orbit_samples_n(spec, orbit, 64, tol)
}

/// n evenly spaced samples along one orbit period.
pub fn orbit_samples_n(
    spec: &VectorFieldSpec,
    orbit: &PeriodicOrbit,
    n: usize,
    tol: f64,
) -> Result<Vec<V3>> {
    let dt = orbit.period / n as f64;
    let mut out = Vec::with_capacity(n);
    let mut p = orbit.point;
    for _ in 0..n {
        out.push(p);
        p = spec.advance(&p, dt, tol)?;
    }
    Ok(out)
}

/// Decide whether every sample of `a` lies within `eps` of the closed
/// polyline through `b`, bailing out early on the first miss. The kept
/// polyline is sampled finely enough that chord sagitta stays below `eps`.
fn orbits_match(spec: &VectorFieldSpec, a: &[V3], b: &[V3], eps: f64) -> bool {
    let n = b.len();
    for p in a {
        let mut best = f64::INFINITY;
        for i in 0..n {
            let s = &b[i];
            let e = &b[(i + 1) % n];
            let ds = spec.local_displacement(p, s);
            let de = spec.local_displacement(s, e);
            let len2 = de.norm_squared();
            let d = if len2 == 0.0 {
                ds.norm()
            } else {
                let t = (-ds.dot(&de) / len2).clamp(0.0, 1.0);
                (ds + de * t).norm()
            };
            if d < best {
                best = d;
            }
            if best <= eps {
                break;
            }
        }
        if best > eps {
            return false;
        }
    }
    true
}

/// Distance from a point to the polyline through `samples`, under the
/// phase-space metric (roof-twist aware for suspensions).
pub fn polyline_distance(spec: &VectorFieldSpec, p: &V3, samples: &[V3], closed: bool) -> f64 {
    let n = samples.len();
    if n == 0 {
        return f64::INFINITY;
    }
    if n == 1 {
        return spec.local_displacement(p, &samples[0]).norm();
    }
    let mut best = f64::INFINITY;
    let last = if closed { n } else { n - 1 };
    for i in 0..last {
        let s = &samples[i];
        let e = &samples[(i + 1) % n];
        let ds = spec.local_displacement(p, s);
        let de = spec.local_displacement(s, e);
        let len2 = de.norm_squared();
        let d = if len2 == 0.0 {
            ds.norm()
        } else {
            let t = (-ds.dot(&de) / len2).clamp(0.0, 1.0);
            (ds + de * t).norm()
        };
        best = best.min(d);
    }
    best
}

/// Max distance from samples of `a` to the closed polyline through samples
/// of `b`, under the phase-space metric (roof-twist aware for suspensions).
pub fn orbit_distance(spec: &VectorFieldSpec, a: &[V3], b: &[V3]) -> f64 {
    a.iter()
        .map(|p| polyline_distance(spec, p, b, true))
        .fold(0.0, f64::max)
}

/// A converged fixed point only defines a trustworthy return map when the
/// flow still crosses the section transversally there.
fn transversal_at(spec: &VectorFieldSpec, section: &SectionSpec, p: &V3) -> bool {
    match spec.evaluate_field(p) {
        Ok(v) => v.dot(&section.normal_v()).abs() >= 0.1 * v.norm(),
        Err(_) => false,
    }
}

/// Auto-place sections orthogonal to the field at low-discrepancy probe
/// points of the sampling region.
pub fn auto_sections(spec: &VectorFieldSpec, count: usize, half_width: Option<f64>) -> Vec<SectionSpec> {
    let hw = half_width.unwrap_or_else(|| {
        let (lo, hi) = spec.domain.bounds();
        let min_extent = (0..3).map(|i| hi[i] - lo[i]).fold(f64::INFINITY, f64::min);
        match spec.domain {
            DomainSpec::Torus { .. } => 0.75 * min_extent,
            DomainSpec::Box { .. } => 0.35 * min_extent,
        }
    });
    let region = spec
        .trapping
        .clone()
        .unwrap_or(crate::region::RegionSpec::All);
    let probes = region.interior_samples(&spec.domain, count.max(1) * 3);
    let mut out = Vec::new();
    for p in probes {
        if out.len() >= count {
            break;
        }
        if let Ok(v) = spec.evaluate_field(&p) {
            if let Ok(s) = SectionSpec::new(spec, p, v.normalize(), hw) {
                out.push(s);
            }
        }
    }
    out
}

/// Multi-start census over the given (or auto-placed) sections: seeds on a
/// low-discrepancy disc lattice, Newton per (section, seed, returns) task,
/// deterministic merge ordered by task index, dedup by orbit distance.
pub fn enumerate_orbits(
    spec: &VectorFieldSpec,
    budget: &CensusBudget,
    sections: Option<Vec<SectionSpec>>,
) -> OrbitCatalog {
    let sections = sections.unwrap_or_else(|| auto_sections(spec, budget.auto_sections, budget.section_half_width));
    if sections.is_empty() {
        return OrbitCatalog { orbits: Vec::new(), sections, attempted: 0, converged: 0 };
    }
    let per_section = (budget.seeds / sections.len()).max(1);
    let horizon = (budget.period_bound * 1.5).max(5.0);

    // task list: (section index, seed uv, return count)
    let mut tasks: Vec<(usize, Vector2<f64>, usize)> = Vec::new();
    let alpha = (0.540668405883794, 0.368848793492815); // 2D Kronecker lattice
    for (si, sec) in sections.iter().enumerate() {
        for k in 0..per_section {
            let fx = ((k as f64 + 0.5) * alpha.0).fract();
            let fy = ((k as f64 + 0.5) * alpha.1).fract();
            let uv = Vector2::new((2.0 * fx - 1.0) * sec.half_width, (2.0 * fy - 1.0) * sec.half_width);
            if uv.norm() > sec.half_width {
                continue;
            }
            for m in 1..=budget.max_returns {
                tasks.push((si, uv, m));
            }
        }
    }

    let found: Vec<Option<PeriodicOrbit>> = tasks
        .par_iter()
        .map(|(si, uv, m)| {
            let sec = &sections[*si];
            let seed = sec.point_at(uv);
            match find_periodic_orbit_returns(spec, sec, &seed, *m, budget.tol, budget.orbit_tol, horizon) {
                Ok(o) if o.period <= budget.period_bound
                    && o.period >= budget.min_period
                    && o.residual < 1e-5
                    && transversal_at(spec, sec, &o.point) =>
                {
                    Some(o)
                }
                _ => None,
            }
        })
        .collect();

    let attempted = tasks.len();
    let converged = found.iter().flatten().count();

    // deterministic single-threaded merge in task order
    let mut kept: Vec<(PeriodicOrbit, Vec<V3>)> = Vec::new();
    for orbit in found.into_iter().flatten() {
        let samples = match orbit_samples(spec, &orbit, budget.tol) {
            Ok(s) => s,
            Err(_) => continue,
        };
        let duplicate = kept.iter().any(|(o, fine)| {
            (o.period - orbit.period).abs() <= 1e-3 * (1.0 + orbit.period)
                && orbits_match(spec, &samples, fine, budget.dedup_eps)
        });
        if !duplicate {
            // keep a fine polyline so chord sagitta cannot split this orbit
            // from later phase-shifted duplicates
            let fine = orbit_samples_n(spec, &orbit, 512, budget.tol).unwrap_or_else(|_| samples.clone());
            kept.push((orbit, fine));
        }
    }
    let mut orbits: Vec<PeriodicOrbit> = kept.into_iter().map(|(o, _)| o).collect();
    orbits.sort_by(|a, b| {
        a.period
            .partial_cmp(&b.period)
            .unwrap()
            .then(a.point.x.partial_cmp(&b.point.x).unwrap())
            .then(a.point.y.partial_cmp(&b.point.y).unwrap())
    });
    for (i, o) in orbits.iter_mut().enumerate() {
        o.name = format!("orbit-{i}");
    }
    OrbitCatalog { orbits, sections, attempted, converged }
}

// ---------------------------------------------------------------------------
// serialization

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrbitJson {
    pub name: String,
    pub point: [f64; 3],
    pub period: f64,
    pub monodromy: [[f64; 2]; 2],
    pub lambda: [f64; 2],
    pub mu: [f64; 2],
    pub det_full: f64,
    pub class: OrbitClass,
    pub dissipative: bool,
    pub residual: f64,
}

impl From<&PeriodicOrbit> for OrbitJson {
    fn from(o: &PeriodicOrbit) -> Self {
        OrbitJson {
            name: o.name.clone(),
            point: [o.point.x, o.point.y, o.point.z],
            period: o.period,
            monodromy: mat2_rows(&o.monodromy),
            lambda: [o.lambda.re, o.lambda.im],
            mu: [o.mu.re, o.mu.im],
            det_full: o.det_full,
            class: o.class,
            dissipative: o.dissipative,
            residual: o.residual,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CatalogJson {
    pub schema_version: u32,
    pub flow: String,
    pub orbits: Vec<OrbitJson>,
    pub attempted: usize,
    pub converged: usize,
}

impl OrbitCatalog {
    pub fn to_json(&self, flow_name: &str) -> CatalogJson {
        CatalogJson {
            schema_version: 1,
            flow: flow_name.to_string(),
            orbits: self.orbits.iter().map(OrbitJson::from).collect(),
            attempted: self.attempted,
            converged: self.converged,
        }
    }

    /// One CSV row per orbit.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "name,px,py,pz,period,lambda_re,lambda_im,mu_re,mu_im,det,class,dissipative,residual\n",
        );
        for o in &self.orbits {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                o.name,
                o.point.x,
                o.point.y,
                o.point.z,
                o.period,
                o.lambda.re,
                o.lambda.im,
                o.mu.re,
                o.mu.im,
                o.det_full,
                o.class,
                o.dissipative,
                o.residual
            ));
        }
        out
    }
}
