//! Stable/unstable normal directions and splitting certificates.
//!
//! Certificates evaluate the defining inequalities of dominated splitting,
//! contraction rate, angle separation and uniform hyperbolicity at sampled
//! partition times along periodic cocycles. Verdicts are sample-based: every
//! certificate records the partition spacing it was checked on, so claims are
//! explicitly about the sampled grid, not continuum time.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{FlowError, Result};
use crate::flowcore::{VectorFieldSpec, V3};
use crate::linpoincare::{cocycle_along, frame_change, linear_poincare, normal_frame};
use crate::periodic::{OrbitClass, PeriodicOrbit};

/// Stable and unstable normal directions at a point, as unit vectors in a
/// fixed normal-plane frame.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DirectionPair {
    pub base: [f64; 3],
    pub stable: [f64; 2],
    pub unstable: [f64; 2],
    pub orbit_id: String,
}

impl DirectionPair {
    pub fn stable_v(&self) -> Vector2<f64> {
        Vector2::new(self.stable[0], self.stable[1])
    }

    pub fn unstable_v(&self) -> Vector2<f64> {
        Vector2::new(self.unstable[0], self.unstable[1])
    }
}

/// Eigendirections of a saddle monodromy, unit-normalized, in the orbit's
/// stored frame.
pub fn eigen_directions(orbit: &PeriodicOrbit) -> Result<DirectionPair> {
    if orbit.class != OrbitClass::Saddle {
        return Err(FlowError::NotASaddle);
    }
    let s = crate::linalg::eigenvector2(&orbit.monodromy, orbit.lambda.re);
    let u = crate::linalg::eigenvector2(&orbit.monodromy, orbit.mu.re);
    Ok(DirectionPair {
        base: [orbit.point.x, orbit.point.y, orbit.point.z],
        stable: [s.x, s.y],
        unstable: [u.x, u.y],
        orbit_id: orbit.name.clone(),
    })
}

/// The graph angle between lines E and F in the plane: the norm of the
/// operator L : E -> E^⊥ whose graph is F. In 2D this is |tan θ|. Undefined
/// (error) when F = E^⊥.
pub fn graph_angle(e: &Vector2<f64>, f: &Vector2<f64>) -> Result<f64> {
    let en = e.norm();
    let fn_ = f.norm();
    if en == 0.0 || fn_ == 0.0 {
        return Err(FlowError::Config("graph angle of zero vector".into()));
    }
    let eu = e / en;
    let ep = Vector2::new(-eu.y, eu.x);
    let a = f.dot(&eu) / fn_;
    let b = f.dot(&ep) / fn_;
    if a == 0.0 {
        return Err(FlowError::PerpendicularPair);
    }
    Ok((b / a).abs())
}

/// Angle with the perpendicular case mapped to +∞ (best-conditioned
/// splitting; passes any finite lower bound).
pub fn graph_angle_or_inf(e: &Vector2<f64>, f: &Vector2<f64>) -> f64 {
    match graph_angle(e, f) {
        Ok(v) => v,
        Err(FlowError::PerpendicularPair) => f64::INFINITY,
        Err(_) => f64::NAN,
    }
}

/// A periodic normal cocycle reduced to its window algebra: per-gap maps in
/// chained frames plus the closure rotation back to the starting frame.
#[derive(Debug, Clone)]
pub struct OrbitCocycle {
    pub maps: Vec<Matrix2<f64>>,
    pub gap: f64,
    pub closure: Matrix2<f64>,
    pub period: f64,
}

impl OrbitCocycle {
    pub fn from_maps(maps: Vec<Matrix2<f64>>, gap: f64, closure: Matrix2<f64>) -> Self {
        let period = gap * maps.len() as f64;
        OrbitCocycle { maps, gap, closure, period }
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    /// Map over gap `j` of the periodic extension: the closure applies after
    /// the final gap of each period.
    fn ext_map(&self, j: usize) -> Matrix2<f64> {
        let n = self.maps.len();
        let k = j % n;
        if k == n - 1 {
            self.closure * self.maps[k]
        } else {
            self.maps[k]
        }
    }

    /// Product of `steps` consecutive maps starting at partition index
    /// `start`, wrapping periodically.
    pub fn window(&self, start: usize, steps: usize) -> Matrix2<f64> {
        let mut p = Matrix2::identity();
        for j in start..start + steps {
            p = self.ext_map(j) * p;
        }
        p
    }

    /// Monodromy: the window over one full period from the base point.
    pub fn monodromy(&self) -> Matrix2<f64> {
        self.window(0, self.maps.len())
    }

    /// Unit directions transported to every partition point.
    pub fn transport_directions(&self, d0: &Vector2<f64>) -> Vec<Vector2<f64>> {
        let mut out = Vec::with_capacity(self.maps.len() + 1);
        let mut d = d0.normalize();
        out.push(d);
        for j in 0..self.maps.len() {
            d = (self.ext_map(j) * d).normalize();
            out.push(d);
        }
        out
    }
}

/// Build the periodic cocycle of an orbit on a uniform partition with
/// `n_gaps` legs.
pub fn periodic_cocycle(
    spec: &VectorFieldSpec,
    orbit: &PeriodicOrbit,
    n_gaps: usize,
    tol: f64,
) -> Result<OrbitCocycle> {
    if n_gaps == 0 {
        return Err(FlowError::BadPartition("need at least one gap".into()));
    }
    let gap = orbit.period / n_gaps as f64;
    let partition: Vec<f64> = (0..=n_gaps).map(|i| i as f64 * gap).collect();
    let coc = cocycle_along(spec, &orbit.point, &partition, tol)?;
    let first = &coc.frames[0];
    let last = coc.frames.last().unwrap();
    let closure = frame_change(last, first);
    Ok(OrbitCocycle { maps: coc.maps, gap, closure, period: orbit.period })
}

/// One checked inequality at one sample time.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MarginSample {
    pub time: f64,
    pub lhs: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertificateKind {
    Dominated,
    ContractionRate,
    Angle,
    Hyperbolic,
}

/// Parameters the certificate was checked against.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CertificateParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_window: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_const: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spacing: Option<f64>,
}

/// Sample-based pass/fail evidence for a splitting inequality.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplittingCertificate {
    pub id: String,
    pub kind: CertificateKind,
    pub params: CertificateParams,
    pub samples: Vec<MarginSample>,
    pub verdict: bool,
}

impl SplittingCertificate {
    fn from_samples(id: String, kind: CertificateKind, params: CertificateParams, samples: Vec<MarginSample>) -> Self {
        let verdict = !samples.is_empty() && samples.iter().all(|s| s.pass);
        SplittingCertificate { id, kind, params, samples, verdict }
    }

    pub fn min_margin(&self) -> f64 {
        self.samples.iter().map(|s| s.bound - s.lhs).fold(f64::INFINITY, f64::min)
    }
}

/// Contraction-rate certificate: |λ(p)| < rate^{t_p} for a dissipative saddle.
pub fn check_contraction_rate(orbit: &PeriodicOrbit, rate: f64) -> Result<SplittingCertificate> {
    if orbit.class != OrbitClass::Saddle || !orbit.dissipative {
        return Err(FlowError::NotADissipativeSaddle);
    }
    if !(rate > 0.0 && rate < 1.0) {
        return Err(FlowError::Config("contraction rate must lie in (0,1)".into()));
    }
    let lhs = orbit.lambda.norm();
    let bound = rate.powf(orbit.period);
    let sample = MarginSample { time: 0.0, lhs, bound, pass: lhs < bound };
    Ok(SplittingCertificate::from_samples(
        orbit.name.clone(),
        CertificateKind::ContractionRate,
        CertificateParams { rate: Some(rate), ..Default::default() },
        vec![sample],
    ))
}

/// Angle certificate over a set of saddle orbits: the graph angle between
/// stable and unstable directions must exceed `alpha`. Perpendicular pairs
/// pass with a +∞ sentinel.
pub fn check_angle_bound(orbits: &[&PeriodicOrbit], alpha: f64) -> SplittingCertificate {
    let mut samples = Vec::new();
    for o in orbits.iter().filter(|o| o.class == OrbitClass::Saddle) {
        if let Ok(dirs) = eigen_directions(o) {
            let angle = graph_angle_or_inf(&dirs.stable_v(), &dirs.unstable_v());
            samples.push(MarginSample { time: 0.0, lhs: alpha, bound: angle, pass: angle > alpha });
        }
    }
    let id = orbits.iter().map(|o| o.name.as_str()).collect::<Vec<_>>().join("+");
    let verdict = !samples.is_empty() && samples.iter().all(|s| s.pass);
    SplittingCertificate {
        id,
        kind: CertificateKind::Angle,
        params: CertificateParams { alpha: Some(alpha), ..Default::default() },
        samples,
        verdict,
    }
}

/// Restricted-norm product at one partition index for a window of `steps`
/// gaps: ||W|E|| · ||W^{-1}|F at the window end|| = ||W e_E|| / ||W e_F||
/// for one-dimensional E, F.
fn restricted_product(
    oc: &OrbitCocycle,
    dir_e: &[Vector2<f64>],
    dir_f: &[Vector2<f64>],
    start: usize,
    steps: usize,
) -> f64 {
    let w = oc.window(start, steps);
    let num = (w * dir_e[start]).norm();
    let den = (w * dir_f[start]).norm();
    num / den
}

/// Snap a requested window to the partition grid. Periods and windows are
/// generally incommensurate, so a small adjustment (at most 5%) is accepted
/// and the snapped value is recorded in the certificate; larger mismatches
/// are rejected.
fn window_steps(oc: &OrbitCocycle, t_window: f64) -> Result<(usize, f64)> {
    let steps = (t_window / oc.gap).round().max(1.0);
    let actual = steps * oc.gap;
    if (actual - t_window).abs() > 0.05 * t_window {
        return Err(FlowError::BadPartition(format!(
            "window {t_window} is too far from a multiple of the partition gap {}",
            oc.gap
        )));
    }
    Ok((steps as usize, actual))
}

/// Dominated-splitting certificate: the product of restricted norms over a
/// window of length `t_window` must not exceed 1/2 at any partition point.
pub fn check_dominated(
    oc: &OrbitCocycle,
    dirs: &DirectionPair,
    t_window: f64,
) -> Result<SplittingCertificate> {
    if oc.is_empty() {
        return Err(FlowError::MissingDirections("empty cocycle".into()));
    }
    let (steps, actual_window) = window_steps(oc, t_window)?;
    let de = oc.transport_directions(&dirs.stable_v());
    let df = oc.transport_directions(&dirs.unstable_v());
    let mut samples = Vec::with_capacity(oc.len());
    for i in 0..oc.len() {
        let lhs = restricted_product(oc, &de, &df, i, steps);
        samples.push(MarginSample { time: i as f64 * oc.gap, lhs, bound: 0.5, pass: lhs <= 0.5 });
    }
    Ok(SplittingCertificate::from_samples(
        dirs.orbit_id.clone(),
        CertificateKind::Dominated,
        CertificateParams {
            t_window: Some(actual_window),
            spacing: Some(oc.gap),
            ..Default::default()
        },
        samples,
    ))
}

/// Uniform-hyperbolicity certificate: ||P_t|N^s|| <= K e^{-rate t} and
/// ||P_{-t}|N^u|| <= K e^{-rate t} on the partition grid up to `horizon`.
/// Backward-bound samples are recorded with negated time.
pub fn check_hyperbolic(
    oc: &OrbitCocycle,
    dirs: &DirectionPair,
    k_const: f64,
    rate: f64,
    horizon: f64,
) -> Result<SplittingCertificate> {
    if oc.is_empty() {
        return Err(FlowError::MissingDirections("empty cocycle".into()));
    }
    if k_const < 1.0 {
        return Err(FlowError::Config("hyperbolicity constant K must be >= 1".into()));
    }
    let de = oc.transport_directions(&dirs.stable_v());
    let df = oc.transport_directions(&dirs.unstable_v());
    let kmax = (horizon / oc.gap).floor() as usize;
    let mut samples = Vec::new();
    for k in 0..=kmax {
        let t = k as f64 * oc.gap;
        let w = oc.window(0, k);
        let bound = k_const * (-rate * t).exp();
        let lhs_s = (w * de[0]).norm();
        samples.push(MarginSample { time: t, lhs: lhs_s, bound, pass: lhs_s <= bound });
        let lhs_u = 1.0 / (w * df[0]).norm();
        samples.push(MarginSample { time: -t, lhs: lhs_u, bound, pass: lhs_u <= bound });
    }
    Ok(SplittingCertificate::from_samples(
        dirs.orbit_id.clone(),
        CertificateKind::Hyperbolic,
        CertificateParams {
            k_const: Some(k_const),
            rate: Some(rate),
            horizon: Some(horizon),
            spacing: Some(oc.gap),
            ..Default::default()
        },
        samples,
    ))
}

/// The non-domination hypothesis: the restricted-norm product anchored at the
/// base point stays >= 1/2 for all sampled t in [0, t_max]. Returns the
/// verdict plus the times at which the product drops below 1/2.
pub fn non_domination_witness(
    oc: &OrbitCocycle,
    dirs: &DirectionPair,
    t_max: f64,
) -> Result<(bool, Vec<f64>)> {
    if oc.is_empty() {
        return Err(FlowError::MissingDirections("empty cocycle".into()));
    }
    let de = oc.transport_directions(&dirs.stable_v());
    let df = oc.transport_directions(&dirs.unstable_v());
    let kmax = (t_max / oc.gap).floor() as usize;
    let mut failures = Vec::new();
    for k in 0..=kmax {
        let w = oc.window(0, k);
        let prod = (w * de[0]).norm() / (w * df[0]).norm();
        if prod < 0.5 {
            failures.push(k as f64 * oc.gap);
        }
    }
    Ok((failures.is_empty(), failures))
}

/// Finite-horizon power-iteration directions at a non-periodic point:
/// the unstable direction is pushed forward from the past, the stable one
/// pulled back from the future. Returns the pair plus a drift diagnostic
/// (direction change per extra unit of horizon).
pub fn oseledets_directions(
    spec: &VectorFieldSpec,
    x: &V3,
    horizon: f64,
    tol: f64,
) -> Result<(DirectionPair, f64)> {
    let one = |h: f64| -> Result<(Vector2<f64>, Vector2<f64>)> {
        let seed = Vector2::new(0.6, 0.8);
        // unstable: image of a generic vector under the cocycle from the past
        let past = spec.advance(x, -h, tol)?;
        let fwd = linear_poincare(spec, &past, h, tol)?;
        let here = normal_frame(spec, x)?;
        let ru = frame_change(&fwd.target, &here);
        let u = (ru * (fwd.matrix * seed)).normalize();
        // stable: preimage of a generic vector under the future cocycle
        let bwd = linear_poincare(spec, x, h, tol)?;
        let rs = frame_change(&bwd.source, &here);
        let inv = bwd.matrix.try_inverse().ok_or_else(|| {
            FlowError::MissingDirections("singular forward cocycle".into())
        })?;
        let s = (rs * (inv * seed)).normalize();
        Ok((s, u))
    };
    let (s1, u1) = one(horizon)?;
    let (s2, u2) = one(horizon + 1.0)?;
    let drift = (1.0 - s1.dot(&s2).abs()).max(1.0 - u1.dot(&u2).abs());
    let base = spec.domain.wrap(x);
    Ok((
        DirectionPair {
            base: [base.x, base.y, base.z],
            stable: [s2.x, s2.y],
            unstable: [u2.x, u2.y],
            orbit_id: String::new(),
        },
        drift,
    ))
}
