//! The dissipative region and its measure-theoretic probes.
//!
//! From an orbit catalog this module assembles the fattened union of
//! dissipative orbits, evaluates determinant-growth membership tests and
//! Birkhoff averages, samples omega-limit sets, and estimates weak-basin and
//! trapped-set measures by Monte Carlo with Wilson confidence intervals.
//! All randomized estimators derive per-sample RNG streams from (seed, index),
//! so results are bit-reproducible and independent of thread count.

use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FlowError, Result};
use crate::flowcore::{VectorFieldSpec, V3};
use crate::periodic::{orbit_samples_n, polyline_distance, OrbitCatalog, OrbitClass};
use crate::region::RegionSpec;

/// Default fattening radius floor (position units).
pub const FATTEN_FLOOR: f64 = 1e-3;

/// Provenance of a region component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ComponentKind {
    Sink,
    DissipativeSaddle,
}

/// One fattened orbit of the dissipative region.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegionComponent {
    pub orbit_name: String,
    pub kind: ComponentKind,
    pub samples: Vec<[f64; 3]>,
    pub radius: f64,
}

/// Union of fattened dissipative orbits: sinks and dissipative saddles,
/// listed separately.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegionApprox {
    pub components: Vec<RegionComponent>,
    /// Set when the catalog carried no dissipative orbits.
    pub empty_flagged: bool,
}

impl RegionApprox {
    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Deterministic membership: distance to the nearest component polyline
    /// at most its fattening radius.
    pub fn contains(&self, spec: &VectorFieldSpec, x: &V3) -> bool {
        self.components.iter().any(|c| within_polyline(spec, x, &c.samples, c.radius))
    }

    pub fn sink_count(&self) -> usize {
        self.components.iter().filter(|c| c.kind == ComponentKind::Sink).count()
    }

    pub fn saddle_count(&self) -> usize {
        self.components.iter().filter(|c| c.kind == ComponentKind::DissipativeSaddle).count()
    }
}

/// Allocation-free membership against a closed polyline stored as arrays,
/// with early exit on the first segment inside the radius.
fn within_polyline(spec: &VectorFieldSpec, p: &V3, samples: &[[f64; 3]], radius: f64) -> bool {
    let n = samples.len();
    if n == 0 {
        return false;
    }
    let v = |a: &[f64; 3]| Vector3::new(a[0], a[1], a[2]);
    if n == 1 {
        return spec.local_displacement(p, &v(&samples[0])).norm() <= radius;
    }
    for i in 0..n {
        let s = v(&samples[i]);
        let e = v(&samples[(i + 1) % n]);
        let ds = spec.local_displacement(p, &s);
        if ds.norm() > radius + spec.local_displacement(&s, &e).norm() {
            continue; // segment unreachable from p
        }
        let de = spec.local_displacement(&s, &e);
        let len2 = de.norm_squared();
        let d = if len2 == 0.0 {
            ds.norm()
        } else {
            let t = (-ds.dot(&de) / len2).clamp(0.0, 1.0);
            (ds + de * t).norm()
        };
        if d <= radius {
            return true;
        }
    }
    false
}

/// Assemble the dissipative region from the cataloged dissipative orbits.
/// The fattening radius defaults to 10× the orbit closure residual with a
/// floor of [`FATTEN_FLOOR`].
pub fn dissipative_region(
    spec: &VectorFieldSpec,
    catalog: &OrbitCatalog,
    eps_fat: Option<f64>,
) -> RegionApprox {
    let mut components = Vec::new();
    for orbit in catalog.dissipative_orbits() {
        let kind = match orbit.class {
            OrbitClass::Sink => ComponentKind::Sink,
            OrbitClass::Saddle => ComponentKind::DissipativeSaddle,
            // non-hyperbolic and source orbits do not enter the region split
            _ => continue,
        };
        let radius = eps_fat.unwrap_or((10.0 * orbit.residual).max(FATTEN_FLOOR));
        let samples = match orbit_samples_n(spec, orbit, 256, 1e-10) {
            Ok(s) => s.iter().map(|p| [p.x, p.y, p.z]).collect(),
            Err(_) => continue,
        };
        components.push(RegionComponent { orbit_name: orbit.name.clone(), kind, samples, radius });
    }
    let empty_flagged = components.is_empty();
    RegionApprox { components, empty_flagged }
}

/// (1/t) ∫₀ᵗ div X(X_s(x)) ds = (1/t) log det DX_t(x).
pub fn mean_divergence(spec: &VectorFieldSpec, x: &V3, t: f64, tol: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(FlowError::Config("mean divergence needs t > 0".into()));
    }
    Ok(spec.liouville_logdet(x, t, tol)? / t)
}

/// Time-averaged log-determinants of the full derivative and of its normal
/// projection. They differ by (1/t)·log of the speed ratio, which vanishes
/// in the long-time average on compact sets; both are reported so the
/// discrepancy is explicit rather than assumed away.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeanLogdetReport {
    pub mean_logdet_full: f64,
    pub mean_logdet_normal: f64,
    pub discrepancy: f64,
}

pub fn mean_logdet_discrepancy(
    spec: &VectorFieldSpec,
    x: &V3,
    t: f64,
    tol: f64,
) -> Result<MeanLogdetReport> {
    if !(t > 0.0) {
        return Err(FlowError::Config("mean log-determinant needs t > 0".into()));
    }
    let (end, logdet) = spec.advance_with_logdet(x, t, tol)?;
    let speed_start = spec.evaluate_field(x)?.norm();
    let speed_end = spec.evaluate_field(&end)?.norm();
    // det P_t = det DX_t · |X(x)| / |X(X_t x)|
    let logdet_normal = logdet + speed_start.ln() - speed_end.ln();
    Ok(MeanLogdetReport {
        mean_logdet_full: logdet / t,
        mean_logdet_normal: logdet_normal / t,
        discrepancy: (logdet_normal - logdet) / t,
    })
}

/// Result of the determinant-growth membership test.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LambdaDeltaResult {
    pub member: bool,
    /// First sampled time violating |det DX_t| < (1+δ)^t, if any.
    pub witness: Option<f64>,
    pub checked: usize,
    pub probe_start: f64,
    pub horizon: f64,
}

/// Check |det DX_t(x)| < (1+δ)^t at sample times spaced by `spacing` in
/// [probe_start, horizon].
pub fn lambda_delta_member(
    spec: &VectorFieldSpec,
    x: &V3,
    delta: f64,
    probe_start: f64,
    horizon: f64,
    spacing: f64,
    tol: f64,
) -> Result<LambdaDeltaResult> {
    if !(delta > 0.0) || !(horizon > probe_start) || !(spacing > 0.0) {
        return Err(FlowError::Config("need δ > 0, spacing > 0 and horizon > probe start".into()));
    }
    let log_bound = (1.0 + delta).ln();
    let mut p = *x;
    let mut logdet = 0.0;
    let mut t = 0.0;
    let mut checked = 0;
    let mut witness = None;
    while t < horizon - 1e-12 {
        let dt = spacing.min(horizon - t);
        let (q, dl) = spec.advance_with_logdet(&p, dt, tol)?;
        p = q;
        logdet += dl;
        t += dt;
        if t >= probe_start - 1e-12 {
            checked += 1;
            if logdet >= t * log_bound {
                witness = Some(t);
                break;
            }
        }
    }
    Ok(LambdaDeltaResult { member: witness.is_none(), witness, checked, probe_start, horizon })
}

/// One row of the determinant-tail table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MarkovRow {
    pub n: u32,
    pub time: f64,
    pub fraction: f64,
    pub bound: f64,
    pub std_error: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MarkovTable {
    pub rho: f64,
    pub s: f64,
    pub samples: u32,
    pub seed: u64,
    /// Box domains report the normalized analog over the trapping region.
    pub normalized_analog: bool,
    pub rows: Vec<MarkovRow>,
}

/// Monte Carlo fraction of points with |det DX_{ns}(x)| >= (1+ρ)^{ns}, per n,
/// against the tail bound (1+ρ)^{-ns}. The empirical fraction must stay below
/// bound + 3 standard errors.
pub fn markov_tail_probe(
    spec: &VectorFieldSpec,
    rho: f64,
    s: f64,
    n_max: u32,
    samples: u32,
    seed: u64,
    tol: f64,
) -> Result<MarkovTable> {
    if !(rho > 0.0 && s > 0.0) {
        return Err(FlowError::Config("need ρ > 0 and s > 0".into()));
    }
    let log_thresh = (1.0 + rho).ln();
    let counts: Vec<u32> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64 + 1);
            let mut p = spec.sample_domain(&mut rng);
            let mut logdet = 0.0;
            let mut hits = vec![0u32; n_max as usize];
            for n in 1..=n_max {
                match spec.advance_with_logdet(&p, s, tol) {
                    Ok((q, dl)) => {
                        p = q;
                        logdet += dl;
                        let t = n as f64 * s;
                        if logdet >= t * log_thresh {
                            hits[(n - 1) as usize] = 1;
                        }
                    }
                    Err(_) => break,
                }
            }
            hits
        })
        .reduce(
            || vec![0u32; n_max as usize],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b.iter()) {
                    *x += y;
                }
                a
            },
        );
    let mut rows = Vec::with_capacity(n_max as usize);
    for n in 1..=n_max {
        let t = n as f64 * s;
        let fraction = counts[(n - 1) as usize] as f64 / samples as f64;
        let bound = (1.0 + rho).powf(-t);
        let std_error = (bound * (1.0 - bound) / samples as f64).sqrt() + 1.0 / samples as f64;
        rows.push(MarkovRow {
            n,
            time: t,
            fraction,
            bound,
            std_error,
            pass: fraction <= bound + 3.0 * std_error,
        });
    }
    Ok(MarkovTable {
        rho,
        s,
        samples,
        seed,
        normalized_analog: matches!(spec.domain, crate::flowcore::DomainSpec::Box { .. }),
        rows,
    })
}

/// Uniform-in-time empirical measure along an orbit segment, with composite
/// Simpson weights so smooth integrands retain quadrature accuracy.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmpiricalMeasure {
    pub base: [f64; 3],
    pub time: f64,
    pub positions: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl EmpiricalMeasure {
    pub fn integrate(&self, mut f: impl FnMut(&V3) -> f64) -> f64 {
        self.positions
            .iter()
            .zip(self.weights.iter())
            .map(|(p, w)| w * f(&Vector3::new(p[0], p[1], p[2])))
            .sum()
    }
}

/// Time-average measure μ_{x,t} sampled at spacing <= `spacing`.
pub fn birkhoff_measure(
    spec: &VectorFieldSpec,
    x: &V3,
    t: f64,
    spacing: f64,
    tol: f64,
) -> Result<EmpiricalMeasure> {
    if !(t > 0.0 && spacing > 0.0) {
        return Err(FlowError::Config("birkhoff measure needs t > 0 and spacing > 0".into()));
    }
    // composite Simpson needs an even interval count
    let mut n = (t / spacing).ceil() as usize;
    n = n.max(2);
    if n % 2 == 1 {
        n += 1;
    }
    let h = t / n as f64;
    let mut positions = Vec::with_capacity(n + 1);
    let mut p = spec.domain.wrap(x);
    positions.push([p.x, p.y, p.z]);
    for _ in 0..n {
        p = spec.advance(&p, h, tol)?;
        positions.push([p.x, p.y, p.z]);
    }
    let mut weights = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let w = if k == 0 || k == n {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        weights.push(w);
    }
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    let start = spec.domain.wrap(x);
    Ok(EmpiricalMeasure { base: [start.x, start.y, start.z], time: t, positions, weights })
}

/// Positions visited in [t_transient, t_transient + t_window], snapped to an
/// ε-grid and deduplicated: an outer approximation of the omega-limit set at
/// this horizon.
pub fn omega_limit_sample(
    spec: &VectorFieldSpec,
    x: &V3,
    t_transient: f64,
    t_window: f64,
    grid_eps: f64,
    tol: f64,
) -> Result<Vec<[f64; 3]>> {
    if !(t_transient > 0.0 && t_window > 0.0 && grid_eps > 0.0) {
        return Err(FlowError::Config("omega-limit sampling needs positive horizons and grid".into()));
    }
    let start = spec.advance(x, t_transient, tol)?;
    let mut cells = std::collections::BTreeSet::new();
    let dt = (grid_eps * 0.5).min(0.1);
    spec.scan(&start, t_window, tol, dt, |_, p| {
        let c = [
            (p.x / grid_eps).floor() as i64,
            (p.y / grid_eps).floor() as i64,
            (p.z / grid_eps).floor() as i64,
        ];
        cells.insert(c);
        true
    })?;
    Ok(cells
        .into_iter()
        .map(|c| {
            [
                (c[0] as f64 + 0.5) * grid_eps,
                (c[1] as f64 + 0.5) * grid_eps,
                (c[2] as f64 + 0.5) * grid_eps,
            ]
        })
        .collect())
}

/// Wilson 95% score interval for a binomial proportion.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959963984540054f64;
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Fate of one weak-basin sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fate {
    HitsRegion,
    MissesRegion,
    LeftDomain,
    Undecided,
}

/// Monte Carlo weak-basin estimate with Wilson confidence interval.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BasinEstimate {
    pub region_id: String,
    pub samples: u64,
    pub hits: u64,
    pub misses: u64,
    pub left_domain: u64,
    pub undecided: u64,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub t_transient: f64,
    pub t_horizon: f64,
    pub seed: u64,
    pub empty_region: bool,
    pub fates: Vec<Fate>,
}

/// Estimate the Lebesgue measure of the weak basin of `region`: a sample is
/// a hit when its trajectory enters the region after the transient and is
/// inside again during the final quarter of the horizon (a recurrence proxy
/// for the omega-limit set meeting the region). Undecided samples count as
/// misses in the interval, keeping the estimate a conservative lower bound.
pub fn weak_basin_estimate(
    spec: &VectorFieldSpec,
    region: &RegionApprox,
    n: u64,
    t_transient: f64,
    t_horizon: f64,
    seed: u64,
    tol: f64,
) -> Result<BasinEstimate> {
    if region.is_empty() {
        return Ok(BasinEstimate {
            region_id: "dissipative-region".into(),
            samples: n,
            hits: 0,
            misses: 0,
            left_domain: 0,
            undecided: n,
            estimate: 0.0,
            ci_low: 0.0,
            ci_high: 0.0,
            t_transient,
            t_horizon,
            seed,
            empty_region: true,
            fates: vec![Fate::Undecided; n as usize],
        });
    }
    if n < 100 {
        return Err(FlowError::Config("weak basin estimate needs n >= 100".into()));
    }
    let check_dt = 0.25f64;
    let final_quarter = 0.75 * t_horizon;
    let fates: Vec<Fate> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i + 1);
            let x = spec.sample_domain(&mut rng);
            let mut entered = false;
            let mut recurred = false;
            let scan = spec.scan(&x, t_horizon, tol, check_dt, |t, p| {
                if t >= t_transient && region.contains(spec, p) {
                    entered = true;
                    if t >= final_quarter {
                        recurred = true;
                        return false; // hit confirmed
                    }
                }
                true
            });
            match scan {
                Ok(_) => {
                    if entered && recurred {
                        Fate::HitsRegion
                    } else if entered {
                        Fate::MissesRegion
                    } else {
                        Fate::Undecided
                    }
                }
                Err(FlowError::OutOfDomain { .. }) => Fate::LeftDomain,
                Err(_) => Fate::Undecided,
            }
        })
        .collect();
    let hits = fates.iter().filter(|f| **f == Fate::HitsRegion).count() as u64;
    let misses = fates.iter().filter(|f| **f == Fate::MissesRegion).count() as u64;
    let left = fates.iter().filter(|f| **f == Fate::LeftDomain).count() as u64;
    let undecided = fates.iter().filter(|f| **f == Fate::Undecided).count() as u64;
    let (lo, hi) = wilson_interval(hits, n);
    Ok(BasinEstimate {
        region_id: "dissipative-region".into(),
        samples: n,
        hits,
        misses,
        left_domain: left,
        undecided,
        estimate: hits as f64 / n as f64,
        ci_low: lo,
        ci_high: hi,
        t_transient,
        t_horizon,
        seed,
        empty_region: false,
        fates,
    })
}

/// One row of a trapped-set table: the estimated measure of points whose
/// orbit stays in U for all 0 <= t <= N.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrappedRow {
    pub n_time: f64,
    pub trapped: u64,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrappedTable {
    pub samples: u64,
    pub seed: u64,
    pub rows: Vec<TrappedRow>,
}

/// Monte Carlo estimate of m({x : X_t(x) ∈ U for 0 <= t <= N}) for each N in
/// `horizons` (shared samples, so the estimates are exactly monotone in N).
pub fn trapped_set_measure(
    spec: &VectorFieldSpec,
    u_region: &RegionSpec,
    horizons: &[f64],
    n: u64,
    seed: u64,
    tol: f64,
) -> Result<TrappedTable> {
    if horizons.is_empty() || n == 0 {
        return Err(FlowError::Config("trapped-set estimate needs horizons and samples".into()));
    }
    let n_max = horizons.iter().cloned().fold(0.0f64, f64::max);
    let check_dt = 0.2f64;
    let exit_times: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i + 1);
            let x = spec.sample_domain(&mut rng);
            if !u_region.contains(&spec.domain, &x) {
                return 0.0;
            }
            let mut exit = f64::INFINITY;
            let scan = spec.scan(&x, n_max, tol, check_dt, |t, p| {
                if !u_region.contains(&spec.domain, p) {
                    exit = t;
                    return false;
                }
                true
            });
            match scan {
                Ok(_) => exit,
                Err(FlowError::OutOfDomain { time, .. }) => exit.min(time),
                Err(_) => 0.0,
            }
        })
        .collect();
    let mut rows = Vec::with_capacity(horizons.len());
    for &h in horizons {
        let trapped = exit_times.iter().filter(|&&e| e > h).count() as u64;
        let (lo, hi) = wilson_interval(trapped, n);
        rows.push(TrappedRow {
            n_time: h,
            trapped,
            estimate: trapped as f64 / n as f64,
            ci_low: lo,
            ci_high: hi,
        });
    }
    Ok(TrappedTable { samples: n, seed, rows })
}

/// Attractor evidence for a candidate set against a trapping neighborhood.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AttractorVerdict {
    /// Every boundary sample of U has the field pointing strictly inward and
    /// flows back into U over [0, τ].
    pub trapping_ok: bool,
    /// Forward images of interior samples approach the candidate set within
    /// ε by the horizon.
    pub convergence_ok: bool,
    pub verdict: bool,
    pub boundary_samples: usize,
    pub interior_samples: usize,
    pub worst_inward: f64,
    pub worst_convergence: f64,
}

/// Check (i) strict inward flow on the boundary of U over [0, τ_trap] and
/// (ii) convergence of U-interior samples to the candidate set by `horizon`.
/// The candidate samples must lie inside U.
pub fn attractor_check(
    spec: &VectorFieldSpec,
    candidate: &[V3],
    u_region: &RegionSpec,
    tau_trap: f64,
    horizon: f64,
    eps_conv: f64,
    tol: f64,
) -> Result<AttractorVerdict> {
    for p in candidate {
        if !u_region.contains(&spec.domain, p) {
            return Err(FlowError::NotContained);
        }
    }
    let boundary = u_region.boundary_samples(8);
    let mut trapping_ok = true;
    let mut worst_inward = f64::NEG_INFINITY;
    for (p, outward) in &boundary {
        match spec.evaluate_field(p) {
            Ok(v) => {
                let comp = v.dot(outward) / v.norm();
                worst_inward = worst_inward.max(comp);
                if comp >= 0.0 {
                    trapping_ok = false;
                    continue;
                }
            }
            Err(_) => {
                trapping_ok = false;
                continue;
            }
        }
        if trapping_ok {
            if let Ok(q) = spec.advance(p, tau_trap, tol) {
                if !u_region.contains(&spec.domain, &q) {
                    trapping_ok = false;
                }
            } else {
                trapping_ok = false;
            }
        }
    }
    if boundary.is_empty() {
        worst_inward = -1.0; // no boundary: trapping holds vacuously
    }

    let interior = u_region.interior_samples(&spec.domain, 64);
    let mut convergence_ok = true;
    let mut worst_convergence: f64 = 0.0;
    for p in &interior {
        match spec.advance(p, horizon, tol) {
            Ok(q) => {
                let d = if candidate.is_empty() {
                    0.0
                } else {
                    polyline_distance(spec, &q, candidate, true)
                };
                worst_convergence = worst_convergence.max(d);
                if d > eps_conv {
                    convergence_ok = false;
                }
            }
            Err(_) => convergence_ok = false,
        }
    }
    Ok(AttractorVerdict {
        trapping_ok,
        convergence_ok,
        verdict: trapping_ok && convergence_ok,
        boundary_samples: boundary.len(),
        interior_samples: interior.len(),
        worst_inward,
        worst_convergence,
    })
}
