//! Cocycle surgery: prescribed small perturbations of normal cocycles and
//! their exact spectral consequences.
//!
//! Everything here is finite-dimensional linear algebra on 2×2 maps: damping
//! a cocycle to shrink its determinant, composing a shear that makes a
//! dissipative saddle monodromy traceless (hence a sink), and the rank-one
//! graph perturbation family that forces prescribed eigenvalues while keeping
//! every step within the allowed deviation. Perturbations stay at the cocycle
//! level; no vector field is synthesized.

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{FlowError, Result};
use crate::linalg::{eig_from_trace_det, spectral_norm2};
use crate::linpoincare::{mat2_rows, NormalCocycle};

pub use crate::splitting::non_domination_witness;

/// Spectral data of a dissipative saddle: real multipliers, the graph angle
/// between its stable and unstable normal directions, and the period.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SaddleData {
    pub lambda: f64,
    pub mu: f64,
    pub gamma: f64,
    pub tau: f64,
}

impl SaddleData {
    pub fn new(lambda: f64, mu: f64, gamma: f64, tau: f64) -> Result<Self> {
        if !(lambda.abs() < 1.0 && mu.abs() > 1.0) {
            return Err(FlowError::Config(format!(
                "saddle data needs |λ| < 1 < |μ|, got λ = {lambda}, μ = {mu}"
            )));
        }
        if !(gamma > 0.0) {
            return Err(FlowError::ZeroAngle);
        }
        if !(tau > 0.0) {
            return Err(FlowError::Config("period must be positive".into()));
        }
        Ok(SaddleData { lambda, mu, gamma, tau })
    }

    pub fn dissipative(&self) -> bool {
        (self.lambda * self.mu).abs() < 1.0
    }

    fn require_dissipative(&self) -> Result<()> {
        let p = (self.lambda * self.mu).abs();
        if p < 1.0 {
            Ok(())
        } else {
            Err(FlowError::NotDissipative(p))
        }
    }
}

/// Derived perturbation allowances: the Franks allowance ε, a norm bound C
/// for unit-time cocycle legs, and the derived ε₀, ε₁, m, δ satisfying the
/// budget inequalities.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PerturbationBudget {
    pub c_bound: f64,
    pub eps: f64,
    pub lambda_rate: f64,
    pub alpha: f64,
    pub eps0: f64,
    pub eps1: f64,
    pub m: u32,
    pub delta: f64,
}

impl PerturbationBudget {
    /// Re-substitute the four defining inequalities.
    pub fn check(&self) -> [bool; 4] {
        [
            (2.0 * self.eps0 + self.eps0 * self.eps0) * self.c_bound <= self.eps,
            (1.0 + self.eps1) * self.lambda_rate < 1.0,
            self.eps1 < self.alpha / (1.0 + self.alpha) * self.eps0,
            self.eps1 * (1.0 + self.eps1).powi(self.m as i32) >= 2.0 / self.alpha + 4.0,
        ]
    }

    pub fn valid(&self) -> bool {
        self.check().iter().all(|&b| b)
    }
}

/// Pick ε₀, ε₁, m, δ from the norm bound, allowance, contraction rate and
/// angle floor: ε₀ = min(1, ε/3C); ε₁ just inside its two ceilings; m the
/// least integer clearing the growth requirement; δ sized so each damped map
/// moves by less than ε.
pub fn choose_budget(c_bound: f64, eps: f64, lambda_rate: f64, alpha: f64) -> Result<PerturbationBudget> {
    if !(c_bound > 0.0 && eps > 0.0 && alpha > 0.0) {
        return Err(FlowError::Infeasible("C, ε, α must be positive".into()));
    }
    if !(lambda_rate > 0.0 && lambda_rate < 1.0) {
        return Err(FlowError::Infeasible("contraction rate must lie in (0,1)".into()));
    }
    let eps0 = (eps / (3.0 * c_bound)).min(1.0);
    let cap_angle = alpha / (1.0 + alpha) * eps0;
    let cap_rate = (1.0 - lambda_rate) / (2.0 * lambda_rate);
    let eps1 = 0.99 * cap_angle.min(cap_rate);
    if !(eps1 > 0.0) {
        return Err(FlowError::Infeasible("no positive ε₁ satisfies the constraints".into()));
    }
    let target = 2.0 / alpha + 4.0;
    // closed-form guess, then settle the least integer by direct checks
    let mut m = ((target / eps1).ln() / (1.0 + eps1).ln()).ceil().max(0.0) as u32;
    let ok = |m: u32| eps1 * (1.0 + eps1).powi(m as i32) >= target;
    while !ok(m) {
        m += 1;
    }
    while m > 0 && ok(m - 1) {
        m -= 1;
    }
    let q = 0.99 * (eps / c_bound).min(0.5);
    let delta = -2.0 * (1.0 - q).ln();
    let budget = PerturbationBudget { c_bound, eps, lambda_rate, alpha, eps0, eps1, m, delta };
    if !budget.valid() {
        return Err(FlowError::Infeasible(format!("derived budget fails re-substitution: {:?}", budget.check())));
    }
    Ok(budget)
}

/// The graph-operator norm bound: a rank-one perturbation supported on a
/// splitting with angle at least α has norm at most ((1+α)/α) · coefficient.
pub fn graph_norm_bound(alpha: f64, coefficient: f64) -> f64 {
    (1.0 + alpha) / alpha * coefficient
}

/// The angle-collapse level 2 / (ε₁(1+ε₁)^m − 4): with a compliant budget
/// this does not exceed the angle floor α, which closes the contradiction.
pub fn angle_collapse_bound(eps1: f64, m: u32) -> Result<f64> {
    let growth = eps1 * (1.0 + eps1).powi(m as i32);
    if growth <= 4.0 {
        return Err(FlowError::DenominatorNonpositive(growth));
    }
    Ok(2.0 / (growth - 4.0))
}

/// Saddle monodromy in the orthogonal splitting N^s ⊕ (N^s)^⊥ when the
/// unstable direction makes graph angle γ with the stable one:
/// [[λ, (μ−λ)/γ], [0, μ]].
pub fn saddle_matrix_form(data: &SaddleData) -> Result<Matrix2<f64>> {
    if !(data.gamma > 0.0) {
        return Err(FlowError::ZeroAngle);
    }
    Ok(Matrix2::new(
        data.lambda,
        (data.mu - data.lambda) / data.gamma,
        0.0,
        data.mu,
    ))
}

/// The unipotent shear [[1, 0], [((λ+μ)/(λ−μ))γ, 1]].
pub fn shear_matrix(data: &SaddleData) -> Result<Matrix2<f64>> {
    if data.lambda == data.mu {
        return Err(FlowError::EqualEigenvalues);
    }
    Ok(Matrix2::new(
        1.0,
        0.0,
        (data.lambda + data.mu) / (data.lambda - data.mu) * data.gamma,
        1.0,
    ))
}

/// Spectral report of the sheared monodromy A·P: traceless with determinant
/// λμ, so its eigenvalues share modulus √|λμ| < 1 — a sink.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SinkReport {
    pub matrix: [[f64; 2]; 2],
    pub trace: f64,
    pub det: f64,
    pub eigenvalues: [[f64; 2]; 2],
    pub modulus: f64,
    /// λμ > 0 yields a genuinely complex pair.
    pub complex_pair: bool,
}

/// Compose the shear with the saddle form and report the spectral outcome.
/// Requires |λμ| < 1 (otherwise the sink conclusion fails).
pub fn sink_via_shear(data: &SaddleData) -> Result<SinkReport> {
    data.require_dissipative()?;
    let p = saddle_matrix_form(data)?;
    let a = shear_matrix(data)?;
    let m = a * p;
    let trace = m.trace();
    let det = m.determinant();
    let (e1, e2) = eig_from_trace_det(trace, det);
    Ok(SinkReport {
        matrix: mat2_rows(&m),
        trace,
        det,
        eigenvalues: [[e1.re, e1.im], [e2.re, e2.im]],
        modulus: e1.norm().max(e2.norm()),
        complex_pair: data.lambda * data.mu > 0.0,
    })
}

/// A δ-damped cocycle together with the bookkeeping of how far each map moved.
#[derive(Debug, Clone)]
pub struct DampedCocycle {
    pub cocycle: NormalCocycle,
    /// ||L_i − P_i|| per leg.
    pub deviations: Vec<f64>,
    /// Exact total determinant factor e^{−τδ}.
    pub det_factor: f64,
}

/// Scale each leg map by e^{−Δt·δ/2}, so the determinant of the product
/// gains exactly e^{−τδ}. Partition gaps must lie in (0, 1].
pub fn delta_damped_cocycle(cocycle: &NormalCocycle, delta: f64) -> Result<DampedCocycle> {
    if !(delta > 0.0) {
        return Err(FlowError::Config("damping δ must be positive".into()));
    }
    for w in cocycle.partition.windows(2) {
        let gap = w[1] - w[0];
        if !(gap > 0.0 && gap <= 1.0) {
            return Err(FlowError::BadPartition(format!("damping requires gaps in (0,1], got {gap}")));
        }
    }
    let mut damped = cocycle.clone();
    let mut deviations = Vec::with_capacity(cocycle.maps.len());
    for (i, w) in cocycle.partition.windows(2).enumerate() {
        let gap = w[1] - w[0];
        let scale = (-gap * delta / 2.0).exp();
        deviations.push((1.0 - scale).abs() * spectral_norm2(&cocycle.maps[i]));
        damped.maps[i] *= scale;
        damped.dets[i] *= scale * scale;
    }
    let tau = cocycle.total_time();
    Ok(DampedCocycle { cocycle: damped, deviations, det_factor: (-tau * delta).exp() })
}

/// Diagonal synthetic cocycle over the standard partition of [0, τ]: unit
/// gaps plus a final fractional gap, each leg contracting/expanding at the
/// per-unit rates λ^{1/τ}, μ^{1/τ}. Requires positive multipliers.
pub fn synthetic_diagonal_cocycle(data: &SaddleData) -> Result<(Vec<Matrix2<f64>>, Vec<f64>)> {
    if !(data.lambda > 0.0 && data.mu > 0.0) {
        return Err(FlowError::Config("synthetic diagonal cocycle needs positive multipliers".into()));
    }
    let tau = data.tau;
    let n = tau.floor() as usize;
    let r = tau - n as f64;
    let ql = data.lambda.powf(1.0 / tau);
    let qm = data.mu.powf(1.0 / tau);
    let mut maps = Vec::new();
    let mut gaps = Vec::new();
    for _ in 0..n {
        maps.push(Matrix2::new(ql, 0.0, 0.0, qm));
        gaps.push(1.0);
    }
    // final fractional leg (identity when τ is an integer)
    maps.push(Matrix2::new(ql.powf(r), 0.0, 0.0, qm.powf(r)));
    gaps.push(r);
    Ok((maps, gaps))
}

/// Outcome of the rank-one graph perturbation family.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PerturbationFamily {
    /// The perturbed leg maps L_j (row-major).
    pub perturbed: Vec<[[f64; 2]; 2]>,
    /// ||L_j − P_j|| per leg.
    pub deviations: Vec<f64>,
    /// ||P − I||, ||S − I||, max_j ||T_j − I||.
    pub p_dev: f64,
    pub s_dev: f64,
    pub t_dev: f64,
    /// Forced multipliers of the perturbed monodromy.
    pub forced_lambda: f64,
    pub forced_mu: f64,
    /// Computed eigenvalues of the actual product.
    pub product_eigen: [[f64; 2]; 2],
    pub product_det: f64,
    /// Contraction factor (1+ε₁)^{2m+1−n} applied to λ and to the determinant.
    pub det_ratio: f64,
}

fn in_basis(basis: &Matrix2<f64>, cell: Matrix2<f64>) -> Result<Matrix2<f64>> {
    let inv = basis
        .try_inverse()
        .ok_or_else(|| FlowError::MissingDirections("degenerate direction basis".into()))?;
    Ok(basis * cell * inv)
}

/// Build the perturbed cocycle of the eigenvalue-forcing construction:
/// a rank-one kick P at the start, per-step diagonal stretches T_j on the
/// stable line ((1+ε₁) up to step m, (1+ε₁)^{-1} after), and the closing
/// correction S that restores μ exactly. The stable multiplier contracts by
/// (1+ε₁)^{2m+1−n}; dissipativity is preserved.
///
/// `maps`/`gaps` follow the standard partition (unit gaps + fractional tail);
/// `u` and `v` are the unstable/stable directions at the base point.
pub fn graph_perturbation_family(
    maps: &[Matrix2<f64>],
    gaps: &[f64],
    data: &SaddleData,
    budget: &PerturbationBudget,
    u: &Vector2<f64>,
    v: &Vector2<f64>,
) -> Result<PerturbationFamily> {
    data.require_dissipative()?;
    if maps.len() != gaps.len() || maps.is_empty() {
        return Err(FlowError::BadPartition("maps and gaps must align".into()));
    }
    let tau = data.tau;
    let m = budget.m;
    if !(tau > 2.0 * m as f64 + 1.0) {
        return Err(FlowError::PeriodTooShort { tau, m });
    }
    let total: f64 = gaps.iter().sum();
    if (total - tau).abs() > 1e-9 * (1.0 + tau) {
        return Err(FlowError::BadPartition(format!("gaps sum to {total}, period is {tau}")));
    }
    let n_legs = maps.len(); // n unit gaps + the fractional leg
    let n = n_legs - 1;
    let eps1 = budget.eps1;

    // transported stable/unstable directions at each partition point
    let mut stable = Vec::with_capacity(n_legs + 1);
    let mut unstable = Vec::with_capacity(n_legs + 1);
    stable.push(v.normalize());
    unstable.push(u.normalize());
    for map in maps {
        let s: Vector2<f64> = map * stable.last().unwrap();
        let w: Vector2<f64> = map * unstable.last().unwrap();
        stable.push(s.normalize());
        unstable.push(w.normalize());
    }

    // T_j: stretch the stable line, identity on the unstable one
    let t_cell = |j: u32| {
        let c = if j <= m { 1.0 + eps1 } else { 1.0 / (1.0 + eps1) };
        Matrix2::new(c, 0.0, 0.0, 1.0)
    };
    let basis_at = |idx: usize| Matrix2::from_columns(&[stable[idx], unstable[idx]]);

    // P(v) = v, P(u) = u + ε₁ v at the base point
    let b0 = basis_at(0);
    let p_map = in_basis(&b0, Matrix2::new(1.0, eps1, 0.0, 1.0))?;
    // S(v) = v, S(u) = u − ε₁(1+ε₁)^{2m+1−n} λ μ^{-1} v at the return point
    let s_coef = eps1 * (1.0 + eps1).powi(2 * m as i32 + 1 - n as i32) * data.lambda / data.mu;
    let b_end = basis_at(n_legs);
    let s_map = in_basis(&b_end, Matrix2::new(1.0, -s_coef, 0.0, 1.0))?;

    let mut perturbed = Vec::with_capacity(n_legs);
    let mut deviations = Vec::with_capacity(n_legs);
    let mut t_dev: f64 = 0.0;
    for (j, base) in maps.iter().enumerate() {
        let l = if j == 0 {
            let t1 = in_basis(&basis_at(1), t_cell(1))?;
            t1 * base * p_map
        } else if j < n {
            let tj = in_basis(&basis_at(j + 1), t_cell(j as u32 + 1))?;
            tj * base
        } else {
            let t0 = in_basis(&b_end, t_cell(0))?;
            s_map * t0 * base
        };
        deviations.push(spectral_norm2(&(l - base)));
        perturbed.push(l);
    }
    for j in 0..=n as u32 {
        let idx = if j == 0 { n_legs } else { j as usize };
        let tj = in_basis(&basis_at(idx), t_cell(j))?;
        t_dev = t_dev.max(spectral_norm2(&(tj - Matrix2::identity())));
    }

    let mut product = Matrix2::identity();
    for l in &perturbed {
        product = l * product;
    }
    let det_ratio = (1.0 + eps1).powi(2 * m as i32 + 1 - n as i32);
    let (e1, e2) = eig_from_trace_det(product.trace(), product.determinant());
    Ok(PerturbationFamily {
        perturbed: perturbed.iter().map(mat2_rows).collect(),
        deviations,
        p_dev: spectral_norm2(&(p_map - Matrix2::identity())),
        s_dev: spectral_norm2(&(s_map - Matrix2::identity())),
        t_dev,
        forced_lambda: det_ratio * data.lambda,
        forced_mu: data.mu,
        product_eigen: [[e1.re, e1.im], [e2.re, e2.im]],
        product_det: product.determinant(),
        det_ratio,
    })
}

/// Full machine-readable surgery report for one saddle datum.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SurgeryReport {
    pub schema_version: u32,
    pub input: SaddleData,
    pub saddle_form: [[f64; 2]; 2],
    pub shear: [[f64; 2]; 2],
    pub shear_dev: f64,
    pub sink: SinkReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget: Option<PerturbationBudget>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget_margins: Option<[f64; 4]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub angle_collapse: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<PerturbationFamily>,
}

/// Run the full surgery pipeline on one saddle datum: matrix forms, the
/// sheared sink, and (when budget inputs are supplied) the derived budget,
/// the collapse level and the eigenvalue-forcing family on the synthetic
/// diagonal cocycle.
pub fn surgery_report(
    data: &SaddleData,
    budget_inputs: Option<(f64, f64, f64, f64)>,
) -> Result<SurgeryReport> {
    let p = saddle_matrix_form(data)?;
    let a = shear_matrix(data)?;
    let sink = sink_via_shear(data)?;
    let mut report = SurgeryReport {
        schema_version: 1,
        input: *data,
        saddle_form: mat2_rows(&p),
        shear: mat2_rows(&a),
        shear_dev: spectral_norm2(&(a - Matrix2::identity())),
        sink,
        budget: None,
        budget_margins: None,
        angle_collapse: None,
        family: None,
    };
    if let Some((c, eps, rate, alpha)) = budget_inputs {
        let budget = choose_budget(c, eps, rate, alpha)?;
        let growth = budget.eps1 * (1.0 + budget.eps1).powi(budget.m as i32);
        report.budget_margins = Some([
            budget.eps - (2.0 * budget.eps0 + budget.eps0 * budget.eps0) * budget.c_bound,
            1.0 - (1.0 + budget.eps1) * budget.lambda_rate,
            budget.alpha / (1.0 + budget.alpha) * budget.eps0 - budget.eps1,
            growth - (2.0 / budget.alpha + 4.0),
        ]);
        report.angle_collapse = angle_collapse_bound(budget.eps1, budget.m).ok();
        if data.lambda > 0.0 && data.mu > 0.0 && data.tau > 2.0 * budget.m as f64 + 1.0 {
            let (maps, gaps) = synthetic_diagonal_cocycle(data)?;
            report.family = Some(graph_perturbation_family(
                &maps,
                &gaps,
                data,
                &budget,
                &Vector2::new(0.0, 1.0),
                &Vector2::new(1.0, 0.0),
            )?);
        }
        report.budget = Some(budget);
    }
    Ok(report)
}

/// Complex eigenvalues of a 2×2 matrix, ordered by modulus.
pub fn matrix_eigenvalues(m: &Matrix2<f64>) -> (Complex64, Complex64) {
    eig_from_trace_det(m.trace(), m.determinant())
}
