//! Error types shared across the toolkit.

use nalgebra::Vector3;
use thiserror::Error;

/// Errors raised by flow evaluation, integration and the derived analyses.
#[derive(Debug, Clone, Error)]
pub enum FlowError {
    /// The field norm dropped below the singularity floor. The toolkit only
    /// handles nonsingular fields; a near-zero velocity corrupts the normal
    /// bundle and every quantity built on it.
    #[error("singularity detected at ({0:.6}, {1:.6}, {2:.6}): |X| = {3:.3e}")]
    SingularityDetected(f64, f64, f64, f64),

    /// A point or trajectory left the declared domain.
    #[error("out of domain at t = {time:.6}: ({point:?})")]
    OutOfDomain { point: [f64; 3], time: f64 },

    /// Adaptive step control could not satisfy the tolerance.
    #[error("step size underflow at t = {0:.6}")]
    StepSizeUnderflow(f64),

    /// No section return was found within the integration horizon.
    #[error("no return to section within horizon {0}")]
    NoReturn(f64),

    /// Newton iteration on the return-map displacement failed to converge.
    #[error("Newton iteration diverged: {0}")]
    NewtonDiverged(String),

    /// The section is not transversal to the field at its anchor.
    #[error("section not transversal to the field at its anchor")]
    NonTransversalSection,

    /// An operation requiring a saddle orbit received a different class.
    #[error("orbit is not a saddle")]
    NotASaddle,

    /// An operation requiring a dissipative saddle received something else.
    #[error("orbit is not a dissipative saddle")]
    NotADissipativeSaddle,

    /// graph angle is undefined for perpendicular pairs (F = E^⊥).
    #[error("graph angle undefined: subspaces are perpendicular")]
    PerpendicularPair,

    /// A certificate needs direction data at partition points that is missing.
    #[error("missing direction data: {0}")]
    MissingDirections(String),

    /// Saddle matrix form requires a positive angle.
    #[error("saddle matrix form undefined for zero angle")]
    ZeroAngle,

    /// Shear matrix requires distinct eigenvalues.
    #[error("shear matrix undefined for equal eigenvalues")]
    EqualEigenvalues,

    /// A surgery construction requires |λμ| < 1.
    #[error("not dissipative: |λμ| = {0} >= 1")]
    NotDissipative(f64),

    /// graph_perturbation_family needs τ > 2m + 1.
    #[error("period too short: τ = {tau} requires τ > 2m + 1 with m = {m}")]
    PeriodTooShort { tau: f64, m: u32 },

    /// No perturbation budget satisfies the constraints.
    #[error("no feasible perturbation budget: {0}")]
    Infeasible(String),

    /// angle_collapse_bound requires ε₁(1+ε₁)^m > 4.
    #[error("denominator nonpositive: ε₁(1+ε₁)^m = {0} <= 4")]
    DenominatorNonpositive(f64),

    /// A damped cocycle requires partition gaps in (0, 1].
    #[error("bad partition: {0}")]
    BadPartition(String),

    /// The candidate neighborhood does not contain the candidate set.
    #[error("candidate neighborhood does not contain the candidate set")]
    NotContained,

    /// Configuration or input-file problem.
    #[error("config error: {0}")]
    Config(String),
}

impl FlowError {
    pub(crate) fn singularity(x: &Vector3<f64>, norm: f64) -> Self {
        FlowError::SingularityDetected(x.x, x.y, x.z, norm)
    }

    pub(crate) fn out_of_domain(x: &Vector3<f64>, time: f64) -> Self {
        FlowError::OutOfDomain {
            point: [x.x, x.y, x.z],
            time,
        }
    }
}

pub type Result<T> = std::result::Result<T, FlowError>;
