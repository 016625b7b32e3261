use thiserror::Error;

use crate::pfaffian::DivisorId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("gamma_{0} is a non-positive integer; the series denominator vanishes")]
    GammaNonPositiveInteger(usize),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("operation requires N = 1, got N = {0}")]
    NotThomaeCase(usize),

    #[error("shift index {n} out of range 0..={max}")]
    ShiftOutOfRange { n: usize, max: usize },

    #[error("point outside the series polydisc: max|x_i| = {max_abs} > {limit}")]
    OutsidePolydisc { max_abs: f64, limit: f64 },

    #[error("series not converging at order {order} (tail estimate {tail_bound:e})")]
    NonConvergent { order: usize, tail_bound: f64 },

    #[error("gamma function pole at {0}")]
    GammaPole(String),

    #[error("point lies on the singular locus ({0})")]
    OnSingularLocus(DivisorId),

    #[error("non-generic parameters: {0}")]
    NonGenericParameters(String),

    #[error("residue matrix has no triangular/rank-one block structure")]
    UnstructuredResidue,

    #[error("step size underflow at t = {t} (h = {h:e}); path too close to the singular locus")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("path comes within {distance:e} of the singular locus (limit {limit:e})")]
    NearSingularLocus { distance: f64, limit: f64 },

    #[error("integrator exceeded {0} steps without meeting the tolerance")]
    ToleranceNotMet(usize),

    #[error("path is invalid: {0}")]
    InvalidPath(String),

    #[error("non-integrable exponent {exponent} on cube axis {axis}")]
    NonIntegrableExponent { axis: usize, exponent: String },

    #[error("inadmissible chamber: {0}")]
    InadmissibleChamber(String),

    #[error("quadrature not converged: error estimate {estimate:e} exceeds {tolerance:e}")]
    QuadratureNotConverged { estimate: f64, tolerance: f64 },

    #[error("local factorization violated at {entry}: observed rate {observed}, expected {expected}")]
    FactorizationViolated { entry: String, observed: f64, expected: f64 },

    #[error("deformation points coincide or hit 0/1: {0}")]
    CoincidentDeformationPoints(String),

    #[error("evaluation point {0} is a singular point of the system")]
    SingularPoint(String),

    #[error("reduction needs L >= 3, got L = {0}")]
    RankTooSmall(usize),

    #[error("matrix is singular")]
    SingularMatrix,

    #[error("eigenvalue iteration did not converge")]
    EigenSolverFailed,

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("check {name} failed: observed {observed:e}, tolerance {tolerance:e}")]
    CheckFailed { name: String, observed: f64, tolerance: f64 },
}
