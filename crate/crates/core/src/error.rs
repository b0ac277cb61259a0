use thiserror::Error;

use crate::linking::MinMaxResult;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("field is not Hermitian-symmetric; real output requested")]
    NonHermitian,

    #[error("invalid exponent q = {0} (need q >= 1)")]
    InvalidExponent(f64),

    #[error("order s = {0} outside (0, 1)")]
    OrderOutOfRange(f64),

    #[error("m = 0 with a nonzero k = 0 mode: the constant profile has infinite extension energy")]
    MasslessExtension,

    #[error("Richardson extrapolation residual {residual:.3e} exceeds tolerance {tol:.3e}")]
    ProbeTooCoarse { residual: f64, tol: f64 },

    #[error("singular tridiagonal system at row {0}")]
    SingularSystem(usize),

    #[error("unknown nonlinearity label `{0}`")]
    UnknownLabel(String),

    #[error("lattice sum diverges for q = {q}: exponent {exponent:.4} must exceed N = {dim}")]
    DivergentSum { q: f64, exponent: f64, dim: usize },

    #[error("linking geometry infeasible: {0}")]
    GeometryInfeasible(String),

    #[error("min-max level stagnated at {:.6e} with Cerami measure {:.3e}", .0.alpha, .0.residual)]
    StagnationWithoutConvergence(Box<MinMaxResult>),

    #[error("iteration collapsed to the trivial critical point (|u|_H = {:.3e})", .0.candidate.hs_norm())]
    ConvergedToTrivial(Box<MinMaxResult>),

    #[error("no convergence after {} iterations (Cerami measure {:.3e})", .0.iterations, .0.residual)]
    MaxIterations(Box<MinMaxResult>),

    #[error("level alpha_m = {alpha:.6e} at m = {mass} outside [{k1:.6e}, {k2:.6e}]")]
    LevelOutOfBounds { mass: f64, alpha: f64, k1: f64, k2: f64 },

    #[error("limit field is trivial: |u0|_L^(p+1) = {norm:.3e} below floor {floor:.3e}")]
    TrivialLimit { norm: f64, floor: f64 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
