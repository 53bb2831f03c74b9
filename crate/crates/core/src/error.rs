use thiserror::Error;

use crate::index::IndexReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("symbol is not invertible: smallest singular value {floor:.3e} at theta = {theta:.6}")]
    NotInvertible { floor: f64, theta: f64 },

    #[error("inverse residual {residual:.3e} exceeds tolerance {tol:.1e} at degree {target}")]
    DegreeTooSmall { residual: f64, tol: f64, target: usize },

    #[error("argument jump {jump:.3} at sample {step} exceeds pi/2; increase quadrature points")]
    QuadratureUnstable { step: usize, jump: f64 },

    #[error("homotopy leaves the margin: distance {distance:.4e} >= {margin:.4e}")]
    MarginViolated { distance: f64, margin: f64 },

    #[error("truncation {k_max} is smaller than symbol degree {degree}")]
    TruncationTooSmall { k_max: usize, degree: usize },

    #[error("index did not stabilize over truncations {:?}", .0.truncations)]
    NoConvergence(Box<IndexReport>),

    #[error("quadrature budget exceeded: {0}")]
    QuadratureBudgetExceeded(String),

    #[error("no Hilbert multiplier sign reproduces the eigenrelations (best error {best:.3e})")]
    ConventionLockFailure { best: f64 },

    #[error("block split violated in {block}: norm {norm:.3e}")]
    SplitViolated { block: String, norm: f64 },

    #[error("bound violated in {family}: value {value:.6e} > bound {bound:.6e} at {witness}")]
    BoundViolated { family: String, value: f64, bound: f64, witness: String },

    #[error("basis mismatch: {0}")]
    BasisMismatch(String),

    #[error("u_inv is not an inverse of u: interior defect {defect:.3e}")]
    NotInverse { defect: f64 },

    #[error("grid too small: {0}")]
    GridTooSmall(String),

    #[error("ill-conditioned: {0}")]
    IllConditioned(String),

    #[error("eigendecomposition failed: {0}")]
    EigenFailure(String),

    #[error("invalid symbol: {0}")]
    InvalidSymbol(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
