//! Crate-wide error type.

/// Errors surfaced by grids, solvers and experiment drivers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("component {component} out of range for a {q}-component field")]
    ComponentOutOfRange { component: usize, q: usize },

    #[error("state fields live on different grids")]
    GridMismatch,

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("zero diagonal entry in row {0}; stationary iteration undefined")]
    ZeroDiagonal(usize),

    #[error("singular matrix (pivot {0} vanished)")]
    SingularMatrix(usize),

    #[error("stability polynomial of `{tableau}` has no real root in (0, {upper}]")]
    NoRealRoot { tableau: String, upper: f64 },

    #[error("invalid Butcher tableau: {0}")]
    InvalidTableau(String),

    #[error("unknown tableau `{0}` (expected euler, heun, ssprk3 or a JSON file)")]
    UnknownTableau(String),

    #[error("nonpositive density or pressure (rho = {rho:e}, p = {p:e})")]
    VacuumState { rho: f64, p: f64 },

    #[error("peak tracking needs unimodal data: {0}")]
    NonUnimodal(String),

    #[error("invalid experiment spec: {0}")]
    InvalidSpec(String),

    #[error("solver failure: {0}")]
    SolverFailure(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("JSON: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
