use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error)]
pub enum LmmError {
    #[error("invalid mesh: {0}")]
    Mesh(String),

    #[error("grid function belongs to mesh {found:#018x}, expected {expected:#018x}")]
    MeshMismatch { expected: u64, found: u64 },

    #[error("length mismatch: expected {expected} values, got {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("negative coefficient a(x) = {value} at node {node}")]
    NegativeCoefficient { node: usize, value: f64 },

    #[error("linear solve did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    LinearSolve { iterations: usize, residual: f64 },

    #[error("matrix is not positive definite (pivot {pivot} = {value:.3e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("support space is rank deficient at input {index}")]
    RankDeficient { index: usize },

    #[error("ascent direction lies in the support space")]
    DirectionInSupport,

    #[error("direction is not orthogonal to [L, v] (residual {0:.3e})")]
    NotOrthogonal(f64),

    #[error("cannot normalize a zero initial direction")]
    ZeroDirection,

    #[error("degenerate peak: t = {t:.3e} below t_min = {t_min:.1e}")]
    DegeneratePeak { t: f64, t_min: f64 },

    #[error("peak search failed: {0}")]
    PeakSearch(String),

    #[error("energy unbounded above on the half subspace (value {0:.3e})")]
    Unbounded(f64),

    #[error("not a descent direction: <E'(w), d> = {0:.3e}")]
    NotDescent(f64),

    #[error("line search failed: {0}")]
    LineSearch(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("region predicate: {0}")]
    Region(String),

    #[error("no convergence after {iterations} outer iterations (|g| = {grad_norm:.3e}, sup residual = {sup_residual:.3e})")]
    MaxIterations {
        iterations: usize,
        grad_norm: f64,
        sup_residual: f64,
    },

    #[error("plan entry {entry}: {message}")]
    Plan { entry: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = LmmError> = std::result::Result<T, E>;
