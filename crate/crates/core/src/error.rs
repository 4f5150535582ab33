use thiserror::Error;

/// Errors produced by tensor operations and solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid mode selection: {0}")]
    InvalidModes(String),

    #[error("invalid index set: {0}")]
    InvalidIndexSet(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// The target subspace meets the anchor's orthogonal complement; the caller
    /// has to re-anchor.
    #[error("subspace of mode {mode} lies outside the anchor chart")]
    OutOfChart { mode: usize },

    #[error("sampled rows span a space of dimension {found}, need at least {needed}")]
    DegenerateSample { found: usize, needed: usize },

    #[error("singular pivot block {block}")]
    SingularPivot { block: String },

    #[error("pivot determinant is zero")]
    ZeroDeterminant,

    #[error("degenerate start: {0}")]
    DegenerateStart(String),

    #[error("singular Jacobian (condition estimate {condition:e})")]
    SingularJacobian { condition: f64 },

    #[error("Newton iteration diverged")]
    Divergence,

    #[error("eigen-gap {gap:e} of mode {mode} below threshold")]
    DegenerateSpectrum { mode: usize, gap: f64 },

    #[error("Newton step decreased the objective from {before} to {after}")]
    ObjectiveDecrease { before: f64, after: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
