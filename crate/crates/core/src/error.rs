use thiserror::Error;

/// Errors shared across the fusion library.
#[derive(Debug, Error)]
pub enum OciError {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix must have dimension >= 1")]
    EmptyMatrix,

    #[error("{context}: not positive definite (min eigenvalue {min_eig:.3e})")]
    NotPositiveDefinite { context: &'static str, min_eig: f64 },

    #[error("{context}: not positive semidefinite (min eigenvalue {min_eig:.3e})")]
    NotPositiveSemidefinite { context: &'static str, min_eig: f64 },

    #[error("{context}: matrix is singular within tolerance")]
    Singular { context: &'static str },

    #[error("component bound has an all-zero selector row (row {row})")]
    ZeroSelectorRow { row: usize },

    #[error("simplex weights invalid: {reason}")]
    InvalidWeights { reason: String },

    #[error("weight vector has length {found}, structure has {expected} bounds")]
    WeightLengthMismatch { expected: usize, found: usize },

    #[error("ellipsoid boundary points only supported for dimension 2 or 3, got {dim}")]
    UnsupportedDimension { dim: usize },

    #[error("invalid tolerances: {reason}")]
    InvalidTolerances { reason: String },

    #[error("H is not full column rank (rank {rank} < {cols})")]
    HRankDeficient { rank: usize, cols: usize },

    #[error("problem is infeasible: {reason}")]
    Infeasible { reason: String },

    #[error("no projection bound exists: rank(W) = {rank_w} but rank([W; D]) = {rank_wd}")]
    NoProjectionBound { rank_w: usize, rank_wd: usize },

    #[error("numerical trouble: {details}")]
    NumericalTrouble { details: String },

    #[error("precondition violated: {reason}")]
    PreconditionViolated { reason: String },

    #[error("simulation failed at step {step}, vehicle {vehicle}: {source}")]
    Simulation {
        step: usize,
        vehicle: usize,
        #[source]
        source: Box<OciError>,
    },
}

pub type Result<T> = std::result::Result<T, OciError>;
