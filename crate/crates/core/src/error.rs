use thiserror::Error;

/// Errors raised by the geometric and synthesis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("polyhedron is empty")]
    EmptyPolyhedron,

    #[error("polyhedron is unbounded and not a cone; vertices alone do not describe it")]
    UnboundedNonCone,

    #[error("set does not contain the origin")]
    OriginNotContained,

    #[error("Fourier-Motzkin elimination exceeded the budget of {budget} rows")]
    ComplexityBudgetExceeded { budget: usize },

    #[error("pieces {0} and {1} overlap in a full-dimensional set")]
    OverlappingPieces(usize, usize),

    #[error("pieces do not cover the space: {0}")]
    NotCovering(String),

    #[error("piece {0} is not full-dimensional")]
    DegeneratePiece(usize),

    #[error("no piece of the partition contains the point")]
    NoPieceContains,

    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPsd(f64),

    #[error("pieces {i} and {j} disagree on their common face (residual {residual:e})")]
    InconsistentFace { i: usize, j: usize, residual: f64 },

    #[error("copositivity hierarchy level {0} is not supported; only level 1 is implemented")]
    UnsupportedHierarchyLevel(usize),

    #[error("no invariance constraint was generated: every cone intersection is trivial")]
    EmptyIntersectionEverywhere,

    #[error("program is infeasible")]
    Infeasible,

    #[error("program is unbounded")]
    Unbounded,

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
