use thiserror::Error;

/// Errors raised by the library. Each variant maps to a stable upper-case code.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("half-space intersection is unbounded")]
    Unbounded,
    #[error("polytope is empty or has no interior")]
    EmptyOrLowDim,
    #[error("points do not affinely span the ambient space")]
    LowDim,
    #[error("origin is not strictly inside the polytope: {0}")]
    OriginOutside(String),
    #[error("facet normal {given} is not primitive; use {reduced}")]
    NonPrimitiveNormal { given: String, reduced: String },
    #[error("polytope is not canonical: facet {0} has a_F != 1")]
    NotCanonical(usize),
    #[error("test configuration has no pieces")]
    NonconvexInput,
    #[error("lower hull is degenerate: {0}")]
    DegenerateHull(String),
    #[error("slope sets differ")]
    SlopeMismatch,
    #[error("slope hull does not fill the polytope")]
    NotFull,
    #[error("function is unbounded below: 0 is not inside the slope hull")]
    UnboundedBelow,
    #[error("heights do not solve the equation: residual {0:e}")]
    NotASolution(f64),
    #[error("finite-difference Hessian is not positive definite at {0}")]
    NonconvexGrid(String),
    #[error("duplicate slopes at pieces {0} and {1}")]
    Degenerate(usize, usize),
    #[error("iteration limit reached")]
    MaxIter,
    #[error("step size underflow")]
    Stalled,
    #[error("dimension {0} is not supported here")]
    Dimension(usize),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::Unbounded => "UNBOUNDED",
            Error::EmptyOrLowDim => "EMPTY_OR_LOWDIM",
            Error::LowDim => "LOWDIM",
            Error::OriginOutside(_) => "ORIGIN_OUTSIDE",
            Error::NonPrimitiveNormal { .. } => "NONPRIMITIVE_NORMAL",
            Error::NotCanonical(_) => "NOT_CANONICAL",
            Error::NonconvexInput => "NONCONVEX_INPUT",
            Error::DegenerateHull(_) => "DEGENERATE_HULL",
            Error::SlopeMismatch => "SLOPE_MISMATCH",
            Error::NotFull => "NOT_FULL",
            Error::UnboundedBelow => "UNBOUNDED_BELOW",
            Error::NotASolution(_) => "NOT_A_SOLUTION",
            Error::NonconvexGrid(_) => "NONCONVEX_GRID",
            Error::Degenerate(..) => "DEGENERATE",
            Error::MaxIter => "MAX_ITER",
            Error::Stalled => "STALLED",
            Error::Dimension(_) => "DIMENSION",
            Error::Invalid(_) => "INVALID",
            Error::Parse(_) => "PARSE",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
