use thiserror::Error;

/// Errors raised by the geometry, meshing, assembly and solver layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("polygon is not convex: {0}")]
    NotConvex(String),
    #[error("clipped region is empty")]
    EmptyRegion,
    #[error("meshing failed: {0}")]
    Meshing(String),
    #[error("format error in {entity}: {detail}")]
    Format { entity: String, detail: String },
    #[error("assembly failed: {0}")]
    Assembly(String),
    #[error("boundary portion {0} has zero measure")]
    MeasureZero(String),
    #[error("degenerate mesh: {0}")]
    DegenerateMesh(String),
    #[error("degenerate trial field: boundary norm vanishes after centering")]
    DegenerateTrial,
    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("matrix is singular at pivot {0}")]
    Singular(usize),
    #[error("step size too large at step {step}: {detail}; reduce dt")]
    StepSize { step: usize, detail: String },
    #[error("newton iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("eigensolver failure: {0}")]
    Eigen(String),
    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Shape { expected, got })
    }
}
