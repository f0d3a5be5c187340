use thiserror::Error;

/// Failures raised by the geometric kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error("point outside the model domain: {0}")]
    Domain(String),
    #[error("matrix is not positive definite (minimum pivot {min_pivot:e})")]
    NotSpd { min_pivot: f64 },
    #[error("connections are not a dual pair (residual {residual:e} > {threshold:e})")]
    NotDualPair { residual: f64, threshold: f64 },
    #[error("cubic tensor is not symmetric (asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },
    #[error("map is not an immersion at this point (singular value ratio {ratio:e})")]
    NotImmersion { ratio: f64 },
    #[error("simplex point violates the boundary margin: {0}")]
    Boundary(String),
    #[error("mixture density is not positive at grid node {node}")]
    NonPositiveDensity { node: usize },
    #[error(
        "solver did not converge after {iterations} iterations (best residual {best_residual:e})"
    )]
    NoConvergence {
        iterations: usize,
        best_residual: f64,
    },
    #[error("trajectory left the domain at t = {time}")]
    LeftDomain { time: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("model has no {0}")]
    MissingStructure(&'static str),
    #[error("invalid argument: {0}")]
    Invalid(String),
}

impl GeomError {
    /// Short stable name used in structured (JSON) error payloads.
    pub fn kind(&self) -> &'static str {
        match self {
            GeomError::Domain(_) => "DomainError",
            GeomError::NotSpd { .. } => "NotSPD",
            GeomError::NotDualPair { .. } => "NotDualPair",
            GeomError::NotSymmetric { .. } => "NotSymmetric",
            GeomError::NotImmersion { .. } => "NotImmersion",
            GeomError::Boundary(_) => "BoundaryError",
            GeomError::NonPositiveDensity { .. } => "NonPositiveDensity",
            GeomError::NoConvergence { .. } => "NoConvergence",
            GeomError::LeftDomain { .. } => "LeftDomain",
            GeomError::Dimension { .. } => "DimensionError",
            GeomError::MissingStructure(_) => "MissingStructure",
            GeomError::Invalid(_) => "InvalidArgument",
        }
    }
}

pub type Result<T> = std::result::Result<T, GeomError>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(GeomError::Dimension { expected, got })
    }
}
