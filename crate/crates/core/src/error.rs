use thiserror::Error;

/// Errors raised while building meshes, assembling or solving PD-WG systems.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid refinement level n = {0}; n must be at least 1")]
    InvalidRefinement(usize),

    #[error("boundary configuration carries no data: both the Dirichlet and the Neumann side sets are empty")]
    NoBoundaryData,

    #[error("Neumann data is required on edge {0} but the problem provides none")]
    MissingNeumannData(usize),

    #[error("boundary flag set on interior edge {0}")]
    FlagOnInteriorEdge(usize),

    #[error("boundary configuration has {got} edges but the mesh has {expected}")]
    ConfigMismatch { expected: usize, got: usize },

    #[error("unsupported polynomial degree {0}; supported degrees are 1, 2 and 3")]
    UnsupportedDegree(usize),

    #[error("local {what} matrix is singular on entity {index}")]
    SingularLocalMatrix { what: &'static str, index: usize },

    #[error("diffusion coefficient is not positive definite at ({x}, {y})")]
    DiffusionNotPositiveDefinite { x: f64, y: f64 },

    #[error("layout mismatch: expected {expected} coefficients, got {got}")]
    LayoutMismatch { expected: usize, got: usize },

    #[error("discrete system is singular: {0}")]
    Singular(String),

    #[error("unknown case `{0}`")]
    UnknownCase(String),

    #[error("case `{case}` failed validation: {check} at ({x:.6}, {y:.6}): expected {expected:.6e}, got {got:.6e}")]
    CaseValidation {
        case: String,
        check: &'static str,
        x: f64,
        y: f64,
        expected: f64,
        got: f64,
    },

    #[error("invalid refinement ladder: {0}")]
    InvalidLevels(String),
}

pub type Result<T> = std::result::Result<T, Error>;
