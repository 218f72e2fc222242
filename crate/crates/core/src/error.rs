use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate tetrahedron (zero volume)")]
    DegenerateTetrahedron,

    #[error("invalid mesh size n = {0}: need 1 <= n <= {max}", max = crate::mesh::MAX_CUBES_PER_AXIS)]
    InvalidMeshSize(usize),

    #[error("node index {index} out of range (mesh has {count} nodes)")]
    NodeOutOfRange { index: usize, count: usize },

    #[error("cube index {index} out of range (mesh has {count} cubes)")]
    CubeOutOfRange { index: usize, count: usize },

    #[error("cubic lift needs at least two cubes per axis, got n = {0}")]
    LiftUnavailable(usize),

    #[error("quadrature degree {got} below the required minimum {required}")]
    InsufficientQuadrature { required: usize, got: usize },

    #[error("unknown problem id `{0}` (expected poly1, trig or poly2)")]
    UnknownProblem(String),

    #[error("unknown output format `{0}` (expected table, csv or json)")]
    UnknownFormat(String),

    #[error("invalid level range: {0}")]
    InvalidLevels(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid tolerance {0}: must be positive and finite")]
    InvalidTolerance(f64),

    #[error(transparent)]
    NotConverged(#[from] Box<NotConverged>),
}

/// Conjugate gradients ran out of iterations. Carries the best iterate seen.
#[derive(Debug, Error)]
#[error("CG did not converge in {iterations} iterations (relative residual {residual:.3e})")]
pub struct NotConverged {
    pub iterations: usize,
    pub residual: f64,
    pub best: Vec<f64>,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
