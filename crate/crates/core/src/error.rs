use thiserror::Error;

/// Errors raised by density algebra, discretizations and solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("quadratic form representation is not symmetric (asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("quadratic form is not positive definite (smallest eigenvalue {min_eig:e}, scale {scale:e})")]
    NotPositiveDefinite { min_eig: f64, scale: f64 },

    #[error("reduction of Q3 failed: the block of eliminated entries is singular")]
    ReductionFailure,

    #[error("invalid material: {0}")]
    InvalidMaterial(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("loads are incompatible with the active constraints: {0}")]
    IncompatibleLoads(String),

    #[error("singular constrained system: {0}")]
    SingularSystem(String),

    #[error(
        "descent did not converge after {iterations} iterations \
         (energy {energy:e}, gradient norm {grad_norm:e}, tolerance {tolerance:e})"
    )]
    NonConvergence {
        iterations: usize,
        energy: f64,
        grad_norm: f64,
        tolerance: f64,
    },

    #[error("point ({x1}, {x2}) lies outside the strip")]
    OutOfDomain { x1: f64, x2: f64 },

    #[error("developable chart rejected: {0}")]
    ChartRejected(String),

    #[error("Newton inversion of the chart failed at ({x1}, {x2}) after {iterations} iterations")]
    ChartInversion { x1: f64, x2: f64, iterations: usize },

    #[error("width parameter {eps} exceeds the admissible maximum {eps_max}")]
    EpsTooLarge { eps: f64, eps_max: f64 },

    #[error("convergence bound exceeded: relative error {error:e} > {bound:e} at eps = {eps}")]
    ConvergenceBound { eps: f64, error: f64, bound: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
