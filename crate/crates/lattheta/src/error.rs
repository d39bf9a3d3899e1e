use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("lattice parameter y must be positive, got {0}")]
    NonPositiveY(f64),
    #[error("tau must lie in the upper half plane, got Im = {0}")]
    NotUpperHalfPlane(f64),
    #[error("modular reduction did not terminate after {0} generator applications")]
    NoConvergence(usize),
    #[error("t must be positive, got {0}")]
    NonPositiveT(f64),
    #[error("alpha must be positive, got {0}")]
    NonPositiveAlpha(f64),
    #[error("truncation target not met: value {value}, tail bound {tail_bound} after {terms_used} terms")]
    TailNotMet {
        value: f64,
        tail_bound: f64,
        terms_used: usize,
    },
    #[error("potential has no quadrature nodes")]
    EmptyQuadrature,
    #[error("shift coincides with a lattice point")]
    PoleAtLatticePoint,
    #[error("density {0} is not a positive even integer")]
    UnsupportedDensity(u32),
    #[error("charge distribution violates constraints: {0}")]
    ConstraintViolated(String),
    #[error("period {0} is not a multiple of three")]
    NotMultipleOfThree(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
