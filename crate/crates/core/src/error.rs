use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid graded space: {0}")]
    InvalidSpace(String),
    #[error("block shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("base algebra mismatch")]
    BaseMismatch,
    #[error("cannot compose: {0}")]
    ChainMismatch(String),
    #[error("invalid base algebra: {0}")]
    InvalidBase(String),
    #[error("exterior algebra on {0} generators is out of range (1..=8)")]
    GeneratorsOutOfRange(usize),
    #[error("connection is not flat: curvature norm {residual:.3e}")]
    FlatnessViolation { residual: f64 },
    #[error("element is not homogeneous of total degree {expected}")]
    NotHomogeneous { expected: i32 },
    #[error("morphism is not closed: |dφ| = {residual:.3e}")]
    NotClosed { residual: f64 },
    #[error("metric is not positive definite in {location}: smallest eigenvalue {min_eigenvalue:.3e}")]
    MetricNotPositive { location: String, min_eigenvalue: f64 },
    #[error("seed coefficient at {index} is not harmonic: distance to harmonic projection {distance:.3e}")]
    NotHarmonic { index: String, distance: f64 },
    #[error("invalid homotopy data: {0}")]
    InvalidHomotopyData(String),
    #[error("generic L-infinity term supports at most {max} arguments, got {got}")]
    ArityOverflow { got: usize, max: usize },
    #[error("family connection is not regular: dt̄ components of norm {residual:.3e}")]
    NotRegular { residual: f64 },
    #[error("parameter mismatch: {0}")]
    ParameterMismatch(String),
    #[error("the dbar homotopy needs an antiholomorphic parameter algebra")]
    HolomorphicOnly,
    #[error("model mismatch: {0}")]
    ModelMismatch(String),
}
