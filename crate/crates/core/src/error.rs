use thiserror::Error;

/// Errors raised by geometry, interpolation, quadrature and experiments.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate tetrahedron: volume {volume:e} below threshold {threshold:e}")]
    DegenerateTetrahedron { volume: f64, threshold: f64 },
    #[error("non-finite vertex coordinate in vertex {0}")]
    NonFiniteVertex(usize),
    #[error("gamma_max = {0} outside [pi/3, pi)")]
    InvalidGammaMax(f64),
    #[error("invalid degree {k}: {reason}")]
    InvalidDegree { k: usize, reason: String },
    #[error("invalid multi-index: {0}")]
    InvalidMultiIndex(String),
    #[error("missing value for lattice node {0:?}")]
    MissingNodeValue([u32; 3]),
    #[error("derivative of order {requested} unavailable (field supplies order {available})")]
    DerivativeUnavailable { requested: usize, available: usize },
    #[error("ill-conditioned nodal basis: residual {residual:e}, condition estimate {condition:e}")]
    IllConditionedBasis { residual: f64, condition: f64 },
    #[error("unsupported quadrature degree {0} (supported: 1..=40)")]
    UnsupportedDegree(usize),
    #[error("inadmissible (k, m, p) = ({k}, {m}, {p}): {reason}")]
    InadmissiblePC {
        k: usize,
        m: usize,
        p: String,
        reason: String,
    },
    #[error("expression error at position {position}: {message}")]
    ExpressionParse { position: usize, message: String },
    #[error("tetrahedron generation failed: {0}")]
    GenerationFailure(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
