use thiserror::Error;

/// Errors raised by the numerical engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),

    #[error("invalid step weight: {0}")]
    InvalidWeight(String),

    #[error("invalid difference scheme: {0}")]
    InvalidScheme(String),

    #[error("invalid weight measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid majorant: {0}")]
    InvalidMajorant(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("spectra carry different exponents p ({0} vs {1})")]
    MixedExponent(f64, f64),

    #[error("quadrature did not converge within depth {max_depth}; best estimate {estimate}")]
    QuadratureDepth { estimate: f64, max_depth: u32 },

    #[error("series does not converge: {0}")]
    Divergent(String),

    #[error("linear program: {0}")]
    Solver(String),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("measure concentrated on zero set of phi")]
    ZeroIntegral,

    #[error("load error: {0}")]
    Load(String),
}

pub type Result<T> = std::result::Result<T, Error>;
