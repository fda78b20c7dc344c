use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("series is zero")]
    ZeroSeries,
    #[error("leading coefficient is not invertible")]
    NotInvertible,
    #[error("series is exact but infinite; supply a truncation")]
    Unbounded,
    #[error("non-rational coefficient at exponent {0}")]
    NonRationalCoefficient(String),
    #[error("non-integral exponent {0} after collecting the product")]
    NonIntegralExponent(String),
    #[error("prime {p} is not admissible here: {reason}")]
    InvalidPrime { p: u64, reason: String },
    #[error("truncation too small: need terms up to order {needed}")]
    InsufficientTruncation { needed: i64 },
    #[error("recognition failed: value {value:.6e}, residual {residual:.3e}")]
    RecognitionFailed { value: f64, residual: f64 },
    #[error("no represented integer coprime to {delta} found for form {form}")]
    RepresentativeNotFound { form: String, delta: i64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("construction failed: {0}")]
    Construction(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
