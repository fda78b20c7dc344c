//! Exact q-series arithmetic for generalized Borcherds products, their Hecke
//! equivariance, and twisted traces of singular moduli.
//!
//! The series and operator code is generic over [`Coeff`]; numerical
//! evaluation is generic over [`Real`]. The aliases below fix the scalar
//! choices used by the verifiers and the CLI.

pub mod acceptance;
pub mod arith;
pub mod bigfloat;
pub mod borcherds;
pub mod cyclo;
pub mod dense;
pub mod error;
pub mod forms;
pub mod genus1;
pub mod hecke;
pub mod heegner;
pub mod qseries;
pub mod report;
pub mod scalar;
pub mod zagier;

pub use bigfloat::BigFloat;
pub use cyclo::Cyclotomic;
pub use error::{Error, Result};
pub use qseries::QSeries;
pub use report::VerificationReport;
pub use scalar::{Coeff, Real};

/// Exact rationals.
pub type Rational = num_rational::BigRational;
/// Arbitrary-size integers.
pub type Integer = num_bigint::BigInt;
/// A q-series with rational coefficients.
pub type RationalSeries = QSeries<Rational>;
/// A q-series over a cyclotomic field, the carrier of twisted products.
pub type CyclotomicSeries = QSeries<Cyclotomic>;
/// Complex numbers at working precision.
pub type ComplexFloat = num_complex::Complex<BigFloat>;
