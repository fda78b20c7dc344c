//! Scalar abstractions: exact coefficient rings for q-series and real
//! fields for numerical evaluation.

use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{Num, One, Signed, ToPrimitive, Zero};

use crate::bigfloat::BigFloat;

/// A commutative ring of q-series coefficients.
pub trait Coeff:
    Clone
    + PartialEq
    + Debug
    + Send
    + Sync
    + Zero
    + One
    + Neg<Output = Self>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
{
    fn from_rational(r: &BigRational) -> Self;

    fn from_i64(v: i64) -> Self {
        Self::from_rational(&BigRational::from_integer(BigInt::from(v)))
    }

    fn mul_ref(&self, rhs: &Self) -> Self {
        self.clone() * rhs.clone()
    }

    fn add_assign_ref(&mut self, rhs: &Self) {
        let lhs = std::mem::replace(self, Self::zero());
        *self = lhs + rhs.clone();
    }

    fn scale(&self, k: &BigRational) -> Self {
        self.mul_ref(&Self::from_rational(k))
    }

    /// Multiplicative inverse, when it exists in the ring.
    fn inv(&self) -> Option<Self>;

    /// The value as a rational number, if it is one.
    fn to_rational(&self) -> Option<BigRational>;
}

impl Coeff for BigRational {
    fn from_rational(r: &BigRational) -> Self {
        r.clone()
    }
    fn mul_ref(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn add_assign_ref(&mut self, rhs: &Self) {
        *self += rhs;
    }
    fn scale(&self, k: &BigRational) -> Self {
        self * k
    }
    fn inv(&self) -> Option<Self> {
        if self.is_zero() {
            None
        } else {
            Some(self.recip())
        }
    }
    fn to_rational(&self) -> Option<BigRational> {
        Some(self.clone())
    }
}

macro_rules! float_coeff {
    ($t:ty) => {
        impl Coeff for $t {
            fn from_rational(r: &BigRational) -> Self {
                r.to_f64().unwrap_or(<$t>::NAN as f64) as $t
            }
            fn inv(&self) -> Option<Self> {
                if *self == 0.0 {
                    None
                } else {
                    Some(1.0 / *self)
                }
            }
            fn to_rational(&self) -> Option<BigRational> {
                BigRational::from_float(*self as f64)
            }
        }
    };
}
float_coeff!(f64);
float_coeff!(f32);

/// A real field usable for evaluating series at points of the upper half
/// plane.  Implemented for `f32`, `f64` and [`BigFloat`].
pub trait Real: Clone + Debug + PartialOrd + Num + Neg<Output = Self> + Send + Sync {
    fn from_i64_prec(v: i64, prec: u32) -> Self;
    fn from_rational_prec(r: &BigRational, prec: u32) -> Self;
    fn pi_prec(prec: u32) -> Self;
    /// Working precision in bits.
    fn bits(&self) -> u32;
    fn sqrt_r(&self) -> Self;
    fn exp_r(&self) -> Self;
    fn cos_sin_r(&self) -> (Self, Self);
    fn abs_r(&self) -> Self;
    /// `log2 |x|`, `-inf` at zero.
    fn log2_abs(&self) -> f64;
    fn to_f64_r(&self) -> f64;
    fn round_int(&self) -> BigInt;
}

macro_rules! float_real {
    ($t:ty, $bits:expr, $pi:expr) => {
        impl Real for $t {
            fn from_i64_prec(v: i64, _prec: u32) -> Self {
                v as $t
            }
            fn from_rational_prec(r: &BigRational, _prec: u32) -> Self {
                r.to_f64().unwrap_or(f64::NAN) as $t
            }
            fn pi_prec(_prec: u32) -> Self {
                $pi
            }
            fn bits(&self) -> u32 {
                $bits
            }
            fn sqrt_r(&self) -> Self {
                self.sqrt()
            }
            fn exp_r(&self) -> Self {
                self.exp()
            }
            fn cos_sin_r(&self) -> (Self, Self) {
                (self.cos(), self.sin())
            }
            fn abs_r(&self) -> Self {
                self.abs()
            }
            fn log2_abs(&self) -> f64 {
                (self.abs() as f64).log2()
            }
            fn to_f64_r(&self) -> f64 {
                *self as f64
            }
            fn round_int(&self) -> BigInt {
                BigInt::from(self.round() as i64)
            }
        }
    };
}
float_real!(f64, 53, std::f64::consts::PI);
float_real!(f32, 24, std::f32::consts::PI);

impl Real for BigFloat {
    fn from_i64_prec(v: i64, prec: u32) -> Self {
        BigFloat::from_i64(v, prec)
    }
    fn from_rational_prec(r: &BigRational, prec: u32) -> Self {
        BigFloat::from_rational(r, prec)
    }
    fn pi_prec(prec: u32) -> Self {
        BigFloat::pi(prec)
    }
    fn bits(&self) -> u32 {
        self.precision()
    }
    fn sqrt_r(&self) -> Self {
        self.sqrt()
    }
    fn exp_r(&self) -> Self {
        self.exp()
    }
    fn cos_sin_r(&self) -> (Self, Self) {
        self.cos_sin()
    }
    fn abs_r(&self) -> Self {
        self.abs()
    }
    fn log2_abs(&self) -> f64 {
        BigFloat::log2_abs(self)
    }
    fn to_f64_r(&self) -> f64 {
        self.to_f64()
    }
    fn round_int(&self) -> BigInt {
        self.round()
    }
}

/// `exp(z)` for complex `z`.
pub fn cexp<R: Real>(z: &Complex<R>) -> Complex<R> {
    let m = z.re.exp_r();
    let (c, s) = z.im.cos_sin_r();
    Complex::new(m.clone() * c, m * s)
}

/// `|z|`.
pub fn cabs<R: Real>(z: &Complex<R>) -> R {
    (z.re.clone() * z.re.clone() + z.im.clone() * z.im.clone()).sqrt_r()
}

/// `log2 |z|`, cheap and approximate.
pub fn clog2_abs<R: Real>(z: &Complex<R>) -> f64 {
    let a = z.re.log2_abs();
    let b = z.im.log2_abs();
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + 0.5 * (1.0 + (2f64).powf(2.0 * (a.min(b) - m))).log2()
}

/// `q = e^{2 pi i tau}` for `tau = x + i y`.
pub fn q_of_tau<R: Real>(tau: &Complex<R>, prec: u32) -> Complex<R> {
    let two_pi = R::pi_prec(prec) * R::from_i64_prec(2, prec);
    let z = Complex::new(-(two_pi.clone() * tau.im.clone()), two_pi * tau.re.clone());
    cexp(&z)
}

/// Rounds the real number `x` to an integer if it lies within `tol` of one.
pub fn recognize_integer<R: Real>(x: &R, tol_log2: f64) -> Option<BigInt> {
    let n = x.round_int();
    let diff = x.clone() - R::from_rational_prec(&BigRational::from_integer(n.clone()), x.bits());
    if diff.is_zero() || diff.log2_abs() < tol_log2 {
        Some(n)
    } else {
        None
    }
}

pub(crate) fn rational_abs_log2(r: &BigRational) -> f64 {
    if r.is_zero() {
        return f64::NEG_INFINITY;
    }
    let n = r.numer().abs();
    let d = r.denom();
    bigint_log2(&n) - bigint_log2(d)
}

pub(crate) fn bigint_log2(n: &BigInt) -> f64 {
    if n.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = n.bits();
    let shift = bits.saturating_sub(60);
    let top = (n.abs() >> shift).to_f64().unwrap_or(1.0);
    top.log2() + shift as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn q_at_i_matches_closed_form() {
        let tau = Complex::new(BigFloat::from_i64(0, 200), BigFloat::from_i64(1, 200));
        let q = q_of_tau(&tau, 200);
        let expect = (-2.0 * std::f64::consts::PI).exp();
        assert!((q.re.to_f64() - expect).abs() < 1e-16);
        assert!(q.im.to_f64().abs() < 1e-50);
        let qf = q_of_tau(&Complex::new(0.0f64, 1.0), 53);
        assert!((qf.re - expect).abs() < 1e-16);
    }

    #[test]
    fn recognize_integer_rounds_only_close_values() {
        let x = BigFloat::from_f64(41.999_999_999_999_9, 200);
        assert_eq!(recognize_integer(&x, -10.0), Some(BigInt::from(42)));
        assert_eq!(recognize_integer(&x, -60.0), None);
    }
}
