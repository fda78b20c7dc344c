//! Arbitrary-precision binary floating point on top of `num-bigint`.
//!
//! A value is `mant * 2^exp` rounded to `prec` significant bits.  A precision
//! of zero marks an exact value (integers, dyadic constants); exact operands
//! adopt the precision of whatever they are combined with.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Rem, Sub};
use std::sync::Mutex;

use num_bigint::{BigInt, Sign};
use num_rational::BigRational;
use num_traits::{Num, One, Signed, ToPrimitive, Zero};

/// Precision used when an operation on two exact values cannot stay exact.
pub const FALLBACK_PREC: u32 = 128;

const GUARD: u32 = 32;

#[derive(Clone, Debug)]
pub struct BigFloat {
    mant: BigInt,
    exp: i64,
    prec: u32,
}

impl BigFloat {
    pub fn new(mant: BigInt, exp: i64, prec: u32) -> Self {
        let mut x = BigFloat { mant, exp, prec };
        x.normalize();
        x
    }

    pub fn from_bigint(v: &BigInt, prec: u32) -> Self {
        Self::new(v.clone(), 0, prec)
    }

    pub fn from_i64(v: i64, prec: u32) -> Self {
        Self::new(BigInt::from(v), 0, prec)
    }

    pub fn from_rational(r: &BigRational, prec: u32) -> Self {
        let p = if prec == 0 { FALLBACK_PREC } else { prec };
        if r.denom().is_one() {
            return Self::new(r.numer().clone(), 0, p);
        }
        Self::new(r.numer().clone(), 0, p) / Self::new(r.denom().clone(), 0, p)
    }

    pub fn from_f64(v: f64, prec: u32) -> Self {
        if v == 0.0 {
            return Self::new(BigInt::zero(), 0, prec);
        }
        let bits = v.to_bits();
        let sign = if bits >> 63 == 1 { -1i64 } else { 1 };
        let e = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (m, ex) = if e == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), e - 1075)
        };
        Self::new(BigInt::from(m as i64 * sign), ex, prec)
    }

    pub fn precision(&self) -> u32 {
        self.prec
    }

    /// Same value, re-rounded to `prec` bits.
    pub fn with_prec(&self, prec: u32) -> Self {
        Self::new(self.mant.clone(), self.exp, prec)
    }

    pub fn is_exact(&self) -> bool {
        self.prec == 0
    }

    fn normalize(&mut self) {
        if self.mant.is_zero() {
            self.exp = 0;
            return;
        }
        let tz = self.mant.trailing_zeros().unwrap_or(0);
        if tz > 0 {
            self.mant >>= tz;
            self.exp += tz as i64;
        }
        if self.prec > 0 {
            let bits = self.mant.bits();
            if bits > self.prec as u64 {
                let shift = bits - self.prec as u64;
                let half = BigInt::one() << (shift - 1);
                self.mant = (&self.mant + half) >> shift;
                self.exp += shift as i64;
                let tz = self.mant.trailing_zeros().unwrap_or(0);
                if tz > 0 {
                    self.mant >>= tz;
                    self.exp += tz as i64;
                }
            }
        }
    }

    fn joint_prec(a: u32, b: u32) -> u32 {
        a.max(b)
    }

    /// Approximate `log2 |x|`; `-inf` for zero.
    pub fn log2_abs(&self) -> f64 {
        if self.mant.is_zero() {
            return f64::NEG_INFINITY;
        }
        let bits = self.mant.bits();
        let shift = bits.saturating_sub(60);
        let top = (self.mant.abs() >> shift).to_f64().unwrap_or(1.0);
        top.log2() + shift as f64 + self.exp as f64
    }

    pub fn to_f64(&self) -> f64 {
        if self.mant.is_zero() {
            return 0.0;
        }
        let bits = self.mant.bits();
        let shift = bits.saturating_sub(60);
        let top = (&self.mant >> shift).to_f64().unwrap_or(0.0);
        let e = shift as i64 + self.exp;
        if e > 2000 {
            return top.signum() * f64::INFINITY;
        }
        if e < -2000 {
            return 0.0;
        }
        top * (2f64).powi(e as i32)
    }

    pub fn signum_i(&self) -> i32 {
        match self.mant.sign() {
            Sign::Minus => -1,
            Sign::NoSign => 0,
            Sign::Plus => 1,
        }
    }

    pub fn abs(&self) -> Self {
        BigFloat { mant: self.mant.abs(), exp: self.exp, prec: self.prec }
    }

    /// Multiplication by `2^k`.
    pub fn mul_pow2(&self, k: i64) -> Self {
        BigFloat { mant: self.mant.clone(), exp: self.exp + k, prec: self.prec }
    }

    /// Nearest integer (ties away from zero).
    pub fn round(&self) -> BigInt {
        if self.exp >= 0 {
            return &self.mant << self.exp as u64;
        }
        let sh = (-self.exp) as u64;
        let half = BigInt::one() << (sh - 1);
        if self.mant.is_negative() {
            -((-&self.mant + half) >> sh)
        } else {
            (&self.mant + half) >> sh
        }
    }

    /// Integer part, rounded toward zero.
    pub fn trunc(&self) -> BigInt {
        if self.exp >= 0 {
            return &self.mant << self.exp as u64;
        }
        let sh = (-self.exp) as u64;
        if self.mant.is_negative() {
            -((-&self.mant) >> sh)
        } else {
            &self.mant >> sh
        }
    }

    /// Exact conversion to a rational number.
    pub fn to_rational(&self) -> BigRational {
        if self.exp >= 0 {
            BigRational::from_integer(&self.mant << self.exp as u64)
        } else {
            BigRational::new(self.mant.clone(), BigInt::one() << (-self.exp) as u64)
        }
    }

    /// Fixed-point representation `round(x * 2^w)`.
    fn to_fixed(&self, w: u32) -> BigInt {
        let e = self.exp + w as i64;
        if e >= 0 {
            &self.mant << e as u64
        } else {
            let sh = (-e) as u64;
            let half = BigInt::one() << (sh - 1);
            (&self.mant + half) >> sh
        }
    }

    fn from_fixed(v: BigInt, w: u32, prec: u32) -> Self {
        Self::new(v, -(w as i64), prec)
    }

    fn work_prec(&self) -> u32 {
        if self.prec == 0 {
            FALLBACK_PREC
        } else {
            self.prec
        }
    }

    pub fn pi(prec: u32) -> Self {
        let w = prec + GUARD;
        Self::from_fixed(cached_const(&PI_CACHE, w, pi_fixed), w, prec)
    }

    pub fn ln2(prec: u32) -> Self {
        let w = prec + GUARD;
        Self::from_fixed(cached_const(&LN2_CACHE, w, ln2_fixed), w, prec)
    }

    pub fn sqrt(&self) -> Self {
        assert!(!self.mant.is_negative(), "sqrt of negative BigFloat");
        let p = self.work_prec();
        if self.mant.is_zero() {
            return Self::new(BigInt::zero(), 0, p);
        }
        let want = 2 * (p as u64 + 4);
        let bits = self.mant.bits();
        let mut k = want.saturating_sub(bits) as i64;
        if (self.exp - k) % 2 != 0 {
            k += 1;
        }
        let m = &self.mant << k as u64;
        let r = m.sqrt();
        Self::new(r, (self.exp - k) / 2, p)
    }

    pub fn exp(&self) -> Self {
        let p = self.work_prec();
        if self.mant.is_zero() {
            return Self::new(BigInt::one(), 0, p);
        }
        let approx = self.to_f64() / std::f64::consts::LN_2;
        assert!(approx.abs() < 1e15, "exp argument out of range");
        let k = approx.round() as i64;
        let kbits = 64 - (k.unsigned_abs()).leading_zeros();
        let w = p + GUARD + kbits;
        let r = self.to_fixed(w) - BigInt::from(k) * cached_const(&LN2_CACHE, w, ln2_fixed);
        let e = exp_fixed(&r, w);
        Self::new(e, k - w as i64, p)
    }

    /// Natural logarithm of a positive value.
    pub fn ln(&self) -> Self {
        assert!(self.signum_i() > 0, "ln of non-positive BigFloat");
        let p = self.work_prec();
        // Newton on exp: y <- y + 2 (x - e^y) / (x + e^y).
        let mut y = Self::from_f64(self.log2_abs() * std::f64::consts::LN_2, p + GUARD);
        let x = self.with_prec(p + GUARD);
        let mut good = 50u32;
        loop {
            let e = y.exp();
            let delta = (&x - &e).mul_pow2(1) / (&x + &e);
            y = &y + &delta;
            if delta.is_zero() || -delta.log2_abs() > (p + 8) as f64 + y.log2_abs().max(0.0) {
                break;
            }
            good = good.saturating_mul(2);
            if good > 4 * (p + GUARD) * 64 {
                break;
            }
        }
        y.with_prec(p)
    }

    /// `(cos x, sin x)`.
    pub fn cos_sin(&self) -> (Self, Self) {
        let p = self.work_prec();
        if self.mant.is_zero() {
            return (Self::new(BigInt::one(), 0, p), Self::new(BigInt::zero(), 0, p));
        }
        let mag = self.log2_abs().max(0.0).ceil() as u32;
        let wp = p + GUARD + mag;
        let two_pi = Self::pi(wp).mul_pow2(1);
        let k = (self.with_prec(wp) / two_pi.clone()).round();
        let w = p + GUARD;
        let r = self.to_fixed(w + mag) - &k * two_pi.to_fixed(w + mag);
        let r = r >> mag as u64;
        let (c, s) = cos_sin_fixed(&r, w);
        (Self::from_fixed(c, w, p), Self::from_fixed(s, w, p))
    }

    /// Decimal rendering with `digits` significant digits.
    pub fn to_decimal(&self, digits: usize) -> String {
        if self.mant.is_zero() {
            return "0".to_string();
        }
        let l10 = self.log2_abs() * std::f64::consts::LOG10_2;
        let e10 = l10.floor() as i64;
        let shift = digits as i64 - 1 - e10;
        let scaled = self.to_rational()
            * if shift >= 0 {
                BigRational::from_integer(num_traits::pow(BigInt::from(10), shift as usize))
            } else {
                BigRational::new(BigInt::one(), num_traits::pow(BigInt::from(10), (-shift) as usize))
            };
        let r = scaled.round().to_integer();
        let neg = r.is_negative();
        let s = r.abs().to_string();
        let exp10 = s.len() as i64 - 1 - shift;
        let (head, tail) = s.split_at(1);
        let tail = tail.trim_end_matches('0');
        let mut out = String::new();
        if neg {
            out.push('-');
        }
        out.push_str(head);
        if !tail.is_empty() {
            out.push('.');
            out.push_str(tail);
        }
        if exp10 != 0 {
            out.push_str(&format!("e{exp10}"));
        }
        out
    }

    fn cmp_value(&self, other: &Self) -> Ordering {
        let e = self.exp.min(other.exp);
        let a = &self.mant << (self.exp - e) as u64;
        let b = &other.mant << (other.exp - e) as u64;
        a.cmp(&b)
    }
}

static PI_CACHE: Mutex<Option<(u32, BigInt)>> = Mutex::new(None);
static LN2_CACHE: Mutex<Option<(u32, BigInt)>> = Mutex::new(None);

fn cached_const(cache: &Mutex<Option<(u32, BigInt)>>, w: u32, f: fn(u32) -> BigInt) -> BigInt {
    let mut guard = cache.lock().expect("constant cache poisoned");
    if let Some((cw, v)) = guard.as_ref() {
        if *cw >= w {
            let sh = (cw - w) as u64;
            if sh == 0 {
                return v.clone();
            }
            let half = BigInt::one() << (sh - 1);
            return (v + half) >> sh;
        }
    }
    let w_new = w.max(256) + 64;
    let v = f(w_new);
    let sh = (w_new - w) as u64;
    let out = (&v + (BigInt::one() << (sh - 1))) >> sh;
    *guard = Some((w_new, v));
    out
}

fn atan_inv_fixed(k: u64, w: u32) -> BigInt {
    let one = BigInt::one() << w;
    let kk = BigInt::from(k * k);
    let mut power = one / BigInt::from(k);
    let mut sum = BigInt::zero();
    let mut n = 0u64;
    while !power.is_zero() {
        let term = &power / BigInt::from(2 * n + 1);
        if n.is_multiple_of(2) {
            sum += term;
        } else {
            sum -= term;
        }
        power /= &kk;
        n += 1;
    }
    sum
}

fn pi_fixed(w: u32) -> BigInt {
    let wg = w + 16;
    let v = atan_inv_fixed(5, wg) * 16 - atan_inv_fixed(239, wg) * 4;
    v >> 16u32
}

fn ln2_fixed(w: u32) -> BigInt {
    // ln 2 = sum_{k>=1} 1 / (k 2^k)
    let wg = w + 16;
    let mut sum = BigInt::zero();
    let mut k = 1u64;
    loop {
        let term = (BigInt::one() << wg) >> k;
        let term = term / BigInt::from(k);
        if term.is_zero() {
            break;
        }
        sum += term;
        k += 1;
    }
    sum >> 16u32
}

/// `exp(r)` for a fixed-point `r` with `|r| <= 1`.
fn exp_fixed(r: &BigInt, w: u32) -> BigInt {
    let s = ((w as f64).sqrt() as u32).max(4);
    let wg = w + s + 16;
    let x = (r << (wg - w)) >> s;
    let one = BigInt::one() << wg;
    let mut sum = one.clone();
    let mut term = one;
    let mut i = 1u64;
    loop {
        term = ((&term * &x) >> wg) / BigInt::from(i);
        if term.is_zero() {
            break;
        }
        sum += &term;
        i += 1;
    }
    for _ in 0..s {
        sum = (&sum * &sum) >> wg;
    }
    sum >> (wg - w)
}

/// `(cos r, sin r)` for a fixed-point `|r| <= 4`.
fn cos_sin_fixed(r: &BigInt, w: u32) -> (BigInt, BigInt) {
    let s = ((w as f64).sqrt() as u32).max(4);
    let wg = w + 2 * s + 16;
    let x = (r << (wg - w)) >> s;
    let one = BigInt::one() << wg;
    let x2 = (&x * &x) >> wg;
    let mut c = one.clone();
    let mut sn = x.clone();
    let mut term = one;
    let mut i = 1u64;
    loop {
        term = -((&term * &x2) >> wg) / BigInt::from((2 * i - 1) * (2 * i));
        if term.is_zero() {
            break;
        }
        c += &term;
        i += 1;
    }
    let mut term = x;
    let mut i = 1u64;
    loop {
        term = -((&term * &x2) >> wg) / BigInt::from((2 * i) * (2 * i + 1));
        if term.is_zero() {
            break;
        }
        sn += &term;
        i += 1;
    }
    for _ in 0..s {
        let c2 = (&c * &c - &sn * &sn) >> wg;
        let s2 = (&c * &sn) >> (wg - 1);
        c = c2;
        sn = s2;
    }
    (c >> (wg - w), sn >> (wg - w))
}

impl PartialEq for BigFloat {
    fn eq(&self, other: &Self) -> bool {
        self.mant == other.mant && (self.mant.is_zero() || self.exp == other.exp)
    }
}

impl PartialOrd for BigFloat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp_value(other))
    }
}

impl fmt::Display for BigFloat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = f.precision().unwrap_or_else(|| {
            ((self.work_prec() as f64) * std::f64::consts::LOG10_2).floor().max(1.0) as usize
        });
        write!(f, "{}", self.to_decimal(digits))
    }
}

fn add_impl(a: &BigFloat, b: &BigFloat, negate_b: bool) -> BigFloat {
    let prec = BigFloat::joint_prec(a.prec, b.prec);
    let bm = if negate_b { -&b.mant } else { b.mant.clone() };
    if a.mant.is_zero() {
        return BigFloat::new(bm, b.exp, prec);
    }
    if bm.is_zero() {
        return BigFloat::new(a.mant.clone(), a.exp, prec);
    }
    if prec > 0 {
        // Drop an operand that lies entirely below the rounding threshold.
        let ta = a.exp + a.mant.bits() as i64;
        let tb = b.exp + bm.bits() as i64;
        let slack = prec as i64 + 4;
        if ta - tb > slack {
            let tiny = bm.signum();
            let e = ta - slack - 2;
            let m = (&a.mant << (a.exp - e) as u64) + tiny;
            return BigFloat::new(m, e, prec);
        }
        if tb - ta > slack {
            let tiny = a.mant.signum();
            let e = tb - slack - 2;
            let m = (&bm << (b.exp - e) as u64) + tiny;
            return BigFloat::new(m, e, prec);
        }
    }
    let e = a.exp.min(b.exp);
    let m = (&a.mant << (a.exp - e) as u64) + (bm << (b.exp - e) as u64);
    BigFloat::new(m, e, prec)
}

impl<'a> Add<&'a BigFloat> for &'a BigFloat {
    type Output = BigFloat;
    fn add(self, rhs: &BigFloat) -> BigFloat {
        add_impl(self, rhs, false)
    }
}

impl<'a> Sub<&'a BigFloat> for &'a BigFloat {
    type Output = BigFloat;
    fn sub(self, rhs: &BigFloat) -> BigFloat {
        add_impl(self, rhs, true)
    }
}

impl<'a> Mul<&'a BigFloat> for &'a BigFloat {
    type Output = BigFloat;
    fn mul(self, rhs: &BigFloat) -> BigFloat {
        BigFloat::new(&self.mant * &rhs.mant, self.exp + rhs.exp, BigFloat::joint_prec(self.prec, rhs.prec))
    }
}

impl<'a> Div<&'a BigFloat> for &'a BigFloat {
    type Output = BigFloat;
    fn div(self, rhs: &BigFloat) -> BigFloat {
        assert!(!rhs.mant.is_zero(), "BigFloat division by zero");
        let mut p = BigFloat::joint_prec(self.prec, rhs.prec);
        if p == 0 {
            p = FALLBACK_PREC;
        }
        if self.mant.is_zero() {
            return BigFloat::new(BigInt::zero(), 0, p);
        }
        let s = (p as i64 + 4 + rhs.mant.bits() as i64 - self.mant.bits() as i64).max(0);
        let q = (&self.mant << s as u64) / &rhs.mant;
        BigFloat::new(q, self.exp - rhs.exp - s, p)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for BigFloat {
            type Output = BigFloat;
            fn $m(self, rhs: BigFloat) -> BigFloat {
                (&self).$m(&rhs)
            }
        }
        impl<'a> $tr<&'a BigFloat> for BigFloat {
            type Output = BigFloat;
            fn $m(self, rhs: &BigFloat) -> BigFloat {
                (&self).$m(rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
forward_owned!(Div, div);

impl Rem for BigFloat {
    type Output = BigFloat;
    fn rem(self, rhs: BigFloat) -> BigFloat {
        let q = (&self / &rhs).trunc();
        let qf = BigFloat::new(q, 0, 0);
        &self - &(&qf * &rhs)
    }
}

impl Neg for BigFloat {
    type Output = BigFloat;
    fn neg(self) -> BigFloat {
        BigFloat { mant: -self.mant, exp: self.exp, prec: self.prec }
    }
}

impl Neg for &BigFloat {
    type Output = BigFloat;
    fn neg(self) -> BigFloat {
        BigFloat { mant: -&self.mant, exp: self.exp, prec: self.prec }
    }
}

impl Zero for BigFloat {
    fn zero() -> Self {
        BigFloat { mant: BigInt::zero(), exp: 0, prec: 0 }
    }
    fn is_zero(&self) -> bool {
        self.mant.is_zero()
    }
}

impl One for BigFloat {
    fn one() -> Self {
        BigFloat { mant: BigInt::one(), exp: 0, prec: 0 }
    }
}

impl Num for BigFloat {
    type FromStrRadixErr = String;
    fn from_str_radix(s: &str, radix: u32) -> Result<Self, String> {
        if radix != 10 {
            return Err("only radix 10 is supported".into());
        }
        let s = s.trim();
        let (mantissa, e10) = match s.find(['e', 'E']) {
            Some(i) => (&s[..i], s[i + 1..].parse::<i64>().map_err(|e| e.to_string())?),
            None => (s, 0),
        };
        let (int, frac) = match mantissa.find('.') {
            Some(i) => (&mantissa[..i], &mantissa[i + 1..]),
            None => (mantissa, ""),
        };
        let digits = format!("{int}{frac}");
        let n = BigInt::parse_bytes(digits.as_bytes(), 10).ok_or("bad number")?;
        let scale = e10 - frac.len() as i64;
        let ten = BigInt::from(10);
        let r = if scale >= 0 {
            BigRational::from_integer(n * num_traits::pow(ten, scale as usize))
        } else {
            BigRational::new(n, num_traits::pow(ten, (-scale) as usize))
        };
        Ok(BigFloat::from_rational(&r, FALLBACK_PREC))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &BigFloat, b: f64, tol: f64) -> bool {
        (a.to_f64() - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn pi_digits() {
        let pi = BigFloat::pi(400);
        let s = pi.to_decimal(60);
        assert_eq!(&s[..52], "3.14159265358979323846264338327950288419716939937510");
    }

    #[test]
    fn exp_log_roundtrip() {
        let x = BigFloat::from_f64(3.75, 300);
        let y = x.exp().ln();
        let d = (&y - &x).abs();
        assert!(d.log2_abs() < -280.0, "{}", d.log2_abs());
        assert!(close(&BigFloat::from_f64(-20.5, 200).exp(), (-20.5f64).exp(), 1e-14));
    }

    #[test]
    fn cos_sin_identity() {
        for v in [0.3, -2.0, 17.25, 1234.5] {
            let x = BigFloat::from_f64(v, 256);
            let (c, s) = x.cos_sin();
            let one = &(&c * &c) + &(&s * &s);
            let err = (&one - &BigFloat::one()).abs();
            assert!(err.is_zero() || err.log2_abs() < -240.0);
            assert!(close(&c, v.cos(), 1e-12));
            assert!(close(&s, v.sin(), 1e-12));
        }
    }

    #[test]
    fn sqrt_squares_back() {
        let x = BigFloat::from_i64(163, 512);
        let r = x.sqrt();
        let back = &r * &r;
        let err = (&back - &x).abs();
        assert!(err.log2_abs() < -490.0);
    }

    #[test]
    fn exact_arithmetic_stays_exact() {
        let a = BigFloat::from_i64(3, 0);
        let b = BigFloat::from_i64(-7, 0);
        assert_eq!((&a * &b).round(), BigInt::from(-21));
        assert!((&a + &b).is_exact());
        assert_eq!(BigFloat::from_f64(-2.5, 0).round(), BigInt::from(-3));
    }

    #[test]
    fn decimal_parse_and_print() {
        let x: BigFloat = Num::from_str_radix("-12.5e3", 10).unwrap();
        assert_eq!(x.to_decimal(10), "-1.25e4");
    }
}
