//! Exact arithmetic in cyclotomic fields Q(zeta_m).
//!
//! Elements are stored in the power basis `1, z, ..., z^{phi(m)-1}` modulo the
//! m-th cyclotomic polynomial, as integer numerators over one positive common
//! denominator.  Values that happen to be rational are always stored at
//! order 1, so equality is structural after lifting to a common order.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_complex::Complex;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::euler_phi;
use crate::bigfloat::BigFloat;
use crate::scalar::Coeff;

/// Integer polynomial, coefficients in ascending degree.
pub type IntPoly = Vec<BigInt>;

/// The m-th cyclotomic polynomial, by exact division of `x^m - 1`.
pub fn cyclotomic_polynomial(m: u32) -> IntPoly {
    assert!(m >= 1, "cyclotomic order must be positive");
    let m = m as usize;
    let mut num: Vec<BigInt> = vec![BigInt::zero(); m + 1];
    num[0] = BigInt::from(-1);
    num[m] = BigInt::one();
    for d in 1..m {
        if m.is_multiple_of(d) {
            num = exact_div_monic(&num, &cyclotomic_polynomial(d as u32));
        }
    }
    num
}

fn exact_div_monic(a: &[BigInt], b: &[BigInt]) -> IntPoly {
    let db = b.len() - 1;
    let mut rem = a.to_vec();
    let mut q = vec![BigInt::zero(); a.len() - db];
    for i in (0..q.len()).rev() {
        let c = rem[i + db].clone();
        if c.is_zero() {
            continue;
        }
        for (j, bj) in b.iter().enumerate() {
            rem[i + j] -= &c * bj;
        }
        q[i] = c;
    }
    debug_assert!(rem.iter().all(Zero::is_zero));
    q
}

/// Reduction data for one order: `x^e mod Phi_m` for `0 <= e < m`.
struct Reduction {
    phi: usize,
    powers: Vec<IntPoly>,
}

fn reduction(m: u32) -> Arc<Reduction> {
    static CACHE: OnceLock<Mutex<HashMap<u32, Arc<Reduction>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(r) = cache.lock().expect("cyclotomic cache poisoned").get(&m) {
        return r.clone();
    }
    let phi_poly = cyclotomic_polynomial(m);
    let phi = phi_poly.len() - 1;
    let mut powers = Vec::with_capacity(m as usize);
    let mut cur = vec![BigInt::zero(); phi];
    cur[0] = BigInt::one();
    for _ in 0..m {
        powers.push(cur.clone());
        // multiply by x and reduce
        let top = cur[phi - 1].clone();
        for i in (1..phi).rev() {
            cur[i] = cur[i - 1].clone();
        }
        cur[0] = BigInt::zero();
        if !top.is_zero() {
            for (i, c) in phi_poly.iter().take(phi).enumerate() {
                cur[i] -= &top * c;
            }
        }
    }
    let r = Arc::new(Reduction { phi, powers });
    cache.lock().expect("cyclotomic cache poisoned").insert(m, r.clone());
    r
}

#[derive(Clone, Debug)]
pub struct Cyclotomic {
    order: u32,
    num: Vec<BigInt>,
    den: BigInt,
}

impl Cyclotomic {
    pub fn from_rational(r: &BigRational) -> Self {
        Cyclotomic { order: 1, num: vec![r.numer().clone()], den: r.denom().clone() }
    }

    pub fn from_int(v: i64) -> Self {
        Cyclotomic { order: 1, num: vec![BigInt::from(v)], den: BigInt::one() }
    }

    /// Builds `sum coords[i] z_m^i` from power-basis coordinates of any
    /// length (reduced modulo `Phi_m`).
    pub fn from_coords(order: u32, coords: &[BigRational]) -> Self {
        let den = coords.iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let exps: Vec<BigInt> = coords.iter().map(|c| c.numer() * (&den / c.denom())).collect();
        Self::from_exponent_poly(order, &exps, den)
    }

    /// `sum poly[e] z_m^e / den` for arbitrary exponents `e`.
    fn from_exponent_poly(order: u32, poly: &[BigInt], den: BigInt) -> Self {
        let red = reduction(order);
        let m = order as usize;
        let mut num = vec![BigInt::zero(); red.phi];
        for (e, c) in poly.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let row = &red.powers[e % m];
            for (i, r) in row.iter().enumerate() {
                if !r.is_zero() {
                    num[i] += c * r;
                }
            }
        }
        let mut out = Cyclotomic { order, num, den };
        out.canonicalize();
        out
    }

    /// `zeta_m^b`.
    pub fn root_of_unity(m: u32, b: i64) -> Self {
        assert!(m >= 1);
        let e = b.rem_euclid(m as i64) as usize;
        let mut poly = vec![BigInt::zero(); e + 1];
        poly[e] = BigInt::one();
        Self::from_exponent_poly(m, &poly, BigInt::one())
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    /// Power-basis coordinates (length `phi(order)`).
    pub fn coords(&self) -> Vec<BigRational> {
        self.num.iter().map(|n| BigRational::new(n.clone(), self.den.clone())).collect()
    }

    fn canonicalize(&mut self) {
        if self.den.is_negative() {
            self.den = -&self.den;
            for c in self.num.iter_mut() {
                *c = -&*c;
            }
        }
        if !self.den.is_one() {
            let g = self.num.iter().fold(self.den.clone(), |g, c| g.gcd(c));
            if !g.is_one() {
                self.den /= &g;
                for c in self.num.iter_mut() {
                    *c /= &g;
                }
            }
        }
        if self.order > 1 && self.num.iter().skip(1).all(Zero::is_zero) {
            let c0 = self.num.first().cloned().unwrap_or_else(BigInt::zero);
            self.order = 1;
            self.num = vec![c0];
        }
        if self.num[0].is_zero() && self.order == 1 {
            self.den = BigInt::one();
        }
    }

    /// The same element written in `Q(zeta_big)`, where `order | big`.
    pub fn lift(&self, big: u32) -> Self {
        if big == self.order {
            return self.clone();
        }
        assert!(big.is_multiple_of(self.order), "lift target must be a multiple of the order");
        let step = (big / self.order) as usize;
        let mut poly = vec![BigInt::zero(); (self.num.len() - 1) * step + 1];
        for (i, c) in self.num.iter().enumerate() {
            poly[i * step] = c.clone();
        }
        // Reduce without collapsing back to order 1: callers need the
        // coordinates at the target order.
        let red = reduction(big);
        let mut num = vec![BigInt::zero(); red.phi];
        for (e, c) in poly.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            for (i, r) in red.powers[e % big as usize].iter().enumerate() {
                if !r.is_zero() {
                    num[i] += c * r;
                }
            }
        }
        Cyclotomic { order: big, num, den: self.den.clone() }
    }

    fn common(a: &Self, b: &Self) -> (Self, Self) {
        if a.order == b.order {
            return (a.clone(), b.clone());
        }
        let l = (a.order as u64).lcm(&(b.order as u64)) as u32;
        (a.lift(l), b.lift(l))
    }

    pub fn is_zero_value(&self) -> bool {
        self.num.iter().all(Zero::is_zero)
    }

    pub fn to_rational(&self) -> Option<BigRational> {
        if self.order == 1 {
            Some(BigRational::new(self.num[0].clone(), self.den.clone()))
        } else {
            None
        }
    }

    /// Galois action `zeta_m -> zeta_m^a`, `gcd(a, m) = 1`.
    pub fn galois(&self, a: i64) -> Self {
        let m = self.order as i64;
        assert!(a.gcd(&m) == 1, "Galois exponent must be a unit");
        let mut poly = vec![BigInt::zero(); m as usize];
        for (i, c) in self.num.iter().enumerate() {
            let e = (a * i as i64).rem_euclid(m) as usize;
            poly[e] += c;
        }
        Self::from_exponent_poly(self.order, &poly, self.den.clone())
    }

    /// Sum over all Galois conjugates.
    pub fn trace(&self) -> Self {
        let m = self.order as i64;
        let mut acc = Cyclotomic::zero();
        for a in 1..=m {
            if a.gcd(&m) == 1 {
                acc = acc + self.galois(a);
            }
        }
        acc
    }

    pub fn inverse(&self) -> Option<Self> {
        if self.is_zero_value() {
            return None;
        }
        if self.order == 1 {
            return Some(Cyclotomic {
                order: 1,
                num: vec![self.den.clone()],
                den: self.num[0].clone(),
            })
            .map(|mut c| {
                c.canonicalize();
                c
            });
        }
        let a: Vec<BigRational> = self.coords();
        let phi: Vec<BigRational> = cyclotomic_polynomial(self.order)
            .into_iter()
            .map(BigRational::from_integer)
            .collect();
        let s = poly_inverse_mod(&a, &phi)?;
        Some(Self::from_coords(self.order, &s))
    }

    /// Complex embedding `zeta_m -> exp(2 pi i / m)` at `prec` bits.
    pub fn embed(&self, prec: u32) -> Complex<BigFloat> {
        let wp = prec + 16;
        let mut re = BigFloat::from_i64(0, wp);
        let mut im = BigFloat::from_i64(0, wp);
        let two_pi = BigFloat::pi(wp).mul_pow2(1);
        let m = BigFloat::from_i64(self.order as i64, wp);
        for (i, c) in self.num.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let angle = &(&two_pi * &BigFloat::from_i64(i as i64, wp)) / &m;
            let (cs, sn) = if i == 0 {
                (BigFloat::from_i64(1, wp), BigFloat::from_i64(0, wp))
            } else {
                angle.cos_sin()
            };
            let cf = BigFloat::from_bigint(c, wp);
            re = &re + &(&cf * &cs);
            im = &im + &(&cf * &sn);
        }
        let d = BigFloat::from_bigint(&self.den, wp);
        Complex::new((&re / &d).with_prec(prec), (&im / &d).with_prec(prec))
    }

    /// Fast f64 embedding, for diagnostics.
    pub fn embed_f64(&self) -> Complex<f64> {
        let e = self.embed(64);
        Complex::new(e.re.to_f64(), e.im.to_f64())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(CycloJson {
            order: self.order,
            coords: self.coords().iter().map(format_rational).collect(),
        })
        .expect("serializable")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self, String> {
        let j: CycloJson = serde_json::from_value(v.clone()).map_err(|e| e.to_string())?;
        if j.order == 0 {
            return Err("cyclotomic order must be positive".into());
        }
        let coords = j.coords.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>, _>>()?;
        if coords.len() as u64 != euler_phi(j.order as u64) {
            return Err(format!("expected {} coordinates for order {}", euler_phi(j.order as u64), j.order));
        }
        Ok(Self::from_coords(j.order, &coords))
    }

    fn mul_impl(&self, other: &Self) -> Self {
        if self.order == 1 && other.order == 1 {
            let mut out = Cyclotomic {
                order: 1,
                num: vec![&self.num[0] * &other.num[0]],
                den: &self.den * &other.den,
            };
            out.canonicalize();
            return out;
        }
        if self.order == 1 || other.order == 1 {
            let (s, v) = if self.order == 1 { (self, other) } else { (other, self) };
            let mut out = Cyclotomic {
                order: v.order,
                num: v.num.iter().map(|c| c * &s.num[0]).collect(),
                den: &v.den * &s.den,
            };
            out.canonicalize();
            return out;
        }
        let (a, b) = Self::common(self, other);
        let mut prod = vec![BigInt::zero(); a.num.len() + b.num.len() - 1];
        for (i, x) in a.num.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, y) in b.num.iter().enumerate() {
                if !y.is_zero() {
                    prod[i + j] += x * y;
                }
            }
        }
        Self::from_exponent_poly(a.order, &prod, &a.den * &b.den)
    }

    fn add_impl(&self, other: &Self, sign: i32) -> Self {
        let (a, b) = Self::common(self, other);
        let den = a.den.lcm(&b.den);
        let fa = &den / &a.den;
        let fb = &den / &b.den;
        let n = a.num.len().max(b.num.len());
        let mut num = Vec::with_capacity(n);
        for i in 0..n {
            let x = a.num.get(i).map(|v| v * &fa).unwrap_or_else(BigInt::zero);
            let y = b.num.get(i).map(|v| v * &fb).unwrap_or_else(BigInt::zero);
            num.push(if sign > 0 { x + y } else { x - y });
        }
        let mut out = Cyclotomic { order: a.order, num, den };
        out.canonicalize();
        out
    }
}

#[derive(Serialize, Deserialize)]
struct CycloJson {
    order: u32,
    coords: Vec<String>,
}

pub fn format_rational(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn parse_rational(s: &str) -> Result<BigRational, String> {
    let s = s.trim();
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n, d),
        None => (s, "1"),
    };
    let n: BigInt = n.trim().parse().map_err(|_| format!("bad rational '{s}'"))?;
    let d: BigInt = d.trim().parse().map_err(|_| format!("bad rational '{s}'"))?;
    if d.is_zero() {
        return Err(format!("zero denominator in '{s}'"));
    }
    Ok(BigRational::new(n, d))
}

/// Inverse of `a` modulo `m` in Q[x], via the extended Euclidean algorithm.
fn poly_inverse_mod(a: &[BigRational], m: &[BigRational]) -> Option<Vec<BigRational>> {
    fn trim(p: &mut Vec<BigRational>) {
        while p.len() > 1 && p.last().is_some_and(Zero::is_zero) {
            p.pop();
        }
    }
    fn divmod(a: &[BigRational], b: &[BigRational]) -> (Vec<BigRational>, Vec<BigRational>) {
        let mut r = a.to_vec();
        trim(&mut r);
        let db = b.len() - 1;
        if r.len() < b.len() {
            return (vec![BigRational::zero()], r);
        }
        let lead = b[db].clone();
        let mut q = vec![BigRational::zero(); r.len() - db];
        for i in (0..q.len()).rev() {
            let c = &r[i + db] / &lead;
            if c.is_zero() {
                continue;
            }
            for (j, bj) in b.iter().enumerate() {
                r[i + j] = &r[i + j] - &c * bj;
            }
            q[i] = c;
        }
        r.truncate(db.max(1));
        trim(&mut r);
        (q, r)
    }
    fn mul(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
        let mut out = vec![BigRational::zero(); a.len() + b.len() - 1];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                out[i + j] = &out[i + j] + x * y;
            }
        }
        out
    }
    fn sub(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
        let n = a.len().max(b.len());
        let mut out: Vec<BigRational> = (0..n)
            .map(|i| {
                a.get(i).cloned().unwrap_or_else(BigRational::zero)
                    - b.get(i).cloned().unwrap_or_else(BigRational::zero)
            })
            .collect();
        trim(&mut out);
        out
    }
    let mut r0 = m.to_vec();
    let mut r1 = a.to_vec();
    trim(&mut r1);
    let mut s0 = vec![BigRational::zero()];
    let mut s1 = vec![BigRational::one()];
    while !(r1.len() == 1 && r1[0].is_zero()) {
        let (q, r) = divmod(&r0, &r1);
        let s = sub(&s0, &mul(&q, &s1));
        r0 = std::mem::replace(&mut r1, r);
        s0 = std::mem::replace(&mut s1, s);
    }
    if r0.len() != 1 || r0[0].is_zero() {
        return None;
    }
    let c = r0[0].recip();
    Some(s0.iter().map(|x| x * &c).collect())
}

impl PartialEq for Cyclotomic {
    fn eq(&self, other: &Self) -> bool {
        if self.order == other.order {
            return self.den == other.den && self.num == other.num;
        }
        let (a, b) = Self::common(self, other);
        a.den == b.den && a.num == b.num
    }
}
impl Eq for Cyclotomic {}

impl fmt::Display for Cyclotomic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(r) = self.to_rational() {
            return write!(f, "{r}");
        }
        let mut parts = Vec::new();
        for (i, c) in self.coords().iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let z = match i {
                0 => String::new(),
                1 => format!("z{}", self.order),
                _ => format!("z{}^{}", self.order, i),
            };
            parts.push(if z.is_empty() {
                c.to_string()
            } else if c.is_one() {
                z
            } else {
                format!("({c})*{z}")
            });
        }
        write!(f, "({})", parts.join(" + "))
    }
}

impl Zero for Cyclotomic {
    fn zero() -> Self {
        Cyclotomic::from_int(0)
    }
    fn is_zero(&self) -> bool {
        self.is_zero_value()
    }
}

impl One for Cyclotomic {
    fn one() -> Self {
        Cyclotomic::from_int(1)
    }
}

impl Add for Cyclotomic {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        self.add_impl(&rhs, 1)
    }
}
impl Sub for Cyclotomic {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self.add_impl(&rhs, -1)
    }
}
impl Mul for Cyclotomic {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        self.mul_impl(&rhs)
    }
}
impl<'a> Add<&'a Cyclotomic> for &'a Cyclotomic {
    type Output = Cyclotomic;
    fn add(self, rhs: &Cyclotomic) -> Cyclotomic {
        self.add_impl(rhs, 1)
    }
}
impl<'a> Sub<&'a Cyclotomic> for &'a Cyclotomic {
    type Output = Cyclotomic;
    fn sub(self, rhs: &Cyclotomic) -> Cyclotomic {
        self.add_impl(rhs, -1)
    }
}
impl<'a> Mul<&'a Cyclotomic> for &'a Cyclotomic {
    type Output = Cyclotomic;
    fn mul(self, rhs: &Cyclotomic) -> Cyclotomic {
        self.mul_impl(rhs)
    }
}
impl Neg for Cyclotomic {
    type Output = Self;
    fn neg(mut self) -> Self {
        for c in self.num.iter_mut() {
            *c = -&*c;
        }
        self
    }
}

impl Coeff for Cyclotomic {
    fn from_rational(r: &BigRational) -> Self {
        Cyclotomic::from_rational(r)
    }
    fn mul_ref(&self, rhs: &Self) -> Self {
        self.mul_impl(rhs)
    }
    fn add_assign_ref(&mut self, rhs: &Self) {
        *self = self.add_impl(rhs, 1);
    }
    fn inv(&self) -> Option<Self> {
        self.inverse()
    }
    fn to_rational(&self) -> Option<BigRational> {
        Cyclotomic::to_rational(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(v: &[i64]) -> IntPoly {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn small_cyclotomic_polynomials() {
        assert_eq!(cyclotomic_polynomial(1), ints(&[-1, 1]));
        assert_eq!(cyclotomic_polynomial(4), ints(&[1, 0, 1]));
        assert_eq!(cyclotomic_polynomial(6), ints(&[1, -1, 1]));
        assert_eq!(cyclotomic_polynomial(12), ints(&[1, 0, -1, 0, 1]));
        for m in 1..60u32 {
            assert_eq!(cyclotomic_polynomial(m).len() as u64 - 1, euler_phi(m as u64));
        }
    }

    #[test]
    fn roots_of_unity_reduce() {
        assert_eq!(Cyclotomic::root_of_unity(1, 0), Cyclotomic::from_int(1));
        assert_eq!(Cyclotomic::root_of_unity(4, 2), Cyclotomic::from_int(-1));
        assert_eq!(Cyclotomic::root_of_unity(5, 7), Cyclotomic::root_of_unity(5, 2));
        assert_eq!(Cyclotomic::root_of_unity(4, 2).to_rational(), Some(BigRational::from_integer((-1).into())));
        assert_eq!(Cyclotomic::root_of_unity(5, 1).to_rational(), None);
    }

    #[test]
    fn inverses() {
        let z5 = Cyclotomic::root_of_unity(5, 1);
        assert_eq!(z5.inverse().unwrap(), Cyclotomic::root_of_unity(5, 4));
        let z3 = Cyclotomic::root_of_unity(3, 1);
        let one = Cyclotomic::one();
        assert_eq!((&one + &z3) * (&one + &z3.galois(2)), one);
        let a = Cyclotomic::from_int(2) - Cyclotomic::from_int(3) * Cyclotomic::root_of_unity(8, 1);
        assert_eq!(&a * &a.inverse().unwrap(), one);
        assert!(Cyclotomic::zero().inverse().is_none());
    }

    #[test]
    fn mixed_orders_lift() {
        let z4 = Cyclotomic::root_of_unity(4, 1);
        let z6 = Cyclotomic::root_of_unity(6, 1);
        let p = &z4 * &z6;
        assert_eq!(p.order(), 12);
        assert_eq!(p, Cyclotomic::root_of_unity(12, 5));
        // zeta_6^3 = -1 collapses to order 1
        assert_eq!(Cyclotomic::root_of_unity(6, 3).order(), 1);
        assert_eq!(Cyclotomic::root_of_unity(10, 2), Cyclotomic::root_of_unity(5, 1));
    }

    #[test]
    fn embedding_of_zeta6() {
        let e = Cyclotomic::root_of_unity(6, 1).embed(64);
        assert!((e.re.to_f64() - 0.5).abs() < 1e-18);
        assert!((e.im.to_f64() - 0.866_025_403_784_438_6).abs() < 1e-15);
    }

    #[test]
    fn json_roundtrip() {
        let a = Cyclotomic::from_coords(
            5,
            &[BigRational::new(1.into(), 2.into()), BigRational::from_integer((-3).into())],
        );
        let back = Cyclotomic::from_json(&a.to_json()).unwrap();
        assert_eq!(a, back);
    }
}
