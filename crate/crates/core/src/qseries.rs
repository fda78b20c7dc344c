//! Truncated sparse Laurent/Puiseux series in q.
//!
//! Exponents live in `(1/ram) Z` and are stored as integer keys
//! `exponent * ram`.  A series either carries a truncation `T` (coefficients
//! are known for exponents `< T`) or is exact (a finite Laurent polynomial).

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::{BigRational, Rational64};
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::cyclo::{format_rational, parse_rational, Cyclotomic};
use crate::error::{Error, Result};
use crate::scalar::Coeff;

#[derive(Clone, Debug)]
pub struct QSeries<C> {
    ram: u32,
    trunc: Option<Rational64>,
    terms: BTreeMap<i64, C>,
}

fn ratio(n: i64, d: i64) -> Rational64 {
    Rational64::new(n, d)
}

fn min_trunc(a: Option<Rational64>, b: Option<Rational64>) -> Option<Rational64> {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some(x), Some(y)) => Some(x.min(y)),
    }
}

impl<C: Coeff> QSeries<C> {
    /// Builds a series from `(exponent, coefficient)` pairs.  Zero
    /// coefficients and terms at or beyond the truncation are dropped.
    pub fn from_terms<I>(trunc: Option<Rational64>, terms: I) -> Self
    where
        I: IntoIterator<Item = (Rational64, C)>,
    {
        let items: Vec<(Rational64, C)> = terms.into_iter().collect();
        let ram = items
            .iter()
            .fold(1i64, |l, (e, _)| l.lcm(e.denom()))
            .max(1) as u32;
        let mut map = BTreeMap::new();
        for (e, c) in items {
            if trunc.is_some_and(|t| e >= t) {
                continue;
            }
            let k = (e * Rational64::from_integer(ram as i64)).to_integer();
            let slot = map.entry(k).or_insert_with(C::zero);
            slot.add_assign_ref(&c);
        }
        let mut s = QSeries { ram, trunc, terms: map };
        s.clean();
        s
    }

    /// Dense integral-exponent constructor: `coeffs[i]` is the coefficient of
    /// `q^(offset + i)`, with truncation `offset + coeffs.len()`.
    pub fn from_dense(offset: i64, coeffs: Vec<C>) -> Self {
        let trunc = offset + coeffs.len() as i64;
        let mut map = BTreeMap::new();
        for (i, c) in coeffs.into_iter().enumerate() {
            if !c.is_zero() {
                map.insert(offset + i as i64, c);
            }
        }
        QSeries { ram: 1, trunc: Some(Rational64::from_integer(trunc)), terms: map }
    }

    pub fn zero_with_trunc(trunc: Option<Rational64>) -> Self {
        QSeries { ram: 1, trunc, terms: BTreeMap::new() }
    }

    pub fn one() -> Self {
        Self::monomial(C::one(), Rational64::zero())
    }

    /// The exact monomial `c q^e`.
    pub fn monomial(c: C, e: Rational64) -> Self {
        Self::from_terms(None, [(e, c)])
    }

    pub fn constant(c: C) -> Self {
        Self::monomial(c, Rational64::zero())
    }

    pub fn ram_index(&self) -> u32 {
        self.ram
    }

    pub fn trunc(&self) -> Option<Rational64> {
        self.trunc
    }

    pub fn is_exact(&self) -> bool {
        self.trunc.is_none()
    }

    /// Lowers the truncation to `min(T, t)`.
    pub fn truncate(&self, t: Rational64) -> Self {
        let trunc = min_trunc(self.trunc, Some(t));
        let mut s = self.clone();
        s.trunc = trunc;
        s.clean();
        s
    }

    pub fn truncate_int(&self, t: i64) -> Self {
        self.truncate(Rational64::from_integer(t))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Smallest exponent with a nonzero coefficient.
    pub fn valuation(&self) -> Option<Rational64> {
        self.terms.keys().next().map(|&k| ratio(k, self.ram as i64))
    }

    /// Lower bound for the valuation (the truncation for a zero series).
    fn val_lower(&self) -> Option<Rational64> {
        self.valuation().or(self.trunc)
    }

    pub fn leading_coefficient(&self) -> Option<&C> {
        self.terms.values().next()
    }

    /// Coefficient of `q^e` (zero if absent).  Panics if `e` lies at or
    /// beyond the truncation.
    pub fn coeff(&self, e: Rational64) -> C {
        assert!(self.is_known(e), "coefficient at {e} is beyond the truncation");
        let l = Rational64::from_integer(self.ram as i64);
        let k = e * l;
        if !k.is_integer() {
            return C::zero();
        }
        self.terms.get(&k.to_integer()).cloned().unwrap_or_else(C::zero)
    }

    pub fn coeff_int(&self, n: i64) -> C {
        self.coeff(Rational64::from_integer(n))
    }

    pub fn is_known(&self, e: Rational64) -> bool {
        self.trunc.is_none_or(|t| e < t)
    }

    pub fn terms(&self) -> impl Iterator<Item = (Rational64, &C)> + '_ {
        let l = self.ram as i64;
        self.terms.iter().map(move |(&k, c)| (ratio(k, l), c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn has_integral_exponents(&self) -> bool {
        self.ram == 1
    }

    fn clean(&mut self) {
        self.terms.retain(|_, c| !c.is_zero());
        if let Some(t) = self.trunc {
            let l = self.ram as i64;
            self.terms.retain(|&k, _| ratio(k, l) < t);
        }
        self.reduce_ram();
    }

    fn reduce_ram(&mut self) {
        if self.ram == 1 {
            return;
        }
        let g = self
            .terms
            .keys()
            .fold(self.ram as i64, |g, &k| g.gcd(&k));
        if g > 1 {
            self.ram /= g as u32;
            self.terms = std::mem::take(&mut self.terms)
                .into_iter()
                .map(|(k, c)| (k / g, c))
                .collect();
        }
    }

    fn rescaled(&self, ram: u32) -> BTreeMap<i64, C> {
        let f = (ram / self.ram) as i64;
        if f == 1 {
            return self.terms.clone();
        }
        self.terms.iter().map(|(&k, c)| (k * f, c.clone())).collect()
    }

    fn combine(&self, other: &Self, negate: bool) -> Self {
        let ram = (self.ram as i64).lcm(&(other.ram as i64)) as u32;
        let mut terms = self.rescaled(ram);
        for (k, c) in other.rescaled(ram) {
            let c = if negate { -c } else { c };
            match terms.get_mut(&k) {
                Some(v) => v.add_assign_ref(&c),
                None => {
                    terms.insert(k, c);
                }
            }
        }
        let mut s = QSeries { ram, trunc: min_trunc(self.trunc, other.trunc), terms };
        s.clean();
        s
    }

    pub fn add(&self, other: &Self) -> Self {
        self.combine(other, false)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.combine(other, true)
    }

    pub fn neg(&self) -> Self {
        QSeries {
            ram: self.ram,
            trunc: self.trunc,
            terms: self.terms.iter().map(|(&k, c)| (k, -c.clone())).collect(),
        }
    }

    pub fn scale(&self, c: &C) -> Self {
        let mut s = QSeries {
            ram: self.ram,
            trunc: self.trunc,
            terms: self.terms.iter().map(|(&k, v)| (k, v.mul_ref(c))).collect(),
        };
        s.clean();
        s
    }

    pub fn scale_rational(&self, r: &BigRational) -> Self {
        self.scale(&C::from_rational(r))
    }

    /// Multiplication by the exact monomial `q^e`.
    pub fn shift(&self, e: Rational64) -> Self {
        let ram = (self.ram as i64).lcm(e.denom()) as u32;
        let ek = (e * Rational64::from_integer(ram as i64)).to_integer();
        let terms = self.rescaled(ram).into_iter().map(|(k, c)| (k + ek, c)).collect();
        let mut s = QSeries { ram, trunc: self.trunc.map(|t| t + e), terms };
        s.clean();
        s
    }

    pub fn mul(&self, other: &Self) -> Self {
        let trunc = match (self.trunc, other.trunc) {
            (None, None) => None,
            _ => {
                let a = match (self.trunc, other.val_lower()) {
                    (Some(t), Some(v)) => Some(t + v),
                    _ => None,
                };
                let b = match (other.trunc, self.val_lower()) {
                    (Some(t), Some(v)) => Some(t + v),
                    _ => None,
                };
                min_trunc(a, b)
            }
        };
        let ram = (self.ram as i64).lcm(&(other.ram as i64)) as u32;
        let a = self.rescaled(ram);
        let b = other.rescaled(ram);
        let limit = trunc.map(|t| t * Rational64::from_integer(ram as i64));
        let mut terms: BTreeMap<i64, C> = BTreeMap::new();
        for (ka, ca) in a.iter() {
            for (kb, cb) in b.iter() {
                let k = ka + kb;
                if limit.is_some_and(|l| Rational64::from_integer(k) >= l) {
                    break;
                }
                let p = ca.mul_ref(cb);
                match terms.get_mut(&k) {
                    Some(v) => v.add_assign_ref(&p),
                    None => {
                        terms.insert(k, p);
                    }
                }
            }
        }
        let mut s = QSeries { ram, trunc, terms };
        s.clean();
        s
    }

    /// Reciprocal series.  Exact non-monomial inputs have no finite
    /// reciprocal; give them a truncation first.
    pub fn invert(&self) -> Result<Self> {
        let (&k0, a0) = self.terms.iter().next().ok_or(Error::ZeroSeries)?;
        let inv0 = a0.inv().ok_or(Error::NotInvertible)?;
        let l = self.ram as i64;
        let v = ratio(k0, l);
        let trunc = match self.trunc {
            None => {
                if self.terms.len() == 1 {
                    return Ok(Self::monomial(inv0, -v));
                }
                return Err(Error::Unbounded);
            }
            Some(t) => t - v - v,
        };
        // u = f / (a0 q^v) = 1 + sum u_k q^(k/l); coefficients of 1/u known for k/l < T - v.
        let n_known = ((self.trunc.unwrap() - v) * Rational64::from_integer(l)).ceil().to_integer();
        let n_known = n_known.max(0) as usize;
        let u: Vec<(usize, C)> = self
            .terms
            .iter()
            .skip(1)
            .map(|(&k, c)| ((k - k0) as usize, c.mul_ref(&inv0)))
            .filter(|(k, _)| *k < n_known)
            .collect();
        let mut b: Vec<C> = Vec::with_capacity(n_known);
        for n in 0..n_known {
            if n == 0 {
                b.push(C::one());
                continue;
            }
            let mut acc = C::zero();
            for (k, uk) in u.iter() {
                if *k > n {
                    break;
                }
                let bn = &b[n - k];
                if !bn.is_zero() {
                    acc.add_assign_ref(&uk.mul_ref(bn));
                }
            }
            b.push(-acc);
        }
        let terms = b
            .into_iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(n, c)| (n as i64 - k0, c.mul_ref(&inv0)))
            .collect();
        let mut s = QSeries { ram: self.ram, trunc: Some(trunc), terms };
        s.clean();
        Ok(s)
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        Ok(self.mul(&other.invert()?))
    }

    pub fn pow(&self, n: i64) -> Result<Self> {
        if n < 0 {
            return self.invert()?.pow(-n);
        }
        let mut result = Self::one();
        let mut base = self.clone();
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        Ok(result)
    }

    /// `Theta = q d/dq`.
    pub fn theta(&self) -> Self {
        let l = self.ram as i64;
        let mut s = QSeries {
            ram: self.ram,
            trunc: self.trunc,
            terms: self
                .terms
                .iter()
                .map(|(&k, c)| {
                    let e = BigRational::new(BigInt::from(k), BigInt::from(l));
                    (k, c.scale(&e))
                })
                .collect(),
        };
        s.clean();
        s
    }

    /// `q -> q^c`.
    pub fn substitute_up(&self, c: u32) -> Self {
        assert!(c >= 1);
        let mut s = QSeries {
            ram: self.ram,
            trunc: self.trunc.map(|t| t * Rational64::from_integer(c as i64)),
            terms: self.terms.iter().map(|(&k, v)| (k * c as i64, v.clone())).collect(),
        };
        s.clean();
        s
    }

    pub fn map<D: Coeff>(&self, f: impl Fn(&C) -> D) -> QSeries<D> {
        let mut s = QSeries {
            ram: self.ram,
            trunc: self.trunc,
            terms: self.terms.iter().map(|(&k, c)| (k, f(c))).collect(),
        };
        s.clean();
        s
    }

    /// First exponent below `limit` (and below both truncations) where the
    /// two series differ.
    pub fn first_mismatch(&self, other: &Self, limit: Option<Rational64>) -> Option<Rational64> {
        let bound = min_trunc(min_trunc(self.trunc, other.trunc), limit);
        let d = self.sub(other);
        let first = d.terms().map(|(e, _)| e).find(|e| bound.is_none_or(|b| *e < b));
        first
    }

    pub fn agrees_with(&self, other: &Self, limit: Option<Rational64>) -> bool {
        self.first_mismatch(other, limit).is_none()
    }
}

impl QSeries<BigRational> {
    pub fn from_ints(offset: i64, coeffs: &[BigInt]) -> Self {
        Self::from_dense(offset, coeffs.iter().cloned().map(BigRational::from_integer).collect())
    }

    pub fn to_cyclotomic(&self) -> QSeries<Cyclotomic> {
        self.map(Cyclotomic::from_rational)
    }

    pub fn is_integral(&self) -> bool {
        self.terms.values().all(|c| c.is_integer())
    }

    pub fn to_json(&self) -> serde_json::Value {
        self.to_cyclotomic().to_json()
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        QSeries::<Cyclotomic>::from_json(v)?.rationalize()
    }
}

impl QSeries<Cyclotomic> {
    /// `f((tau + j) / p)`: the term `a q^e` becomes `a zeta_p^{j e} q^{e/p}`.
    pub fn slash_shift(&self, p: u32, j: u32) -> Self {
        let l = self.ram as i64;
        let big = l * p as i64;
        let mut s = QSeries {
            ram: big as u32,
            trunc: self.trunc.map(|t| t / Rational64::from_integer(p as i64)),
            terms: self
                .terms
                .iter()
                .map(|(&k, c)| {
                    let z = Cyclotomic::root_of_unity(big as u32, j as i64 * k);
                    (k, c * &z)
                })
                .collect(),
        };
        s.clean();
        s
    }

    pub fn rationalize(&self) -> Result<QSeries<BigRational>> {
        let mut terms = BTreeMap::new();
        for (&k, c) in self.terms.iter() {
            match c.to_rational() {
                Some(r) => {
                    terms.insert(k, r);
                }
                None => {
                    return Err(Error::NonRationalCoefficient(
                        ratio(k, self.ram as i64).to_string(),
                    ))
                }
            }
        }
        Ok(QSeries { ram: self.ram, trunc: self.trunc, terms })
    }

    /// Applies a Galois automorphism `zeta -> zeta^a` to every coefficient.
    pub fn galois(&self, a: i64) -> Self {
        self.map(|c| if c.order() == 1 { c.clone() } else { c.galois(a) })
    }

    pub fn to_json(&self) -> serde_json::Value {
        let j = SeriesJson {
            ram_index: self.ram,
            trunc: self.trunc.map(|t| format!("{}/{}", t.numer(), t.denom())),
            terms: self
                .terms()
                .map(|(e, c)| TermJson {
                    exp: format!("{}/{}", e.numer(), e.denom()),
                    coeff: CoeffJson {
                        order: c.order(),
                        coords: c.coords().iter().map(format_rational).collect(),
                    },
                })
                .collect(),
        };
        serde_json::to_value(j).expect("serializable")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let j: SeriesJson = serde_json::from_value(v.clone()).map_err(|e| Error::Parse(e.to_string()))?;
        let trunc = match j.trunc {
            None => None,
            Some(s) => Some(parse_exp(&s)?),
        };
        let mut terms = Vec::new();
        for t in j.terms {
            let e = parse_exp(&t.exp)?;
            let coords = t
                .coeff
                .coords
                .iter()
                .map(|s| parse_rational(s))
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(Error::Parse)?;
            if t.coeff.order == 0 {
                return Err(Error::Parse("cyclotomic order must be positive".into()));
            }
            terms.push((e, Cyclotomic::from_coords(t.coeff.order, &coords)));
        }
        Ok(Self::from_terms(trunc, terms))
    }
}

fn parse_exp(s: &str) -> Result<Rational64> {
    let r = parse_rational(s).map_err(Error::Parse)?;
    let n: i64 = r.numer().try_into().map_err(|_| Error::Parse(format!("exponent {s} too large")))?;
    let d: i64 = r.denom().try_into().map_err(|_| Error::Parse(format!("exponent {s} too large")))?;
    Ok(Rational64::new(n, d))
}

#[derive(Serialize, Deserialize)]
struct SeriesJson {
    ram_index: u32,
    trunc: Option<String>,
    terms: Vec<TermJson>,
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    exp: String,
    coeff: CoeffJson,
}

#[derive(Serialize, Deserialize)]
struct CoeffJson {
    order: u32,
    coords: Vec<String>,
}

impl<C: Coeff> PartialEq for QSeries<C> {
    fn eq(&self, other: &Self) -> bool {
        self.ram == other.ram && self.trunc == other.trunc && self.terms == other.terms
    }
}

fn format_exponent(e: Rational64) -> String {
    if e.is_integer() {
        if e == Rational64::one() {
            "q".to_string()
        } else {
            format!("q^{}", e.numer())
        }
    } else {
        format!("q^({}/{})", e.numer(), e.denom())
    }
}

impl<C: Coeff + fmt::Display> fmt::Display for QSeries<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in self.terms() {
            let mut cs = c.to_string();
            let neg = cs.starts_with('-');
            if neg {
                cs.remove(0);
            }
            let body = if e.is_zero() {
                cs
            } else if cs == "1" {
                format_exponent(e)
            } else {
                format!("{cs} {}", format_exponent(e))
            };
            match (first, neg) {
                (true, false) => write!(f, "{body}")?,
                (true, true) => write!(f, "-{body}")?,
                (false, false) => write!(f, " + {body}")?,
                (false, true) => write!(f, " - {body}")?,
            }
            first = false;
        }
        Ok(())
    }
}

/// Rational exponent helper.
pub fn exp(n: i64) -> Rational64 {
    Rational64::from_integer(n)
}

pub fn is_integer_series(s: &QSeries<BigRational>) -> bool {
    s.terms().all(|(_, c)| c.is_integer())
}

pub fn abs_max_coeff(s: &QSeries<BigRational>) -> BigRational {
    s.terms().map(|(_, c)| c.abs()).fold(BigRational::zero(), |a, b| if b > a { b } else { a })
}

#[cfg(test)]
mod tests {
    use super::*;

    type RS = QSeries<BigRational>;

    fn poly(offset: i64, c: &[i64]) -> RS {
        let terms = c
            .iter()
            .enumerate()
            .map(|(i, &v)| (exp(offset + i as i64), BigRational::from_integer(v.into())));
        RS::from_terms(None, terms)
    }

    #[test]
    fn ring_examples() {
        let a = poly(0, &[1, 1]);
        let b = poly(0, &[1, -1]);
        assert_eq!(a.mul(&b), poly(0, &[1, 0, -1]));
        let qi = poly(-1, &[1]);
        assert_eq!(qi.mul(&poly(1, &[1])), RS::one());
        assert_eq!(b.pow(3).unwrap(), poly(0, &[1, -3, 3, -1]));
    }

    #[test]
    fn truncation_rules() {
        let f = poly(0, &[1, 1]).truncate_int(5);
        let g = poly(-1, &[1, 2]).truncate_int(3);
        let p = f.mul(&g);
        // min(5 + (-1), 3 + 0) = 3
        assert_eq!(p.trunc(), Some(exp(3)));
        assert_eq!(f.add(&g).trunc(), Some(exp(3)));
    }

    #[test]
    fn inversion() {
        let f = poly(0, &[1, -1]).truncate_int(10);
        let g = f.invert().unwrap();
        assert_eq!(g, RS::from_dense(0, vec![BigRational::one(); 10]));
        let h = poly(-1, &[1, 1]).truncate_int(6);
        let hi = h.invert().unwrap();
        assert_eq!(hi.valuation(), Some(exp(1)));
        assert!(h.mul(&hi).agrees_with(&RS::one(), None));
        assert_eq!(RS::zero_with_trunc(Some(exp(3))).invert(), Err(Error::ZeroSeries));
    }

    #[test]
    fn theta_and_substitution() {
        let f = poly(-2, &[1, 0, 5, 7]);
        let t = f.theta();
        assert_eq!(t.coeff_int(-2), BigRational::from_integer((-2).into()));
        assert!(t.coeff_int(0).is_zero());
        assert_eq!(t.coeff_int(1), BigRational::from_integer(7.into()));
        let s = poly(0, &[1, 1]).substitute_up(3);
        assert_eq!(s, RS::from_terms(None, [(exp(0), BigRational::one()), (exp(3), BigRational::one())]));
        let v = poly(-1, &[1]).substitute_up(2);
        assert_eq!(v.valuation(), Some(exp(-2)));
    }

    #[test]
    fn slash_shift_examples() {
        let q = poly(1, &[1]).to_cyclotomic();
        let s = q.slash_shift(2, 1);
        assert_eq!(s.coeff(Rational64::new(1, 2)), Cyclotomic::from_int(-1));
        let q2 = poly(2, &[1]).to_cyclotomic();
        assert_eq!(q2.slash_shift(2, 1), poly(1, &[1]).to_cyclotomic());
        let f = poly(0, &[1, -1]).to_cyclotomic();
        let prod = (0..3).fold(QSeries::<Cyclotomic>::one(), |acc, j| acc.mul(&f.slash_shift(3, j)));
        assert_eq!(prod.rationalize().unwrap(), poly(0, &[1, -1]));
    }

    #[test]
    fn rationalize_detects_irrational_coefficients() {
        let z3 = Cyclotomic::root_of_unity(3, 1);
        let z32 = Cyclotomic::root_of_unity(3, 2);
        let f = QSeries::from_terms(None, [(exp(0), Cyclotomic::from_int(1)), (exp(1), &z3 + &z32)]);
        assert_eq!(f.rationalize().unwrap(), poly(0, &[1, -1]));
        let g = QSeries::from_terms(None, [(exp(0), Cyclotomic::from_int(1)), (exp(1), Cyclotomic::root_of_unity(5, 1))]);
        assert_eq!(g.rationalize(), Err(Error::NonRationalCoefficient("1".into())));
    }

    #[test]
    fn json_roundtrip_and_text() {
        let f = RS::from_terms(
            Some(Rational64::new(7, 2)),
            [(Rational64::new(-1, 2), BigRational::new(3.into(), 4.into())), (exp(2), BigRational::from_integer((-5).into()))],
        );
        let j = f.to_json();
        assert_eq!(RS::from_json(&j).unwrap(), f);
        assert_eq!(poly(-1, &[1, 744, 196884]).to_string(), "q^-1 + 744 + 196884 q");
        assert_eq!(poly(0, &[0, -1, 2]).to_string(), "-q + 2 q^2");
    }
}
