//! Hecke operators: integral weight on q-series, the scaled half-integral
//! weight action on vector-valued coefficient families, and the
//! multiplicative operator on products.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::{BigRational, Rational64};
use num_traits::{One, Zero};

use crate::arith::{gcd, inv_mod, is_prime, kronecker, ord_p};
use crate::cyclo::Cyclotomic;
use crate::error::{Error, Result};
use crate::qseries::QSeries;
use crate::scalar::Coeff;

fn rational_pow(p: u32, e: i64) -> BigRational {
    let b = BigInt::from(p).pow(e.unsigned_abs() as u32);
    if e >= 0 {
        BigRational::from_integer(b)
    } else {
        BigRational::new(BigInt::one(), b)
    }
}

fn check_prime(p: u32) -> Result<()> {
    if is_prime(p as u64) {
        Ok(())
    } else {
        Err(Error::InvalidPrime { p: p as u64, reason: "not prime".into() })
    }
}

fn require_integral<C: Coeff>(f: &QSeries<C>) -> Result<()> {
    if f.has_integral_exponents() {
        Ok(())
    } else {
        Err(Error::InvalidArgument("Hecke operator needs integral exponents".into()))
    }
}

/// Truncation of `n -> c(p^m n)`: every `n < ceil(T / p^m)` is known.
fn hecke_trunc(t: Option<Rational64>, pm: i64) -> Option<Rational64> {
    t.map(|t| Rational64::from_integer((t / Rational64::from_integer(pm)).ceil().to_integer()))
}

/// `T_k(p)`: the coefficient of `q^n` is `c(pn) + p^{k-1} c(n/p)`.
pub fn hecke_integral<C: Coeff>(f: &QSeries<C>, k: i32, p: u32) -> Result<QSeries<C>> {
    check_prime(p)?;
    require_integral(f)?;
    let trunc = hecke_trunc(f.trunc(), p as i64);
    let w = C::from_rational(&rational_pow(p, k as i64 - 1));
    let p = p as i64;
    let mut out: Vec<(Rational64, C)> = Vec::new();
    for (e, c) in f.terms() {
        let e = e.to_integer();
        if e % p == 0 {
            out.push((Rational64::from_integer(e / p), c.clone()));
        }
        let up = Rational64::from_integer(e * p);
        if trunc.is_none_or(|t| up < t) {
            out.push((up, c.mul_ref(&w)));
        }
    }
    Ok(QSeries::from_terms(trunc, out))
}

/// `T_k(p^m)` through `T(p^{m+1}) = T(p) T(p^m) - p^{k-1} T(p^{m-1})`.
pub fn hecke_integral_power<C: Coeff>(f: &QSeries<C>, k: i32, p: u32, m: u32) -> Result<QSeries<C>> {
    check_prime(p)?;
    require_integral(f)?;
    if m == 0 {
        return Ok(f.clone());
    }
    let w = rational_pow(p, k as i64 - 1);
    let mut prev = f.clone();
    let mut cur = hecke_integral(f, k, p)?;
    for _ in 1..m {
        let next = hecke_integral(&cur, k, p)?.sub(&prev.scale_rational(&w));
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// `T_k(p^m)` by the closed double sum
/// `sum_{t <= min(ord_p n, m)} p^{(k-1)t} c(p^{m-2t} n)`.
pub fn hecke_integral_power_closed<C: Coeff>(
    f: &QSeries<C>,
    k: i32,
    p: u32,
    m: u32,
) -> Result<QSeries<C>> {
    check_prime(p)?;
    require_integral(f)?;
    let pm = (p as i64).pow(m);
    let trunc = hecke_trunc(f.trunc(), pm);
    let lo = match f.valuation() {
        Some(v) => (v.to_integer() * pm).min(v.to_integer()),
        None => return Ok(QSeries::zero_with_trunc(trunc)),
    };
    let hi = match trunc {
        Some(t) => t.to_integer(),
        None => {
            // Exact input: the support of the output is bounded by the support of f.
            let top = f.terms().last().map(|(e, _)| e.to_integer()).unwrap_or(0);
            top.max(top * pm) + 1
        }
    };
    let pp = p as i64;
    let mut out = Vec::new();
    for n in lo..hi {
        let ell = if n == 0 { m } else { ord_p(n, pp).min(m) };
        let mut acc = C::zero();
        for t in 0..=ell {
            // p^{m-2t} n, possibly with a negative power of p.
            let e = m as i64 - 2 * t as i64;
            let idx = if e >= 0 { n * pp.pow(e as u32) } else { n / pp.pow((-e) as u32) };
            let c = f.coeff_int(idx);
            if !c.is_zero() {
                acc.add_assign_ref(&c.scale(&rational_pow(p, (k as i64 - 1) * t as i64)));
            }
        }
        out.push((Rational64::from_integer(n), acc));
    }
    Ok(QSeries::from_terms(trunc, out))
}

/// Holomorphic-part coefficients `c(n, gamma)` of a weight-1/2
/// vector-valued form of level `N`, known for `n < trunc`.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorValuedCoefficients {
    pub level: u32,
    /// Weight as a half-integer (`1/2` for every family used here).
    pub weight: Rational64,
    /// `+1` for the Weil representation, `-1` for its dual.
    pub dual_sign: i8,
    /// `(gamma mod 2N, n) -> c(n, gamma)`, zeros omitted.
    pub coeffs: BTreeMap<(i64, i64), BigInt>,
    pub trunc: i64,
}

impl VectorValuedCoefficients {
    pub fn zero(level: u32, dual_sign: i8, trunc: i64) -> Self {
        VectorValuedCoefficients {
            level,
            weight: Rational64::new(1, 2),
            dual_sign,
            coeffs: BTreeMap::new(),
            trunc,
        }
    }

    fn modulus(&self) -> i64 {
        2 * self.level as i64
    }

    /// Level-one family of a Kohnen plus-space form `sum a(n) q^n`:
    /// `c(n, gamma) = a(n)` with `gamma = n mod 2`.
    pub fn from_plus_space(a: &BTreeMap<i64, BigInt>, trunc: i64) -> Self {
        let mut v = Self::zero(1, 1, trunc);
        for (&n, c) in a {
            if n < trunc && !c.is_zero() {
                v.coeffs.insert((n.rem_euclid(2), n), c.clone());
            }
        }
        v
    }

    /// Inverse of [`from_plus_space`](Self::from_plus_space).
    pub fn to_plus_space(&self) -> BTreeMap<i64, BigInt> {
        self.coeffs.iter().map(|(&(_, n), c)| (n, c.clone())).collect()
    }

    pub fn get(&self, n: i64, gamma: i64) -> Result<BigInt> {
        if n >= self.trunc {
            return Err(Error::InsufficientTruncation { needed: n + 1 });
        }
        let g = gamma.rem_euclid(self.modulus());
        Ok(self.coeffs.get(&(g, n)).cloned().unwrap_or_default())
    }

    pub fn min_index(&self) -> Option<i64> {
        self.coeffs.keys().map(|&(_, n)| n).min()
    }

    /// Checks the support congruence `n = sigma gamma^2 (mod 4N)` and the
    /// symmetry `c(n, -gamma) = c(n, gamma)` of weight 1/2.
    pub fn check_invariants(&self) -> bool {
        let m = self.modulus();
        let four_n = 2 * m;
        self.coeffs.iter().all(|(&(g, n), c)| {
            let support = (n - self.dual_sign as i64 * g * g).rem_euclid(four_n) == 0;
            let mirror = self.coeffs.get(&((-g).rem_euclid(m), n));
            support && mirror == Some(c)
        })
    }

    /// Residues `gamma mod 2N` with `n = sigma gamma^2 (mod 4N)`.
    fn gammas_for(&self, n: i64) -> Vec<i64> {
        let m = self.modulus();
        (0..m)
            .filter(|g| (n - self.dual_sign as i64 * g * g).rem_euclid(2 * m) == 0)
            .collect()
    }
}

/// The scaled action `p T_{1/2}(p^2)`:
/// `c'(n, gamma) = p c(p^2 n, p gamma) + (sigma n / p) c(n, gamma) + c(n/p^2, gamma/p)`.
///
/// For `p = 2` at level one this is the plus-space operator with the
/// Kronecker symbol `(n/2)`, restricted to `n = 0, 1 (mod 4)`.
pub fn hecke_half(v: &VectorValuedCoefficients, p: u32) -> Result<VectorValuedCoefficients> {
    check_prime(p)?;
    let m = 2 * v.level as i64;
    let pp = p as i64;
    if gcd(pp, m) != 1 && !(v.level == 1 && p == 2) {
        return Err(Error::InvalidPrime {
            p: p as u64,
            reason: format!("p divides 2N = {m}"),
        });
    }
    let p2 = pp * pp;
    let trunc = Integer::div_ceil(&v.trunc, &p2);
    let mut out = VectorValuedCoefficients::zero(v.level, v.dual_sign, trunc);
    let lo = match v.min_index() {
        Some(lo) => (lo * p2).min(lo.div_euclid(p2)),
        None => return Ok(out),
    };
    let sigma = v.dual_sign as i64;
    let pinv = inv_mod(pp, m);
    for n in lo..trunc {
        for g in v.gammas_for(n) {
            let mut acc = BigInt::zero();
            let big = v.get(p2 * n, pp * g)?;
            if !big.is_zero() {
                acc += big * pp;
            }
            let k = kronecker(sigma * n, pp);
            if k != 0 {
                acc += v.get(n, g)? * k;
            }
            if n % p2 == 0 {
                let gp = match pinv {
                    Some(inv) => g * inv,
                    // Level one, p = 2: the plus-space index fixes gamma = n/4 mod 2.
                    None => (n / p2).rem_euclid(2),
                };
                let small = v.get(n / p2, gp)?;
                acc += small;
            }
            if !acc.is_zero() {
                out.coeffs.insert((g.rem_euclid(m), n), acc);
            }
        }
    }
    Ok(out)
}

/// `p^m T_{1/2}(p^{2m})` via `S_{m+1} = S_1 S_m - p S_{m-1}`.
pub fn hecke_half_power(v: &VectorValuedCoefficients, p: u32, m: u32) -> Result<VectorValuedCoefficients> {
    if m == 0 {
        return Ok(v.clone());
    }
    let mut prev = v.clone();
    let mut cur = hecke_half(v, p)?;
    for _ in 1..m {
        let next = hecke_half(&cur, p)?;
        let mut combined = next.clone();
        let pp = BigInt::from(p);
        for (key, c) in prev.coeffs.iter() {
            if key.1 >= combined.trunc {
                continue;
            }
            let slot = combined.coeffs.entry(*key).or_default();
            *slot -= c * &pp;
        }
        combined.coeffs.retain(|_, c| !c.is_zero());
        prev = cur;
        cur = combined;
    }
    Ok(cur)
}

/// The multiplicative Hecke operator
/// `eps f(p tau) prod_{j<p} f((tau + j)/p)`, with `eps` normalizing the
/// leading coefficient to 1.  Requires `p` prime, `p` not dividing `N`.
pub fn mult_hecke(f: &QSeries<Cyclotomic>, _k: i32, level: u32, p: u32) -> Result<QSeries<Cyclotomic>> {
    check_prime(p)?;
    if level.is_multiple_of(p) {
        return Err(Error::InvalidPrime { p: p as u64, reason: format!("p divides N = {level}") });
    }
    if f.is_zero() {
        return Err(Error::ZeroSeries);
    }
    let mut acc = f.substitute_up(p);
    for j in 0..p {
        acc = acc.mul(&f.slash_shift(p, j));
    }
    if !acc.has_integral_exponents() {
        let bad = acc
            .terms()
            .find(|(e, _)| !e.is_integer())
            .map(|(e, _)| e.to_string())
            .unwrap_or_default();
        return Err(Error::NonIntegralExponent(bad));
    }
    let lead = acc.leading_coefficient().cloned().ok_or(Error::ZeroSeries)?;
    let eps = lead.inverse().ok_or(Error::NotInvertible)?;
    Ok(collapse_ram(&acc.scale(&eps)))
}

/// Rebuilds a series whose exponents are all integral with ramification 1.
pub fn collapse_ram<C: Coeff>(s: &QSeries<C>) -> QSeries<C> {
    let trunc = s.trunc().map(|t| Rational64::from_integer(t.ceil().to_integer()));
    QSeries::from_terms(trunc, s.terms().map(|(e, c)| (e, c.clone())))
}

/// Exponent of the highest power of `p` dividing `n`, as used by callers
/// that need `ell = min(ord_p(n), m)`.
pub fn ell(n: i64, p: u32, m: u32) -> u32 {
    if n == 0 {
        m
    } else {
        ord_p(n.abs(), p as i64).min(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::delta_series;
    use crate::qseries::exp;

    fn r(v: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(v))
    }

    #[test]
    fn integral_hecke_examples() {
        let one = QSeries::<BigRational>::one();
        let out = hecke_integral(&one, 2, 3).unwrap();
        assert_eq!(out, QSeries::constant(r(4)));
        let qinv = QSeries::<BigRational>::monomial(r(1), exp(-1));
        let out = hecke_integral(&qinv, 0, 2).unwrap();
        assert_eq!(out, QSeries::monomial(BigRational::new(1.into(), 2.into()), exp(-2)));
        let d = delta_series(40);
        let t2 = hecke_integral(&d, 12, 2).unwrap();
        assert_eq!(t2.coeff_int(1), r(-24));
        assert!(t2.agrees_with(&d.scale_rational(&r(-24)), None));
    }

    #[test]
    fn power_recursion_matches_closed_form_on_delta() {
        let d = delta_series(80);
        let rec = hecke_integral_power(&d, 12, 2, 2).unwrap();
        let closed = hecke_integral_power_closed(&d, 12, 2, 2).unwrap();
        assert!(rec.agrees_with(&closed, None));
        assert_eq!(rec.coeff_int(1), r(-1472));
        // T(2) applied twice differs from T(4) by 2^11 T(1).
        let twice = hecke_integral(&hecke_integral(&d, 12, 2).unwrap(), 12, 2).unwrap();
        assert_eq!(twice.coeff_int(1), r(-1472 + 2048));
    }

    #[test]
    fn half_hecke_of_zero_is_zero() {
        let v = VectorValuedCoefficients::zero(1, 1, 100);
        assert!(hecke_half(&v, 3).unwrap().coeffs.is_empty());
        assert!(hecke_half(&VectorValuedCoefficients::zero(3, 1, 10), 3).is_err());
    }

    #[test]
    fn mult_hecke_trivial_cases() {
        let one = QSeries::<Cyclotomic>::one();
        assert_eq!(mult_hecke(&one, 0, 1, 2).unwrap(), one);
        let d = delta_series(40).to_cyclotomic();
        let out = mult_hecke(&d, 12, 1, 2).unwrap();
        assert_eq!(out.valuation(), Some(exp(3)));
        assert!(out.has_integral_exponents());
    }
}
