//! Classical level-one expansions and eta quotients.
//!
//! Each constructor has a dense integer variant (`*_z`, returning a
//! [`ZSeries`]) used internally for long expansions, and a [`QSeries`]
//! variant for the public surface.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::{BigRational, Rational64};
use num_traits::{One, Zero};

use crate::dense::{euler_product, ZSeries};
use crate::error::{Error, Result};
use crate::qseries::QSeries;

/// `-2k / B_k` for the weights we support.
fn eisenstein_factor(k: u32) -> Option<i64> {
    match k {
        2 => Some(-24),
        4 => Some(240),
        6 => Some(-504),
        8 => Some(480),
        10 => Some(-264),
        14 => Some(-24),
        _ => None,
    }
}

/// `sigma_k(n)` for `n < len`, by sieving over divisors.
fn sigma_table(k: u32, len: usize) -> Vec<BigInt> {
    let mut t = vec![BigInt::zero(); len];
    for d in 1..len {
        let dk = BigInt::from(d).pow(k);
        let mut m = d;
        while m < len {
            t[m] += &dk;
            m += d;
        }
    }
    t
}

/// `E_k` with exponents `0..len`.
pub fn eisenstein_z(k: u32, len: usize) -> Result<ZSeries> {
    let c = eisenstein_factor(k)
        .ok_or_else(|| Error::InvalidArgument(format!("unsupported Eisenstein weight {k}")))?;
    let mut s = sigma_table(k - 1, len.max(1));
    let c = BigInt::from(c);
    for x in s.iter_mut().skip(1) {
        *x *= &c;
    }
    s[0] = BigInt::one();
    Ok(ZSeries::new(0, s))
}

/// `E_k = 1 - (2k/B_k) sum sigma_{k-1}(n) q^n`, known below `q^T`.
pub fn eisenstein(k: u32, trunc: i64) -> Result<QSeries<BigRational>> {
    Ok(eisenstein_z(k, trunc.max(0) as usize)?.to_qseries())
}

/// `Delta = q prod (1 - q^n)^24`, known below `q^T`.
pub fn delta_z(trunc: i64) -> ZSeries {
    let len = (trunc - 1).max(0) as usize;
    euler_product(len).pow(24).shift(1)
}

pub fn delta_series(trunc: i64) -> QSeries<BigRational> {
    delta_z(trunc).to_qseries()
}

/// `1/Delta`, known below `q^T`.
pub fn inverse_delta_z(trunc: i64) -> ZSeries {
    let len = (trunc + 1).max(1) as usize;
    let inv = euler_product(len).inverse().expect("Euler product is a unit");
    inv.pow(24).shift(-1)
}

/// `j = E_4^3 / Delta`, known below `q^T`.
pub fn j_z(trunc: i64) -> ZSeries {
    let len = (trunc + 1).max(1) as usize;
    let e4 = eisenstein_z(4, len).expect("weight 4");
    let e4c = e4.mul(&e4).mul(&e4);
    e4c.mul_to(&inverse_delta_z(trunc), trunc)
}

pub fn j_series(trunc: i64) -> QSeries<BigRational> {
    j_z(trunc).to_qseries()
}

/// Faber polynomial `P_n` (coefficients, constant term first) with
/// `P_n(j) = q^{-n} + O(q)`.
pub fn faber_polynomial(n: u32) -> Vec<BigInt> {
    faber_polynomials(n).pop().expect("nonempty")
}

/// `P_0, ..., P_n`, by echelonizing `j * P_{k-1}(j)` against lower ones.
pub fn faber_polynomials(n: u32) -> Vec<Vec<BigInt>> {
    // Each multiplication by j costs one term of precision.
    let t = n as i64 + 2;
    let j = j_z(2 * t);
    let mut one = vec![BigInt::zero(); t as usize];
    one[0] = BigInt::one();
    // series[k] = P_k(j).
    let mut polys: Vec<Vec<BigInt>> = vec![vec![BigInt::one()]];
    let mut series: Vec<ZSeries> = vec![ZSeries::new(0, one)];
    for k in 1..=n as i64 {
        let prev = &series[(k - 1) as usize];
        let mut s = prev.mul(&j);
        let mut p = vec![BigInt::zero()];
        p.extend(polys[(k - 1) as usize].iter().cloned());
        for e in (0..k).rev() {
            let c = s.get(-e);
            if c.is_zero() {
                continue;
            }
            let neg = -&c;
            s.add_scaled_assign(&series[e as usize], &neg);
            for (i, a) in polys[e as usize].iter().enumerate() {
                p[i] -= &c * a;
            }
        }
        polys.push(p);
        series.push(s);
    }
    polys
}

/// Coefficients of `J_1 = j - 744` for exponents `-1 .. len-1`.
fn j1_z(trunc: i64) -> ZSeries {
    let mut j = j_z(trunc);
    if trunc > 0 {
        j.coeffs[1] -= BigInt::from(744);
    }
    j
}

/// `J_n = (j - 744) | T(n)` normalized to `q^{-n} + O(q)`, known below `q^T`.
///
/// Computed from the coefficients `c` of `j - 744` as
/// `sum_{a | (n, m)} (n/a) c(m n / a^2)`; `J_0 = 1`.
pub fn faber_j_z(n: u32, trunc: i64) -> ZSeries {
    if n == 0 {
        let len = trunc.max(1) as usize;
        let mut c = vec![BigInt::zero(); len];
        c[0] = BigInt::one();
        return ZSeries::new(0, c);
    }
    let n = n as i64;
    let j1 = j1_z((trunc - 1).max(0) * n + 1);
    let lo = -n;
    let mut coeffs = vec![BigInt::zero(); (trunc - lo).max(0) as usize];
    for m in lo..trunc {
        let g = m.gcd(&n);
        let mut acc = BigInt::zero();
        for a in 1..=g {
            if g % a != 0 {
                continue;
            }
            let idx = m * n / (a * a);
            if let Some(c) = j1.get_ref(idx) {
                acc += c * BigInt::from(n / a);
            }
        }
        coeffs[(m - lo) as usize] = acc;
    }
    ZSeries::new(lo, coeffs)
}

pub fn faber_j(n: u32, trunc: i64) -> QSeries<BigRational> {
    faber_j_z(n, trunc).to_qseries()
}

/// `theta = sum_{n in Z} q^{n^2}`, known below `q^T`.
pub fn theta_z(trunc: i64) -> ZSeries {
    let len = trunc.max(0) as usize;
    let mut c = vec![BigInt::zero(); len];
    let mut k = 0usize;
    while k * k < len {
        c[k * k] = BigInt::from(if k == 0 { 1 } else { 2 });
        k += 1;
    }
    ZSeries::new(0, c)
}

pub fn theta_kohnen(trunc: i64) -> QSeries<BigRational> {
    theta_z(trunc).to_qseries()
}

/// A product `prod_delta eta(delta tau)^{r_delta}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EtaQuotient {
    pub factors: Vec<(u32, i32)>,
}

impl EtaQuotient {
    pub fn new(factors: Vec<(u32, i32)>) -> Self {
        EtaQuotient { factors }
    }

    /// `sum delta r_delta / 24`.
    pub fn valuation(&self) -> Rational64 {
        let s: i64 = self.factors.iter().map(|&(d, r)| d as i64 * r as i64).sum();
        Rational64::new(s, 24)
    }

    /// Parses `"1^2,11^2"`; a bare `d` means exponent 1.
    pub fn parse(spec: &str) -> Result<Self> {
        let mut factors = Vec::new();
        for part in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (d, r) = match part.split_once('^') {
                Some((d, r)) => (d.trim(), r.trim()),
                None => (part, "1"),
            };
            let d: u32 = d.parse().map_err(|_| Error::Parse(format!("bad eta divisor {d:?}")))?;
            let r: i32 = r.parse().map_err(|_| Error::Parse(format!("bad eta exponent {r:?}")))?;
            if d == 0 {
                return Err(Error::Parse("eta divisor must be positive".into()));
            }
            factors.push((d, r));
        }
        if factors.is_empty() {
            return Err(Error::Parse("empty eta quotient".into()));
        }
        Ok(EtaQuotient { factors })
    }

    /// The product of the `prod (1 - q^{delta n})^{r}` parts, exponents
    /// `0..len`.
    pub fn unit_part(&self, len: usize) -> ZSeries {
        let e = euler_product(len);
        let einv = e.inverse().expect("unit");
        let mut acc = ZSeries::new(0, {
            let mut c = vec![BigInt::zero(); len.max(1)];
            c[0] = BigInt::one();
            c
        });
        for &(d, r) in &self.factors {
            if r == 0 {
                continue;
            }
            let base = if r > 0 { &e } else { &einv };
            let f = base.pow(r.unsigned_abs()).substitute_up(d).truncate(len as i64);
            acc = acc.mul(&f);
        }
        acc.truncate(len as i64)
    }
}

/// The eta quotient expanded below `q^T`; fractional valuations give a
/// series with ramification index dividing 24.
pub fn eta_quotient_series(e: &EtaQuotient, trunc: Rational64) -> QSeries<BigRational> {
    let v = e.valuation();
    let len = (trunc - v).ceil().to_integer().max(0) as usize;
    e.unit_part(len).to_qseries().shift(v).truncate(trunc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qseries::exp;

    fn z(v: i64) -> BigInt {
        BigInt::from(v)
    }

    #[test]
    fn j_leading_coefficients() {
        let j = j_z(3);
        assert_eq!(j.offset, -1);
        assert_eq!(j.coeffs, vec![z(1), z(744), z(196884), z(21493760)]);
    }

    #[test]
    fn eisenstein_first_coefficients() {
        assert_eq!(eisenstein_z(2, 3).unwrap().coeffs, vec![z(1), z(-24), z(-72)]);
        assert_eq!(eisenstein_z(4, 2).unwrap().coeffs[1], z(240));
        assert_eq!(eisenstein_z(6, 2).unwrap().coeffs[1], z(-504));
        assert!(eisenstein_z(12, 2).is_err());
    }

    #[test]
    fn delta_from_eisenstein() {
        let t = 40;
        let e4 = eisenstein_z(4, t as usize).unwrap();
        let e6 = eisenstein_z(6, t as usize).unwrap();
        let diff = e4.mul(&e4).mul(&e4).sub(&e6.mul(&e6));
        let d = delta_z(t);
        for n in 0..t {
            assert_eq!(diff.get(n), d.get(n) * z(1728));
        }
        assert_eq!(d.get(2), z(-24));
    }

    #[test]
    fn ramanujan_derivative_identity() {
        let t = 50;
        let d = delta_z(t);
        let e2 = eisenstein_z(2, t as usize).unwrap();
        assert_eq!(d.theta().truncate(t), e2.mul_to(&d, t));
    }

    #[test]
    fn faber_polynomials_small() {
        assert_eq!(faber_polynomial(0), vec![z(1)]);
        assert_eq!(faber_polynomial(1), vec![z(-744), z(1)]);
        assert_eq!(faber_polynomial(2), vec![z(159768), z(-1488), z(1)]);
    }

    #[test]
    fn faber_j_equals_faber_polynomial_of_j() {
        let polys = faber_polynomials(10);
        let j = j_z(30);
        for (n, p) in polys.iter().enumerate() {
            let mut acc = ZSeries::new(0, vec![BigInt::zero(); 40]);
            for c in p.iter().rev() {
                acc = acc.mul(&j);
                let mut cst = vec![BigInt::zero(); 40];
                cst[0] = c.clone();
                acc = acc.add(&ZSeries::new(0, cst));
            }
            let jn = faber_j_z(n as u32, 4);
            for m in -(n as i64)..4 {
                assert_eq!(acc.get(m), jn.get(m), "n={n} m={m}");
            }
        }
    }

    #[test]
    fn eta_quotient_level_11() {
        let e = EtaQuotient::parse("1^2,11^2").unwrap();
        assert_eq!(e.valuation(), Rational64::from_integer(1));
        let s = eta_quotient_series(&e, exp(6));
        let want = [1, -2, -1, 2, 1];
        for (i, w) in want.iter().enumerate() {
            assert_eq!(s.coeff_int(i as i64 + 1), BigRational::from_integer(z(*w)));
        }
        let e17 = EtaQuotient::parse("1^3,17^-3").unwrap();
        assert_eq!(e17.valuation(), Rational64::from_integer(-2));
        let eta = eta_quotient_series(&EtaQuotient::parse("1").unwrap(), exp(2));
        assert_eq!(eta.ram_index(), 24);
        assert_eq!(eta.valuation(), Some(Rational64::new(1, 24)));
    }

    #[test]
    fn theta_shape() {
        let t = theta_z(10);
        assert_eq!(t.coeffs, vec![z(1), z(2), z(0), z(0), z(2), z(0), z(0), z(0), z(0), z(2)]);
    }
}
