//! Dense integer Laurent series with fast multiplication.
//!
//! Long products (thousands of terms with thousand-bit coefficients) go
//! through Kronecker substitution: both operands are packed into a single
//! big integer, multiplied once, and unpacked.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::qseries::QSeries;

/// `coeffs[i]` is the coefficient of `q^(offset + i)`; coefficients are known
/// for exponents below `offset + coeffs.len()`.
#[derive(Clone, Debug, PartialEq)]
pub struct ZSeries {
    pub offset: i64,
    pub coeffs: Vec<BigInt>,
}

const SCHOOLBOOK_LIMIT: usize = 48;

impl ZSeries {
    pub fn new(offset: i64, coeffs: Vec<BigInt>) -> Self {
        ZSeries { offset, coeffs }
    }

    pub fn from_i64(offset: i64, coeffs: &[i64]) -> Self {
        ZSeries { offset, coeffs: coeffs.iter().map(|&c| BigInt::from(c)).collect() }
    }

    /// Exponents `< trunc` are known.
    pub fn trunc(&self) -> i64 {
        self.offset + self.coeffs.len() as i64
    }

    pub fn get(&self, n: i64) -> BigInt {
        assert!(n < self.trunc(), "coefficient {n} beyond truncation {}", self.trunc());
        if n < self.offset {
            BigInt::zero()
        } else {
            self.coeffs[(n - self.offset) as usize].clone()
        }
    }

    pub fn get_ref(&self, n: i64) -> Option<&BigInt> {
        if n < self.offset || n >= self.trunc() {
            None
        } else {
            Some(&self.coeffs[(n - self.offset) as usize])
        }
    }

    /// First exponent carrying a nonzero coefficient.
    pub fn valuation(&self) -> Option<i64> {
        self.coeffs.iter().position(|c| !c.is_zero()).map(|i| self.offset + i as i64)
    }

    /// Drops leading zero coefficients.
    pub fn normalized(mut self) -> Self {
        let k = self.coeffs.iter().position(|c| !c.is_zero()).unwrap_or(self.coeffs.len());
        if k > 0 {
            self.coeffs.drain(..k);
            self.offset += k as i64;
        }
        self
    }

    pub fn truncate(&self, t: i64) -> Self {
        if t >= self.trunc() {
            return self.clone();
        }
        let keep = (t - self.offset).max(0) as usize;
        ZSeries { offset: self.offset, coeffs: self.coeffs[..keep].to_vec() }
    }

    pub fn shift(&self, k: i64) -> Self {
        ZSeries { offset: self.offset + k, coeffs: self.coeffs.clone() }
    }

    pub fn scale(&self, c: &BigInt) -> Self {
        ZSeries { offset: self.offset, coeffs: self.coeffs.iter().map(|x| x * c).collect() }
    }

    pub fn neg(&self) -> Self {
        ZSeries { offset: self.offset, coeffs: self.coeffs.iter().map(|x| -x).collect() }
    }

    fn combine(&self, other: &Self, sign: i32) -> Self {
        let t = self.trunc().min(other.trunc());
        let lo = self.offset.min(other.offset).min(t);
        let mut coeffs = vec![BigInt::zero(); (t - lo) as usize];
        for (i, c) in self.coeffs.iter().enumerate() {
            let e = self.offset + i as i64;
            if e < t {
                coeffs[(e - lo) as usize] += c;
            }
        }
        for (i, c) in other.coeffs.iter().enumerate() {
            let e = other.offset + i as i64;
            if e < t {
                if sign > 0 {
                    coeffs[(e - lo) as usize] += c;
                } else {
                    coeffs[(e - lo) as usize] -= c;
                }
            }
        }
        ZSeries { offset: lo, coeffs }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.combine(other, 1)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.combine(other, -1)
    }

    /// In-place `self += c * other` on the common known range.
    pub fn add_scaled_assign(&mut self, other: &Self, c: &BigInt) {
        let t = self.trunc().min(other.trunc());
        if other.offset < self.offset {
            let extra = (self.offset - other.offset) as usize;
            let mut v = vec![BigInt::zero(); extra];
            v.append(&mut self.coeffs);
            self.coeffs = v;
            self.offset = other.offset;
        }
        self.coeffs.truncate((t - self.offset).max(0) as usize);
        for (i, x) in other.coeffs.iter().enumerate() {
            let e = other.offset + i as i64;
            if e >= t {
                break;
            }
            if !x.is_zero() {
                self.coeffs[(e - self.offset) as usize] += x * c;
            }
        }
    }

    /// Product with truncation `min(T_a + val_b, T_b + val_a)`, using the
    /// offsets as valuation bounds.
    pub fn mul(&self, other: &Self) -> Self {
        let t = (self.trunc() + other.offset).min(other.trunc() + self.offset);
        self.mul_to(other, t)
    }

    /// Product known up to (excluding) exponent `t`, which must not exceed
    /// the guaranteed truncation.
    pub fn mul_to(&self, other: &Self, t: i64) -> Self {
        let t = t.min((self.trunc() + other.offset).min(other.trunc() + self.offset));
        let offset = self.offset + other.offset;
        let n = (t - offset).max(0) as usize;
        let coeffs = poly_mul(&self.coeffs, &other.coeffs, n);
        ZSeries { offset, coeffs }
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut result: Option<ZSeries> = None;
        let mut base = self.clone();
        let mut k = e;
        let len = self.coeffs.len() as i64;
        loop {
            if k & 1 == 1 {
                result = Some(match result {
                    None => base.clone(),
                    Some(r) => r.mul(&base),
                });
            }
            k >>= 1;
            if k == 0 {
                break;
            }
            base = base.mul(&base);
        }
        result.unwrap_or_else(|| {
            let mut c = vec![BigInt::zero(); len.max(1) as usize];
            c[0] = BigInt::one();
            ZSeries { offset: 0, coeffs: c }
        })
    }

    /// Reciprocal of a series whose leading coefficient is `+1` or `-1`.
    pub fn inverse(&self) -> Result<Self> {
        let s = self.clone().normalized();
        let lead = s.coeffs.first().ok_or(Error::ZeroSeries)?.clone();
        if !(lead.is_one() || (-&lead).is_one()) {
            return Err(Error::NotInvertible);
        }
        let n = s.coeffs.len();
        // Newton iteration g <- g (2 - u g) on u = s / q^v, doubling precision.
        // g is treated as a polynomial, so products are taken with poly_mul
        // rather than the truncation-tracking mul.
        let mut g = vec![lead.clone()];
        let mut prec = 1usize;
        while prec < n {
            prec = (2 * prec).min(n);
            let mut corr = poly_mul(&s.coeffs[..prec], &g, prec);
            for c in corr.iter_mut() {
                *c = -&*c;
            }
            corr[0] += BigInt::from(2);
            g = poly_mul(&g, &corr, prec);
        }
        let g = ZSeries { offset: 0, coeffs: g };
        Ok(ZSeries { offset: -s.offset, coeffs: g.coeffs })
    }

    /// `q -> q^c`.
    pub fn substitute_up(&self, c: u32) -> Self {
        let c = c as usize;
        if self.coeffs.is_empty() {
            return ZSeries { offset: self.offset * c as i64, coeffs: vec![] };
        }
        let mut coeffs = vec![BigInt::zero(); self.coeffs.len() * c];
        for (i, x) in self.coeffs.iter().enumerate() {
            coeffs[i * c] = x.clone();
        }
        ZSeries { offset: self.offset * c as i64, coeffs }
    }

    /// `Theta = q d/dq`.
    pub fn theta(&self) -> Self {
        ZSeries {
            offset: self.offset,
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .map(|(i, c)| c * BigInt::from(self.offset + i as i64))
                .collect(),
        }
    }

    pub fn to_qseries(&self) -> QSeries<BigRational> {
        QSeries::from_ints(self.offset, &self.coeffs)
    }

    /// Converts a series with integral exponents and integer coefficients.
    pub fn from_qseries(s: &QSeries<BigRational>) -> Result<Self> {
        let t = s
            .trunc()
            .ok_or(Error::Unbounded)?;
        if !s.has_integral_exponents() {
            return Err(Error::InvalidArgument("fractional exponents".into()));
        }
        let t = t.ceil().to_integer();
        let lo = s.valuation().map(|v| v.to_integer()).unwrap_or(t).min(t);
        let mut coeffs = vec![BigInt::zero(); (t - lo) as usize];
        for (e, c) in s.terms() {
            if !c.is_integer() {
                return Err(Error::InvalidArgument(format!("non-integral coefficient at {e}")));
            }
            coeffs[(e.to_integer() - lo) as usize] = c.to_integer();
        }
        Ok(ZSeries { offset: lo, coeffs })
    }
}

/// First `n` coefficients of the product of two dense integer polynomials.
pub fn poly_mul(a: &[BigInt], b: &[BigInt], n: usize) -> Vec<BigInt> {
    let a = &a[..a.len().min(n)];
    let b = &b[..b.len().min(n)];
    if a.is_empty() || b.is_empty() {
        return vec![BigInt::zero(); n];
    }
    if a.len().min(b.len()) <= SCHOOLBOOK_LIMIT {
        return schoolbook(a, b, n);
    }
    kronecker(a, b, n)
}

fn schoolbook(a: &[BigInt], b: &[BigInt], n: usize) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero(); n];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() || i >= n {
            continue;
        }
        for (j, y) in b.iter().enumerate().take(n - i) {
            if !y.is_zero() {
                out[i + j] += x * y;
            }
        }
    }
    out
}

fn max_bits(v: &[BigInt]) -> u64 {
    v.iter().map(|c| c.bits()).max().unwrap_or(0)
}

fn pack(v: &[BigInt], slot: u64) -> BigInt {
    if v.len() == 1 {
        return v[0].clone();
    }
    if v.is_empty() {
        return BigInt::zero();
    }
    let mid = v.len() / 2;
    let lo = pack(&v[..mid], slot);
    let hi = pack(&v[mid..], slot);
    lo + (hi << (slot * mid as u64))
}

/// Inverse of `pack` for signed slots with `|c| < 2^(slot-2)`.
fn unpack(p: BigInt, slot: u64, n: usize, out: &mut Vec<BigInt>) {
    if n == 0 {
        return;
    }
    if n == 1 {
        out.push(p);
        return;
    }
    let mid = n / 2;
    let bits = slot * mid as u64;
    let modulus = BigInt::one() << bits;
    let mask = &modulus - 1u32;
    let mut low = &p & &mask;
    if low.bit(bits - 1) {
        low -= &modulus;
    }
    let high = (p - &low) >> bits;
    unpack(low, slot, mid, out);
    unpack(high, slot, n - mid, out);
}

fn kronecker(a: &[BigInt], b: &[BigInt], n: usize) -> Vec<BigInt> {
    let guard = 64 - (a.len().min(b.len()) as u64).leading_zeros() as u64;
    let slot = max_bits(a) + max_bits(b) + guard + 3;
    let pa = pack(a, slot);
    let pb = pack(b, slot);
    let full = a.len() + b.len() - 1;
    let want = n.min(full);
    let mut prod = pa * pb;
    if want < full {
        let bits = slot * want as u64;
        let modulus = BigInt::one() << bits;
        let mut low = &prod & (&modulus - 1u32);
        if low.bit(bits - 1) {
            low -= &modulus;
        }
        prod = low;
    }
    let mut out = Vec::with_capacity(n);
    unpack(prod, slot, want, &mut out);
    out.resize(n, BigInt::zero());
    out
}

/// Euler's product `prod_{n>=1} (1 - q^n)` to `n` terms, by the pentagonal
/// number theorem.
pub fn euler_product(n: usize) -> ZSeries {
    let mut c = vec![BigInt::zero(); n];
    let mut k: i64 = 0;
    loop {
        let mut any = false;
        for kk in if k == 0 { vec![0] } else { vec![k, -k] } {
            let e = (kk * (3 * kk - 1) / 2) as usize;
            if e < n {
                any = true;
                c[e] = if kk.abs() % 2 == 0 { BigInt::one() } else { BigInt::from(-1) };
            }
        }
        if !any {
            break;
        }
        k += 1;
    }
    ZSeries { offset: 0, coeffs: c }
}

pub fn abs_max_bits(s: &ZSeries) -> u64 {
    s.coeffs.iter().map(|c| c.abs().bits()).max().unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn big_vec(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn pentagonal_expansion() {
        let e = euler_product(16);
        let expect = [1, -1, -1, 0, 0, 1, 0, 1, 0, 0, 0, 0, -1, 0, 0, -1];
        assert_eq!(e.coeffs, big_vec(&expect));
    }

    #[test]
    fn inverse_of_euler_product_is_partitions() {
        let p = euler_product(30).inverse().unwrap();
        let partitions = [1, 1, 2, 3, 5, 7, 11, 15, 22, 30, 42, 56, 77, 101, 135];
        assert_eq!(&p.coeffs[..15], big_vec(&partitions).as_slice());
    }

    #[test]
    fn kronecker_handles_signs_and_sizes() {
        let a: Vec<BigInt> = (0..200).map(|i| BigInt::from(-7i64).pow(i % 40) * (if i % 3 == 0 { -1 } else { 1 })).collect();
        let b: Vec<BigInt> = (0..150).map(|i| BigInt::from(i as i64 - 75) << (i % 90)).collect();
        assert_eq!(kronecker(&a, &b, 349), schoolbook(&a, &b, 349));
        assert_eq!(kronecker(&a, &b, 100), schoolbook(&a, &b, 100));
    }

    proptest! {
        #[test]
        fn dense_mul_matches_schoolbook(a in proptest::collection::vec(-1_000_000i64..1_000_000, 50..120),
                                         b in proptest::collection::vec(-1_000_000i64..1_000_000, 50..120)) {
            let (a, b) = (big_vec(&a), big_vec(&b));
            let n = a.len() + b.len() - 1;
            prop_assert_eq!(kronecker(&a, &b, n), schoolbook(&a, &b, n));
        }
    }
}
