//! Prime levels `N` in {11, 17, 19}, where `X_0(N)` has genus one and
//! `X_0^+(N)` genus zero: weight-2 forms, the Hauptmodul of `Gamma_0^+(N)`,
//! the canonical bases `f^+_{N,m}`, `f^-_{N,m}`, `F_{N,m}` (sharp basis),
//! and the trace identities built on them.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Mutex;

use num_bigint::BigInt;
use num_complex::Complex;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::json;

use crate::arith::{is_fundamental_discriminant, is_prime, is_square_mod, kronecker};
use crate::bigfloat::BigFloat;
use crate::dense::ZSeries;
use crate::error::{Error, Result};
use crate::forms::{eisenstein_z, eta_quotient_series, EtaQuotient};
use crate::hecke::hecke_integral;
use crate::heegner::{
    class_number, evaluate_at, twisted_trace, ConstantFunction, Evaluation, LevelSeries, ModularFunction,
    QuadForm, TraceOptions,
};
use crate::qseries::QSeries;
use crate::report::VerificationReport;
use crate::scalar::clog2_abs;

pub const GENUS_ONE_LEVELS: [i64; 3] = [11, 17, 19];

/// `y^2 + a1 xy + a3 y = x^3 + a2 x^2 + a4 x + a6`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Weierstrass {
    pub a1: i64,
    pub a2: i64,
    pub a3: i64,
    pub a4: i64,
    pub a6: i64,
}

impl Weierstrass {
    pub fn new(a: [i64; 5]) -> Self {
        Weierstrass { a1: a[0], a2: a[1], a3: a[2], a4: a[3], a6: a[4] }
    }

    pub fn b2(&self) -> i64 {
        self.a1 * self.a1 + 4 * self.a2
    }
    pub fn b4(&self) -> i64 {
        self.a1 * self.a3 + 2 * self.a4
    }
    pub fn b6(&self) -> i64 {
        self.a3 * self.a3 + 4 * self.a6
    }

    /// Projective points over `F_p`, singular point included.
    pub fn count_points(&self, p: u64) -> u64 {
        let p = p as i64;
        let m = |v: i64| v.rem_euclid(p);
        if p == 2 {
            let mut n = 1;
            for x in 0..2 {
                for y in 0..2 {
                    let l = y * y + self.a1 * x * y + self.a3 * y;
                    let r = x * x * x + self.a2 * x * x + self.a4 * x + self.a6;
                    if m(l - r) == 0 {
                        n += 1;
                    }
                }
            }
            return n;
        }
        let (b2, b4, b6) = (m(self.b2()), m(self.b4()), m(self.b6()));
        let mut n = 1u64;
        for x in 0..p {
            // (2y + a1 x + a3)^2 = 4x^3 + b2 x^2 + 2 b4 x + b6
            let f = m(m(m(m(4 * x) * x) * x) + m(m(b2 * x) * x) + m(2 * b4 * x) + b6);
            n += match legendre(f, p) {
                0 => 1,
                1 => 2,
                _ => 0,
            };
        }
        n
    }

    /// `a_p = p + 1 - #E(F_p)`, which is also right at multiplicative primes.
    pub fn ap(&self, p: u64) -> i64 {
        p as i64 + 1 - self.count_points(p) as i64
    }
}

impl fmt::Display for Weierstrass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{},{},{},{}]", self.a1, self.a2, self.a3, self.a4, self.a6)
    }
}

fn legendre(a: i64, p: i64) -> i64 {
    if a % p == 0 {
        return 0;
    }
    let e = BigInt::from(a).modpow(&BigInt::from((p - 1) / 2), &BigInt::from(p));
    if e.is_one() {
        1
    } else {
        -1
    }
}

/// Curve coefficients per level.  Keys in the text form are `curve.N`,
/// values five integers separated by spaces or commas; `#` starts a comment.
#[derive(Clone, Debug, PartialEq)]
pub struct Genus1Config {
    pub curves: BTreeMap<i64, Weierstrass>,
}

impl Default for Genus1Config {
    fn default() -> Self {
        let curves = [
            (11, [0, -1, 1, -10, -20]),
            (17, [1, -1, 1, -1, -14]),
            (19, [0, 1, 1, -9, -15]),
        ]
        .into_iter()
        .map(|(n, a)| (n, Weierstrass::new(a)))
        .collect();
        Genus1Config { curves }
    }
}

impl Genus1Config {
    /// Parses key-value text on top of the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |msg: &str| Error::Config(format!("line {}: {msg}", i + 1));
            let (key, value) = line.split_once('=').ok_or_else(|| bad("expected key = value"))?;
            let level: i64 = key
                .trim()
                .strip_prefix("curve.")
                .ok_or_else(|| bad("unknown key"))?
                .parse()
                .map_err(|_| bad("bad level"))?;
            if !GENUS_ONE_LEVELS.contains(&level) {
                return Err(bad("level must be 11, 17 or 19"));
            }
            let a: Vec<i64> = value
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .map(|s| s.parse().map_err(|_| bad("bad coefficient")))
                .collect::<Result<_>>()?;
            let a: [i64; 5] = a.try_into().map_err(|_| bad("need five coefficients a1 a2 a3 a4 a6"))?;
            cfg.curves.insert(level, Weierstrass::new(a));
        }
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn curve(&self, level: i64) -> Result<Weierstrass> {
        check_level(level)?;
        self.curves.get(&level).copied().ok_or_else(|| Error::Config(format!("no curve configured for N = {level}")))
    }
}

fn check_level(level: i64) -> Result<()> {
    if GENUS_ONE_LEVELS.contains(&level) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("N = {level} is not one of 11, 17, 19")))
    }
}

/// `alpha_n` for `0 <= n < len` (with `alpha_0 = 0`) from the point counts of
/// `E`, extended multiplicatively.
pub fn hecke_eigenvalues(curve: &Weierstrass, level: i64, len: usize) -> Vec<BigInt> {
    let mut spf = vec![0usize; len.max(2)];
    for i in 2..len {
        if spf[i] == 0 {
            let mut j = i;
            while j < len {
                if spf[j] == 0 {
                    spf[j] = i;
                }
                j += i;
            }
        }
    }
    let mut alpha = vec![BigInt::zero(); len.max(2)];
    alpha[1] = BigInt::one();
    for n in 2..len {
        let p = spf[n];
        let mut m = n;
        let mut e = 0;
        while m % p == 0 {
            m /= p;
            e += 1;
        }
        if m > 1 {
            alpha[n] = &alpha[m] * &alpha[n / m];
            continue;
        }
        let ap = BigInt::from(curve.ap(p as u64));
        alpha[n] = if e == 1 {
            ap
        } else if p as i64 == level {
            &ap * &alpha[n / p]
        } else {
            &ap * &alpha[n / p] - BigInt::from(p) * &alpha[n / (p * p)]
        };
    }
    alpha.truncate(len);
    alpha
}

/// `eta(tau)^2 eta(11 tau)^2`, known below `q^trunc`.
pub fn cusp_form_eta11(trunc: i64) -> Result<ZSeries> {
    let e = EtaQuotient::new(vec![(1, 2), (11, 2)]);
    ZSeries::from_qseries(&eta_quotient_series(&e, num_rational::Rational64::from_integer(trunc)))
}

/// The normalized cusp form `g_{N,-1} = sum alpha_n q^n`.
pub fn cusp_form(curve: &Weierstrass, level: i64, trunc: i64) -> Result<ZSeries> {
    check_level(level)?;
    Ok(ZSeries::new(0, hecke_eigenvalues(curve, level, trunc.max(0) as usize)))
}

/// `(1 - N) g_{N,0} = E_2(tau) - N E_2(N tau) + 24 g_{N,-1}`.
fn eisenstein_g0_scaled(g: &ZSeries, level: i64, trunc: i64) -> Result<ZSeries> {
    let len = trunc.max(1) as usize;
    let e2 = eisenstein_z(2, len)?;
    let mut out = e2.clone();
    for k in (0..len).take_while(|k| k * (level as usize) < len) {
        out.coeffs[k * level as usize] -= BigInt::from(level) * &e2.coeffs[k];
    }
    for n in 0..len.min(g.coeffs.len()) {
        out.coeffs[n] += BigInt::from(24) * &g.coeffs[n];
    }
    Ok(out)
}

/// `g_{N,0} = (E_2(tau) - N E_2(N tau))/(1 - N) + 24/(1 - N) g_{N,-1}`.
pub fn eisenstein_g0(curve: &Weierstrass, level: i64, trunc: i64) -> Result<QSeries<BigRational>> {
    let g = cusp_form(curve, level, trunc)?;
    let s = eisenstein_g0_scaled(&g, level, trunc)?;
    Ok(s.to_qseries().scale_rational(&BigRational::new(BigInt::one(), BigInt::from(1 - level))))
}

fn exact_div(s: &ZSeries, d: &BigInt, what: &str) -> Result<ZSeries> {
    let mut out = s.clone();
    for (i, c) in out.coeffs.iter_mut().enumerate() {
        let (q, r) = c.div_rem(d);
        if !r.is_zero() {
            return Err(Error::Construction(format!("{what}: non-integral coefficient at q^{}", s.offset + i as i64)));
        }
        *c = q;
    }
    Ok(out)
}

/// The constant `c`, known below `q^trunc`.
fn const_series(c: BigInt, trunc: i64) -> ZSeries {
    let mut v = vec![BigInt::zero(); trunc.max(1) as usize];
    v[0] = c;
    ZSeries::new(0, v)
}

fn constant_term(s: &ZSeries) -> BigInt {
    if s.trunc() > 0 {
        s.get(0)
    } else {
        BigInt::zero()
    }
}

/// `x = q^{-2} X` with `(Theta X - 2X)^2 = G^2 (4X^3 + b2 q^2 X^2 + 2 b4 q^4 X + b6 q^6)`,
/// where `g_{N,-1} = q G`.  This is `(Theta x)^2 = g^2 (4x^3 + b2 x^2 + 2 b4 x + b6)`.
fn weierstrass_x(curve: &Weierstrass, g: &ZSeries, len: usize) -> Result<ZSeries> {
    let gq = ZSeries::new(0, g.coeffs[1..len.min(g.coeffs.len())].to_vec());
    let g2 = gq.mul(&gq);
    let g2 = &g2.coeffs;
    let (b2, b4, b6) = (BigInt::from(curve.b2()), BigInt::from(curve.b4()), BigInt::from(curve.b6()));
    let n = len.min(g2.len());
    let mut x = vec![BigInt::zero(); n];
    let mut p = vec![BigInt::zero(); n];
    let mut u = vec![BigInt::zero(); n];
    let mut h = vec![BigInt::zero(); n];
    x[0] = BigInt::one();
    p[0] = BigInt::one();
    u[0] = BigInt::one();
    h[0] = BigInt::from(4);
    let y = |x: &[BigInt], i: usize| &x[i] * BigInt::from(i as i64 - 2);
    for k in 1..n {
        let mut pk = BigInt::zero();
        let mut uk = BigInt::zero();
        let mut lhs = BigInt::zero();
        for i in 1..k {
            pk += &x[i] * &x[k - i];
            uk += &x[i] * &p[k - i];
            lhs += y(&x, i) * y(&x, k - i);
        }
        uk += &pk;
        let mut hk = BigInt::from(4) * &uk;
        if k >= 2 {
            hk += &b2 * &p[k - 2];
        }
        if k >= 4 {
            hk += BigInt::from(2) * &b4 * &x[k - 4];
        }
        if k == 6 {
            hk += &b6;
        }
        let mut rhs = &g2[0] * &hk;
        for j in 1..=k {
            rhs += &g2[j] * &h[k - j];
        }
        let (xk, rem) = (lhs - rhs).div_rem(&BigInt::from(4 * (k as i64 + 1)));
        if !rem.is_zero() {
            return Err(Error::Construction(format!(
                "Weierstrass recursion is not integral at q^{}: check the configured curve {curve}",
                k as i64 - 2
            )));
        }
        p[k] = pk + BigInt::from(2) * &xk;
        u[k] = uk + BigInt::from(3) * &xk;
        h[k] = hk + BigInt::from(12) * &xk;
        x[k] = xk;
    }
    Ok(ZSeries::new(-2, x))
}

/// Sample points for the numerical Fricke checks: `0.1 + 0.3i` and two
/// points near the circle `|tau| = 1/sqrt(N)` fixed by `W_N`.
pub fn sample_points(level: i64) -> [(BigRational, BigRational); 3] {
    let r = |a: i64, b: i64| BigRational::new(a.into(), b.into());
    let near_circle = |x: f64| {
        let y = (1.0 / level as f64 - x * x).sqrt();
        r((y * 100.0).round() as i64, 100)
    };
    [(r(1, 10), r(3, 10)), (r(-1, 20), near_circle(-0.05)), (r(2, 25), near_circle(0.08))]
}

fn point(re: &BigRational, im: &BigRational, prec: u32) -> Complex<BigFloat> {
    Complex::new(BigFloat::from_rational(re, prec), BigFloat::from_rational(im, prec))
}

/// `W_N tau = -1/(N tau)`.
pub fn fricke_point(tau: &Complex<BigFloat>, level: i64, prec: u32) -> Complex<BigFloat> {
    let n = Complex::new(BigFloat::from_i64(level, prec), BigFloat::from_i64(0, prec));
    let one = Complex::new(BigFloat::from_i64(1, prec), BigFloat::from_i64(0, prec));
    -(one / (n * tau.clone()))
}

fn eval_z(s: &ZSeries, tau: &Complex<BigFloat>, prec: u32) -> Result<Evaluation> {
    evaluate_at(&s.to_qseries(), tau, prec)
}

/// All data of one level, known below `q^trunc`, with bases up to `mmax`.
pub struct Genus1Level {
    pub level: i64,
    pub curve: Weierstrass,
    pub trunc: i64,
    pub mmax: u32,
    pub alpha: Vec<BigInt>,
    pub cusp: ZSeries,
    /// `(1 - N) g_{N,0}`.
    g0_scaled: ZSeries,
    pub plus: Vec<ZSeries>,
    /// Index `m`; entries 0 and 1 are `1` and `0`.
    pub sharp: Vec<ZSeries>,
    /// `(a^-(m,-1), a^-(m,0))` for `m >= 2`.
    pub aminus: BTreeMap<u32, (BigInt, BigInt)>,
    pub minus: BTreeMap<u32, ZSeries>,
    /// Largest `|f^-(tau) + f^-(W tau)|` over the sample points, as `log2`.
    pub minus_residual_log2: f64,
    /// Fricke eigenvalue of `g_{N,-1}`, computed numerically.
    pub cusp_fricke_sign: i8,
    cache: Mutex<HashMap<TraceKey, BigRational>>,
    max_residual: Mutex<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Basis {
    Plus,
    Sharp,
}

type TraceKey = (Basis, u32, i64, i64, u32);

/// Numerical precision for the Fricke checks, in bits.
const CHECK_PREC: u32 = 320;

impl Genus1Level {
    /// Builds every basis element `f_m` with `m <= mmax` below `q^trunc`.
    pub fn build(config: &Genus1Config, level: i64, trunc: i64, mmax: u32) -> Result<Self> {
        let curve = config.curve(level)?;
        let mm = mmax.max(3) as i64;
        let work = trunc + 2 * mm + 8;
        let alpha = hecke_eigenvalues(&curve, level, work as usize + 2);
        let cusp = ZSeries::new(0, alpha.clone());
        if level == 11 {
            let eta = cusp_form_eta11(work)?;
            if (1..work).any(|n| eta.get(n) != cusp.get(n)) {
                return Err(Error::Construction(format!("point counts of {curve} disagree with eta(tau)^2 eta(11tau)^2")));
            }
        }
        let g0_scaled = eisenstein_g0_scaled(&cusp, level, work)?;
        if !g0_scaled.coeffs[1].is_zero() {
            return Err(Error::Construction("g_{N,0} has a nonzero q-coefficient".into()));
        }
        // t = g0/g with the constant removed.
        let ginv = cusp.truncate(work).inverse()?;
        let ratio = exact_div(&g0_scaled.mul(&ginv), &BigInt::from(1 - level), "Hauptmodul")?;
        let mut t = ratio.clone();
        t.coeffs[1] -= constant_term(&ratio);
        let x = weierstrass_x(&curve, &cusp, work as usize + 2)?;
        // 2y = Theta(x)/g - a1 x - a3, and y = -q^{-3} + ...
        let two_y = x
            .theta()
            .mul(&ginv)
            .sub(&x.scale(&BigInt::from(curve.a1)))
            .sub(&const_series(BigInt::from(curve.a3), work));
        let y = exact_div(&two_y, &BigInt::from(-2), "Weierstrass y")?;
        let plus = echelon_powers(&[t], 1, mmax, trunc);
        let sharp = echelon_powers(&[x, y], 2, mmax, trunc);
        let mut lvl = Genus1Level {
            level,
            curve,
            trunc,
            mmax,
            alpha,
            cusp,
            g0_scaled,
            plus,
            sharp,
            aminus: BTreeMap::new(),
            minus: BTreeMap::new(),
            minus_residual_log2: f64::NEG_INFINITY,
            cusp_fricke_sign: 0,
            cache: Mutex::new(HashMap::new()),
            max_residual: Mutex::new(0.0),
        };
        lvl.check_shapes()?;
        lvl.cusp_fricke_sign = lvl.fricke_sign_of_cusp_form()?;
        lvl.check_hauptmodul_fricke()?;
        for m in 2..=mmax {
            lvl.build_minus(m)?;
        }
        Ok(lvl)
    }

    fn check_shapes(&self) -> Result<()> {
        for (m, f) in self.plus.iter().enumerate() {
            let ok = (-(m as i64)..=0).all(|n| f.get(n) == if n == -(m as i64) { BigInt::one() } else { BigInt::zero() });
            if !ok {
                return Err(Error::Construction(format!("f^+_{m} does not have the shape q^-m + O(q)")));
            }
        }
        for (m, f) in self.sharp.iter().enumerate().skip(2) {
            let ok = (-(m as i64)..=0)
                .filter(|&n| n != -1)
                .all(|n| f.get(n) == if n == -(m as i64) { BigInt::one() } else { BigInt::zero() });
            if !ok {
                return Err(Error::Construction(format!("sharp basis element {m} has the wrong principal part")));
            }
        }
        Ok(())
    }

    /// `g(W tau) = eps N tau^2 g(tau)`; returns `eps`.
    fn fricke_sign_of_cusp_form(&self) -> Result<i8> {
        let prec = CHECK_PREC;
        let (re, im) = &sample_points(self.level)[0];
        let tau = point(re, im, prec);
        let w = fricke_point(&tau, self.level, prec);
        let s = self.cusp.truncate(self.trunc);
        let a = eval_z(&s, &w, prec)?.value;
        let b = eval_z(&s, &tau, prec)?.value;
        let n = Complex::new(BigFloat::from_i64(self.level, prec), BigFloat::from_i64(0, prec));
        let ratio = a / (n * tau.clone() * tau * b);
        for eps in [1i8, -1] {
            let e = Complex::new(BigFloat::from_i64(eps as i64, prec), BigFloat::from_i64(0, prec));
            if clog2_abs(&(ratio.clone() - e)) < -100.0 {
                return Ok(eps);
            }
        }
        Err(Error::Construction(format!("cusp form of level {} is not a Fricke eigenform; check the curve", self.level)))
    }

    fn check_hauptmodul_fricke(&self) -> Result<()> {
        let prec = CHECK_PREC;
        let t = self.plus[1].truncate(self.trunc);
        for (re, im) in sample_points(self.level).iter().chain(std::iter::once(&(BigRational::new(1.into(), 10.into()), BigRational::new(2.into(), 5.into())))) {
            let tau = point(re, im, prec);
            let w = fricke_point(&tau, self.level, prec);
            let d = eval_z(&t, &tau, prec)?.value - eval_z(&t, &w, prec)?.value;
            if clog2_abs(&d) > -100.0 {
                return Err(Error::Construction(format!("Hauptmodul of level {} is not Fricke invariant", self.level)));
            }
        }
        Ok(())
    }

    /// `f^-_m = 2 F_m - f^+_m - a(m,-1) f^+_1 + a^-(m,0)` with the constant fixed
    /// by `f^- | W_N = -f^-` at one sample point and rechecked at two more.
    fn build_minus(&mut self, m: u32) -> Result<()> {
        let prec = CHECK_PREC;
        let sharp = &self.sharp[m as usize];
        let a1 = sharp.get(-1);
        let h = sharp
            .scale(&BigInt::from(2))
            .sub(&self.plus[m as usize])
            .sub(&self.plus[1].scale(&a1))
            .truncate(self.trunc);
        let pts = sample_points(self.level);
        let mut residual = f64::NEG_INFINITY;
        let mut c = None;
        for (i, (re, im)) in pts.iter().enumerate() {
            let tau = point(re, im, prec);
            let w = fricke_point(&tau, self.level, prec);
            let e1 = eval_z(&h, &tau, prec)?;
            let e2 = eval_z(&h, &w, prec)?;
            let sum = e1.value + e2.value;
            if i == 0 {
                // h(tau) + h(W tau) = -2c
                let v = -(sum.re.clone()) / BigFloat::from_i64(2, prec);
                let r = v.round();
                let off = (v - BigFloat::from_bigint(&r, prec)).log2_abs();
                if off > -60.0 || sum.im.log2_abs() > -60.0 {
                    return Err(Error::RecognitionFailed { value: sum.re.to_f64(), residual: off.exp2() });
                }
                c = Some(r);
            }
            let cc = c.clone().expect("set at the first point");
            let two_c = BigFloat::from_bigint(&(&cc * 2), prec);
            let res = Complex::new(sum.re + two_c, sum.im);
            residual = residual.max(clog2_abs(&res));
        }
        let c = c.expect("three sample points");
        let minus = h.add(&const_series(c.clone(), self.trunc));
        self.minus_residual_log2 = self.minus_residual_log2.max(residual);
        self.aminus.insert(m, (a1, c));
        self.minus.insert(m, minus);
        Ok(())
    }

    pub fn g0(&self) -> QSeries<BigRational> {
        self.g0_scaled
            .truncate(self.trunc)
            .to_qseries()
            .scale_rational(&BigRational::new(BigInt::one(), BigInt::from(1 - self.level)))
    }

    pub fn hauptmodul(&self) -> &ZSeries {
        &self.plus[1]
    }

    fn check_m(&self, m: u32) -> Result<()> {
        if m > self.mmax {
            return Err(Error::InvalidArgument(format!("m = {m} exceeds the built range {}", self.mmax)));
        }
        Ok(())
    }

    pub fn plus_basis(&self, m: u32) -> Result<&ZSeries> {
        self.check_m(m)?;
        Ok(&self.plus[m as usize])
    }

    pub fn sharp_basis(&self, m: u32) -> Result<&ZSeries> {
        self.check_m(m)?;
        Ok(&self.sharp[m as usize])
    }

    pub fn minus_basis(&self, m: u32) -> Result<&ZSeries> {
        self.check_m(m)?;
        self.minus.get(&m).ok_or_else(|| Error::InvalidArgument(format!("f^-_m needs m >= 2, got {m}")))
    }

    /// `f^-_m` by a second route, with no numerical input.  `u = Theta(t) / g_{N,-1}`
    /// has no poles in H (the cusp form does not vanish there), starts at
    /// `-q^-2`, and is Fricke anti-invariant when the cusp form has sign -1.
    /// Echelonizing `u t^k` (pole order `k + 2`) down to `q^-2` leaves the
    /// `q^-1` and constant terms determined.
    pub fn minus_basis_via_derivative(&self, m: u32) -> Result<ZSeries> {
        self.check_m(m)?;
        if m < 2 {
            return Err(Error::InvalidArgument(format!("f^-_m needs m >= 2, got {m}")));
        }
        if self.cusp_fricke_sign != -1 {
            return Err(Error::Construction(format!("cusp form of level {} has Fricke sign +1", self.level)));
        }
        let t = self.plus[1].truncate(self.trunc);
        let u = t.theta().mul(&self.cusp.truncate(self.trunc).inverse()?).neg();
        let mut out: Vec<ZSeries> = Vec::new();
        let mut tk = const_series(BigInt::one(), self.trunc);
        for k in 2..=m as i64 {
            let mut s = u.mul(&tk);
            for j in (2..k).rev() {
                let c = s.get(-j);
                if !c.is_zero() {
                    s = s.sub(&out[(j - 2) as usize].scale(&c));
                }
            }
            out.push(s);
            tk = tk.mul(&t);
        }
        Ok(out.pop().expect("m >= 2"))
    }

    pub fn alpha(&self, n: u64) -> BigInt {
        self.alpha.get(n as usize).cloned().unwrap_or_default()
    }

    fn series_function(&self, s: &ZSeries, fricke: i8, name: String) -> LevelSeries {
        LevelSeries { level: self.level, series: s.truncate(self.trunc).to_qseries(), fricke: Some(fricke), name }
    }

    /// `f^+_m` as a function on the Heegner points.
    pub fn plus_function(&self, m: u32) -> Result<Box<dyn ModularFunction>> {
        self.check_m(m)?;
        Ok(match m {
            0 => Box::new(ConstantFunction { level: self.level, value: BigRational::one() }),
            _ => Box::new(self.series_function(&self.plus[m as usize], 1, format!("f+_{{{},{m}}}", self.level))),
        })
    }

    /// `f^-_m` as a function on the Heegner points, `m >= 2`.
    pub fn minus_function(&self, m: u32) -> Result<LevelSeries> {
        let f = self.minus_basis(m)?;
        Ok(self.series_function(f, -1, format!("f-_{{{},{m}}}", self.level)))
    }

    /// `F_m`, evaluated through its Fricke decomposition
    /// `(f^+_m + f^-_m + a^-(m,-1) f^+_1 - a^-(m,0)) / 2`.
    pub fn sharp_function(&self, m: u32) -> Result<Box<dyn ModularFunction>> {
        self.check_m(m)?;
        Ok(match m {
            0 => Box::new(ConstantFunction { level: self.level, value: BigRational::one() }),
            1 => Box::new(ConstantFunction { level: self.level, value: BigRational::zero() }),
            _ => {
                let (a1, a0) = self.aminus[&m].clone();
                let half = BigRational::new(BigInt::one(), BigInt::from(2));
                let n = self.level;
                Box::new(Combination {
                    level: n,
                    parts: vec![
                        (half.clone(), self.series_function(&self.plus[m as usize], 1, format!("f+_{{{n},{m}}}"))),
                        (half.clone(), self.series_function(&self.minus[&m], -1, format!("f-_{{{n},{m}}}"))),
                        (&half * BigRational::from_integer(a1), self.series_function(&self.plus[1], 1, format!("f+_{{{n},1}}"))),
                    ],
                    constant: -(&half * BigRational::from_integer(a0)),
                    name: format!("F_{{{n},{m}}}"),
                })
            }
        })
    }

    /// A function on Heegner points that evaluates `F_m` straight from its
    /// series, with no Fricke placement.  Slower; used as a cross-check.
    pub fn sharp_function_direct(&self, m: u32) -> Result<LevelSeries> {
        self.check_m(m)?;
        Ok(LevelSeries {
            level: self.level,
            series: self.sharp[m as usize].truncate(self.trunc).to_qseries(),
            fricke: None,
            name: format!("F_{{{},{m}}} (direct)", self.level),
        })
    }

    fn trace(&self, basis: Basis, m: u32, delta: i64, d: i64, prec: u32) -> Result<BigRational> {
        let key = (basis, m, delta, d, prec);
        if let Some(v) = self.cache.lock().expect("trace cache poisoned").get(&key) {
            return Ok(v.clone());
        }
        let v = if !trace_admissible(delta, d, self.level) {
            BigRational::zero()
        } else {
            let (f, opts) = match basis {
                Basis::Plus => (self.plus_function(m)?, TraceOptions::plus()),
                Basis::Sharp => (self.sharp_function(m)?, TraceOptions::default()),
            };
            let opts = TraceOptions { prec, ..opts };
            let t = twisted_trace(f.as_ref(), delta, d, self.level, &opts)?;
            let mut worst = self.max_residual.lock().expect("residual lock poisoned");
            *worst = worst.max(t.residual);
            t.value_over_sqrt_delta
        };
        self.cache.lock().expect("trace cache poisoned").insert(key, v.clone());
        Ok(v)
    }

    /// Largest integer-recognition residual over all traces computed so far.
    pub fn max_residual(&self) -> f64 {
        *self.max_residual.lock().expect("residual lock poisoned")
    }

    /// `Tr^+_{Delta,d,N}(f^+_m) / sqrt(Delta)`; zero when `d` is not admissible.
    pub fn trace_plus(&self, m: u32, delta: i64, d: i64) -> Result<BigRational> {
        self.trace(Basis::Plus, m, delta, d, 256)
    }

    /// `Tr_{Delta,d,N}(F_m) / sqrt(Delta)`.
    pub fn trace_sharp(&self, m: u32, delta: i64, d: i64) -> Result<BigRational> {
        self.trace(Basis::Sharp, m, delta, d, 256)
    }
}

/// Echelonized monomials in the generators.  With `gens = [t]` this is the
/// Faber basis `t^m + ...` for `m >= 0`; with `gens = [x, y]` (orders 2 and 3)
/// it is the sharp basis, whose element `m` keeps a `q^{-1}` term.
fn echelon_powers(gens: &[ZSeries], first: u32, mmax: u32, trunc: i64) -> Vec<ZSeries> {
    let one = const_series(BigInt::one(), trunc);
    let mut out: Vec<ZSeries> = vec![one.clone()];
    let lowest_pole = if gens.len() == 1 { 1 } else { 2 };
    for m in 1..=mmax {
        if m < first {
            out.push(const_series(BigInt::zero(), trunc));
            continue;
        }
        let mono = if gens.len() == 1 {
            gens[0].pow(m)
        } else if m % 2 == 0 {
            gens[0].pow(m / 2)
        } else {
            gens[0].pow((m - 3) / 2).mul(&gens[1])
        };
        let mut s = mono;
        let lead = s.get(-(m as i64));
        if lead.is_negative() {
            s = s.neg();
        }
        for k in (lowest_pole..m).rev() {
            let c = s.get(-(k as i64));
            if !c.is_zero() {
                s = s.sub(&out[k as usize].scale(&c));
            }
        }
        let c0 = constant_term(&s);
        s = s.sub(&one.scale(&c0));
        out.push(s.truncate(trunc));
    }
    out
}

/// `sum_i c_i f_i + c` over Fricke-placed series.
pub struct Combination {
    pub level: i64,
    pub parts: Vec<(BigRational, LevelSeries)>,
    pub constant: BigRational,
    pub name: String,
}

impl ModularFunction for Combination {
    fn level(&self) -> i64 {
        self.level
    }
    fn size_log2(&self, q: &QuadForm) -> f64 {
        self.parts
            .iter()
            .map(|(c, f)| f.size_log2(q) + crate::scalar::rational_abs_log2(c).max(0.0))
            .fold(0.0, f64::max)
            + 2.0
    }
    fn evaluate(&self, q: &QuadForm, prec: u32) -> Result<Evaluation> {
        let c = BigFloat::from_rational(&self.constant, prec);
        let mut value = Complex::new(c, BigFloat::from_i64(0, prec));
        let mut err = f64::NEG_INFINITY;
        for (k, f) in &self.parts {
            if k.is_zero() {
                continue;
            }
            let e = f.evaluate(q, prec)?;
            let kf = BigFloat::from_rational(k, prec);
            value = value + Complex::new(&e.value.re * &kf, &e.value.im * &kf);
            let term = e.err_log2 + crate::scalar::rational_abs_log2(k);
            err = if err == f64::NEG_INFINITY { term } else { err.max(term) + 1.0 };
        }
        Ok(Evaluation { value, err_log2: err })
    }
    fn describe(&self) -> String {
        self.name.clone()
    }
}

/// Whether `(Delta, d)` carries Heegner classes at level `N`.
pub fn trace_admissible(delta: i64, d: i64, level: i64) -> bool {
    d > 0 && is_square_mod(-d, 4 * level) && is_square_mod(delta, 4 * level) && (-d * delta).rem_euclid(4) <= 1
}

fn check_prime(level: i64, delta: i64, p: u32) -> Result<()> {
    if !is_prime(p as u64) || level % p as i64 == 0 || delta % p as i64 == 0 {
        return Err(Error::InvalidPrime { p: p as u64, reason: format!("need p prime with p not dividing N Delta = {}", level * delta) });
    }
    Ok(())
}

fn check_pair(level: i64, delta: i64, d: i64) -> Result<()> {
    if delta <= 1 || !is_fundamental_discriminant(delta) {
        return Err(Error::InvalidArgument(format!("Delta = {delta} must be a fundamental discriminant > 1")));
    }
    if !trace_admissible(delta, d, level) {
        return Err(Error::InvalidArgument(format!("(Delta, d) = ({delta}, {d}) is not admissible at level {level}")));
    }
    Ok(())
}

/// The `count` admissible pairs of smallest `Delta d` (then smallest `Delta`)
/// with `p` not dividing `Delta`.
pub fn admissible_pairs(level: i64, p: u32, count: usize) -> Vec<(i64, i64)> {
    let mut out = Vec::new();
    let mut disc = 1i64;
    while out.len() < count {
        for delta in 2..=disc {
            if disc % delta != 0 || delta % p as i64 == 0 || !is_fundamental_discriminant(delta) {
                continue;
            }
            let d = disc / delta;
            if trace_admissible(delta, d, level) && out.len() < count {
                out.push((delta, d));
            }
        }
        disc += 1;
    }
    out
}

fn div_p2(d: i64, p: u32) -> Option<i64> {
    let p2 = (p * p) as i64;
    (d % p2 == 0).then(|| d / p2)
}

fn r(v: impl Into<BigInt>) -> BigRational {
    BigRational::from_integer(v.into())
}

fn rec(report: &mut VerificationReport, lhs: &BigRational, rhs: &BigRational, at: serde_json::Value) {
    let ok = lhs == rhs;
    report.record(ok, if ok { serde_json::Value::Null } else { json!({"at": at, "lhs": lhs.to_string(), "rhs": rhs.to_string()}) });
}

/// `g_{N,0} | T(p) = (1+p) g_{N,0} + 24/(1-N) (alpha_p - 1 - p) g_{N,-1}` and
/// `g_{N,-1} | T(p) = alpha_p g_{N,-1}`, below `q^trunc`.
pub fn verify_hecke_on_m2(lvl: &Genus1Level, p: u32, trunc: i64) -> Result<VerificationReport> {
    check_prime(lvl.level, 1, p)?;
    let need = p as i64 * trunc + 1;
    if need > lvl.trunc {
        return Err(Error::InsufficientTruncation { needed: need });
    }
    let n = lvl.level;
    let g = lvl.cusp.truncate(need).to_qseries();
    let g0 = lvl.g0().truncate_int(need);
    let ap = r(lvl.alpha(p as u64));
    let mut report = VerificationReport::new("hecke_on_M2", json!({"N": n, "p": p, "trunc": trunc}));
    let tg = hecke_integral(&g, 2, p)?;
    let tg0 = hecke_integral(&g0, 2, p)?;
    let c = BigRational::new(24.into(), (1 - n).into()) * (&ap - r(1 + p));
    let want0 = g0.scale_rational(&r(1 + p)).add(&g.scale_rational(&c));
    let want = g.scale_rational(&ap);
    for k in 0..trunc {
        rec(&mut report, &tg0.coeff_int(k), &want0.coeff_int(k), json!({"form": "g0", "n": k}));
        rec(&mut report, &tg.coeff_int(k), &want.coeff_int(k), json!({"form": "g-1", "n": k}));
    }
    Ok(report)
}

/// `Tr^+_d(f^+_{pn}) + p Tr^+_d(f^+_{n/p}) = p Tr^+_{d/p^2}(f^+_n) + (-d/p) Tr^+_d(f^+_n) + Tr^+_{dp^2}(f^+_n)`
/// for `0 <= n <= nmax`.
pub fn verify_hep(lvl: &Genus1Level, delta: i64, d: i64, p: u32, nmax: u32) -> Result<VerificationReport> {
    check_pair(lvl.level, delta, d)?;
    check_prime(lvl.level, delta, p)?;
    let pp = p as i64;
    let eps = r(kronecker(-d, pp));
    let mut report = VerificationReport::new("hep", json!({"N": lvl.level, "delta": delta, "d": d, "p": p, "nmax": nmax}));
    for n in 0..=nmax {
        let mut lhs = lvl.trace_plus(p * n, delta, d)?;
        if n % p == 0 {
            lhs += r(pp) * lvl.trace_plus(n / p, delta, d)?;
        }
        let mut rhs = &eps * lvl.trace_plus(n, delta, d)? + lvl.trace_plus(n, delta, d * pp * pp)?;
        if let Some(d0) = div_p2(d, p) {
            rhs += r(pp) * lvl.trace_plus(n, delta, d0)?;
        }
        rec(&mut report, &lhs, &rhs, json!({"n": n}));
    }
    Ok(report)
}

/// `sum Tr(F_n) q^n - sum Tr^+(f^+_n) q^n = Tr^+(1) g_{N,0} - Tr^+(f^+_1) g_{N,-1}`
/// below `q^trunc`, all traces divided by `sqrt(Delta)`.
pub fn verify_div3(lvl: &Genus1Level, delta: i64, d: i64, trunc: i64) -> Result<VerificationReport> {
    check_pair(lvl.level, delta, d)?;
    let t0 = lvl.trace_plus(0, delta, d)?;
    let t1 = lvl.trace_plus(1, delta, d)?;
    let g0 = lvl.g0();
    let mut report = VerificationReport::new("div3", json!({"N": lvl.level, "delta": delta, "d": d, "trunc": trunc}));
    for n in 0..trunc {
        let m = n as u32;
        let lhs = lvl.trace_sharp(m, delta, d)? - lvl.trace_plus(m, delta, d)?;
        let rhs = &t0 * g0.coeff_int(n) - &t1 * r(lvl.alpha(n as u64));
        rec(&mut report, &lhs, &rhs, json!({"n": n}));
    }
    Ok(report)
}

/// Item (1): `(1+p) Tr^+_d(1) = p Tr^+_{d/p^2}(1) + (-d/p) Tr^+_d(1) + Tr^+_{dp^2}(1)`
/// on exact twisted class numbers.
pub fn verify_thm44_class_numbers(level: i64, delta: i64, d: i64, p: u32, opts: &TraceOptions) -> Result<VerificationReport> {
    check_level(level)?;
    check_pair(level, delta, d)?;
    check_prime(level, delta, p)?;
    let pp = p as i64;
    let h = |dd: i64| -> Result<BigRational> {
        if trace_admissible(delta, dd, level) {
            class_number(delta, dd, level, opts)
        } else {
            Ok(BigRational::zero())
        }
    };
    let mut rhs = r(kronecker(-d, pp)) * h(d)? + h(d * pp * pp)?;
    if let Some(d0) = div_p2(d, p) {
        rhs += r(pp) * h(d0)?;
    }
    let lhs = r(1 + pp) * h(d)?;
    let mut report = VerificationReport::new("thm44_1", json!({"N": level, "delta": delta, "d": d, "p": p}));
    rec(&mut report, &lhs, &rhs, json!({"d": d}));
    if lhs.is_zero() && rhs.is_zero() {
        report = report.with_note("all twisted class numbers involved vanish");
    }
    Ok(report)
}

/// Items (2) and (3), the latter for `2 <= n <= nmax`.
pub fn verify_thm44(lvl: &Genus1Level, delta: i64, d: i64, p: u32, nmax: u32) -> Result<VerificationReport> {
    check_pair(lvl.level, delta, d)?;
    check_prime(lvl.level, delta, p)?;
    let pp = p as i64;
    let n_ = lvl.level;
    let ap = lvl.alpha(p as u64);
    let mut report = VerificationReport::new("thm44", json!({"N": n_, "delta": delta, "d": d, "p": p, "nmax": nmax}));
    let tp = lvl.trace_sharp(p, delta, d)?;
    let c = BigRational::new(24.into(), (1 - n_).into()) * (r(ap.clone()) - r(1 + pp));
    let rhs2 = lvl.trace_plus(0, delta, d)? * c - lvl.trace_plus(1, delta, d)? * r(ap) + lvl.trace_plus(p, delta, d)?;
    rec(&mut report, &tp, &rhs2, json!({"item": 2}));
    let eps = r(kronecker(-d, pp));
    for n in 2..=nmax {
        let mut lhs = lvl.trace_sharp(p * n, delta, d)?;
        if n % p == 0 {
            lhs += r(pp) * lvl.trace_sharp(n / p, delta, d)?;
        }
        let mut rhs = &eps * lvl.trace_sharp(n, delta, d)? + lvl.trace_sharp(n, delta, d * pp * pp)? + r(lvl.alpha(n as u64)) * &tp;
        if let Some(d0) = div_p2(d, p) {
            rhs += r(pp) * lvl.trace_sharp(n, delta, d0)?;
        }
        rec(&mut report, &lhs, &rhs, json!({"item": 3, "n": n}));
    }
    Ok(report)
}

/// `x = y (mod p)` for rationals with denominators prime to `p`.
fn congruent(x: &BigRational, y: &BigRational, p: u32) -> bool {
    let diff = x - y;
    let p = BigInt::from(p);
    diff.numer().is_multiple_of(&p) && !diff.denom().is_multiple_of(&p)
}

/// For `0 <= n <= nmax`, `n != 1`:
/// `Tr(F_{pn}) = (-d/p) Tr(F_n) + Tr_{dp^2}(F_n) + alpha_n Tr(F_p) (mod p)`.
pub fn verify_cor45(lvl: &Genus1Level, delta: i64, d: i64, p: u32, nmax: u32) -> Result<VerificationReport> {
    check_pair(lvl.level, delta, d)?;
    check_prime(lvl.level, delta, p)?;
    let pp = p as i64;
    let eps = r(kronecker(-d, pp));
    let tp = lvl.trace_sharp(p, delta, d)?;
    let mut report = VerificationReport::new("cor45", json!({"N": lvl.level, "delta": delta, "d": d, "p": p, "nmax": nmax}));
    for n in (0..=nmax).filter(|&n| n != 1) {
        let lhs = lvl.trace_sharp(p * n, delta, d)?;
        let rhs = &eps * lvl.trace_sharp(n, delta, d)? + lvl.trace_sharp(n, delta, d * pp * pp)? + r(lvl.alpha(n as u64)) * &tp;
        let ok = congruent(&lhs, &rhs, p);
        report.record(ok, if ok { serde_json::Value::Null } else { json!({"n": n, "lhs": lhs.to_string(), "rhs": rhs.to_string()}) });
    }
    Ok(report)
}

/// `H_N(Delta, dp^2) = 0, H_N(Delta, d), 2 H_N(Delta, d) (mod p)` as
/// `(-d/p) = 1, 0, -1`, with `H_N` the plus class number.
pub fn verify_cor46(level: i64, delta: i64, d: i64, p: u32) -> Result<VerificationReport> {
    check_level(level)?;
    check_pair(level, delta, d)?;
    check_prime(level, delta, p)?;
    let opts = TraceOptions::plus();
    let pp = p as i64;
    let h = class_number(delta, d, level, &opts)?;
    let hp = class_number(delta, d * pp * pp, level, &opts)?;
    let eps = kronecker(-d, pp);
    let want = match eps {
        1 => BigRational::zero(),
        0 => h.clone(),
        _ => r(2) * &h,
    };
    let mut report = VerificationReport::new("cor46", json!({"N": level, "delta": delta, "d": d, "p": p, "kronecker": eps}));
    let ok = congruent(&hp, &want, p);
    report.record(ok, if ok { serde_json::Value::Null } else { json!({"H_dp2": hp.to_string(), "H_d": h.to_string()}) });
    if h.is_zero() && hp.is_zero() {
        report = report.with_note("both twisted class numbers vanish");
    }
    Ok(report)
}

/// (R2) on one basis element: `Tr(f^+_m) = 2 Tr^+(f^+_m)` and `Tr(f^-_m) = 0`.
/// `Delta = 1` is allowed here: the untwisted traces are where Fricke-fixed
/// classes carry a nonzero character.
pub fn verify_r2(lvl: &Genus1Level, m: u32, delta: i64, d: i64, opts_plus: &TraceOptions) -> Result<VerificationReport> {
    if delta != 1 {
        check_pair(lvl.level, delta, d)?;
    } else if !trace_admissible(1, d, lvl.level) {
        return Err(Error::InvalidArgument(format!("d = {d} is not admissible at level {}", lvl.level)));
    }
    let n = lvl.level;
    let mut report = VerificationReport::new(
        "r2",
        json!({"N": n, "m": m, "delta": delta, "d": d, "stabilizer": format!("{:?}", opts_plus.plus_stabilizer).to_lowercase()}),
    );
    let fp = lvl.series_function(lvl.plus_basis(m)?, 1, format!("f+_{{{n},{m}}}"));
    let full = twisted_trace(&fp, delta, d, n, &TraceOptions::default())?.value_over_sqrt_delta;
    let plus = twisted_trace(&fp, delta, d, n, opts_plus)?.value_over_sqrt_delta;
    rec(&mut report, &full, &(r(2) * plus), json!({"basis": "plus"}));
    if m >= 2 {
        let fm = lvl.series_function(lvl.minus_basis(m)?, -1, format!("f-_{{{n},{m}}}"));
        let full = twisted_trace(&fm, delta, d, n, &TraceOptions::default())?.value_over_sqrt_delta;
        rec(&mut report, &full, &BigRational::zero(), json!({"basis": "minus"}));
    }
    Ok(report)
}

/// `2 F_m = f^+_m + f^-_m + a f^+_1 - c` coefficientwise, with `f^-_m` from
/// [`Genus1Level::minus_basis_via_derivative`] and `a`, `c` its own `q^-1`
/// and constant terms.  Also compares that route with the numerical one.
pub fn verify_r1(lvl: &Genus1Level, m: u32) -> Result<VerificationReport> {
    let mut report = VerificationReport::new("r1", json!({"N": lvl.level, "m": m}));
    let fm = lvl.minus_basis_via_derivative(m)?;
    let (a, c) = (fm.get(-1), fm.get(0));
    let t = fm.trunc().min(lvl.trunc);
    let lhs = lvl.sharp_basis(m)?.scale(&BigInt::from(2)).truncate(t);
    let rhs = lvl.plus_basis(m)?.add(&fm).add(&lvl.plus_basis(1)?.scale(&a)).sub(&const_series(c, t)).truncate(t);
    for n in -(m as i64)..t {
        rec(&mut report, &BigRational::from_integer(lhs.get(n)), &BigRational::from_integer(rhs.get(n)), json!({"n": n}));
    }
    let numeric = lvl.minus_basis(m)?.truncate(t);
    for n in -(m as i64)..t {
        let (x, y) = (BigRational::from_integer(fm.get(n)), BigRational::from_integer(numeric.get(n)));
        rec(&mut report, &x, &y, json!({"n": n, "route": "fricke"}));
    }
    Ok(report)
}

/// The value of a basis coefficient as a plain integer, for display.
pub fn coefficient(s: &ZSeries, n: i64) -> Option<i64> {
    s.get_ref(n).and_then(|c| c.to_i64())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heegner::{PlusStabilizer, TraceVariant};
    use std::sync::OnceLock;

    fn level(n: i64) -> &'static Genus1Level {
        static L: OnceLock<Vec<Genus1Level>> = OnceLock::new();
        let all = L.get_or_init(|| {
            GENUS_ONE_LEVELS.iter().map(|&n| Genus1Level::build(&Genus1Config::default(), n, 700, 12).unwrap()).collect()
        });
        all.iter().find(|l| l.level == n).unwrap()
    }

    #[test]
    fn point_counts_and_eigenvalues() {
        let e = Genus1Config::default().curve(11).unwrap();
        assert_eq!(e.ap(2), -2);
        assert_eq!(e.ap(11), 1);
        let a = hecke_eigenvalues(&e, 11, 60);
        let eta = cusp_form_eta11(60).unwrap();
        assert!((1..60).all(|n| eta.get(n) == a[n as usize]));
        for n in [11i64, 17, 19] {
            let c = Genus1Config::default().curve(n).unwrap();
            let a = hecke_eigenvalues(&c, n, 2601);
            for p in (2..51u64).filter(|&p| is_prime(p) && p as i64 != n) {
                assert!(a[p as usize].abs() <= BigInt::from((2.0 * (p as f64).sqrt()) as i64));
                let p2 = (p * p) as usize;
                assert_eq!(a[p2], &a[p as usize] * &a[p as usize] - BigInt::from(p));
            }
        }
    }

    #[test]
    fn config_parsing() {
        let c = Genus1Config::parse("# curves\ncurve.17 = 1, -1, 1, -1, -14\n").unwrap();
        assert_eq!(c, Genus1Config::default());
        assert!(Genus1Config::parse("curve.23 = 0 0 0 0 1").is_err());
        assert!(Genus1Config::parse("curve.11 = 0 0 1").is_err());
        let wrong = Genus1Config::parse("curve.19 = 0 1 1 -9 -14").unwrap();
        assert!(Genus1Level::build(&wrong, 19, 120, 4).is_err());
    }

    #[test]
    fn weight_two_forms() {
        for n in GENUS_ONE_LEVELS {
            let l = level(n);
            let g0 = l.g0();
            assert_eq!(g0.coeff_int(0), BigRational::one());
            assert_eq!(g0.coeff_int(1), BigRational::zero());
            for p in [2u32, 3, 5] {
                let rep = verify_hecke_on_m2(l, p, 30).unwrap();
                assert!(rep.pass, "{}", rep.to_json());
            }
        }
        // q^2 coefficient at N = 11: (-72 + 24 alpha_2)/(1 - 11) with alpha_2 = -2.
        assert_eq!(level(11).g0().coeff_int(2), BigRational::new((-72 - 48).into(), (-10).into()));
    }

    #[test]
    fn basis_shapes() {
        for n in GENUS_ONE_LEVELS {
            let l = level(n);
            let t = l.hauptmodul();
            assert_eq!(t.valuation(), Some(-1));
            assert!(t.get(0).is_zero());
            let t2 = t.pow(2);
            let c = t2.get(0);
            assert_eq!(l.plus[2].truncate(l.trunc - 1), t2.sub(&const_series(c, t2.trunc())).truncate(l.trunc - 1));
            assert!(l.sharp[0].get(0).is_one());
            assert!(l.sharp[1].coeffs.iter().all(|c| c.is_zero()));
            for m in 2..=12u32 {
                let (a1, a0) = &l.aminus[&m];
                let f = l.minus_basis(m).unwrap();
                assert_eq!(&f.get(-1), a1);
                assert_eq!(&f.get(0), a0);
                // (R1)
                let lhs = l.sharp[m as usize].scale(&BigInt::from(2));
                let rhs = l.plus[m as usize].add(f).add(&l.plus[1].scale(a1)).sub(&const_series(a0.clone(), l.trunc));
                assert_eq!(lhs.truncate(l.trunc), rhs.truncate(l.trunc));
            }
            assert!(l.minus_residual_log2 < -100.0, "{}", l.minus_residual_log2);
        }
    }

    #[test]
    fn r1_with_the_derivative_route() {
        for n in GENUS_ONE_LEVELS {
            let l = level(n);
            assert_eq!(l.cusp_fricke_sign, -1);
            for m in [2u32, 3, 7, 12] {
                let rep = verify_r1(l, m).unwrap();
                assert!(rep.pass, "{}", rep.to_json());
            }
        }
    }

    #[test]
    fn twisted_class_numbers_vanish_and_item_one() {
        for n in GENUS_ONE_LEVELS {
            for p in [2u32, 3] {
                for (delta, d) in admissible_pairs(n, p, 3) {
                    let rep = verify_thm44_class_numbers(n, delta, d, p, &TraceOptions::plus()).unwrap();
                    assert!(rep.pass);
                    assert!(verify_cor46(n, delta, d, p).unwrap().pass);
                }
            }
        }
    }

    #[test]
    fn r2_arbitrates_the_plus_stabilizer() {
        // Untwisted, N | d: Fricke-fixed classes, where the two weightings differ.
        // With Delta > 1 those classes have chi = 0 and both weightings agree.
        let l = level(11);
        let plain = TraceOptions { plus_stabilizer: PlusStabilizer::Plain, ..TraceOptions::plus() };
        assert_eq!(TraceOptions::plus().variant, TraceVariant::Plus);
        for d in [11i64, 44, 99] {
            let ext = verify_r2(l, 1, 1, d, &TraceOptions::plus()).unwrap();
            assert!(ext.pass, "{}", ext.to_json());
            assert!(!verify_r2(l, 1, 1, d, &plain).unwrap().pass);
        }
        assert!(verify_r2(l, 2, 5, 11, &plain).unwrap().pass);
        for (delta, d) in admissible_pairs(11, 2, 3) {
            for m in [1u32, 2, 3] {
                assert!(verify_r2(l, m, delta, d, &TraceOptions::plus()).unwrap().pass);
            }
        }
    }

    #[test]
    fn sharp_traces_agree_with_direct_evaluation() {
        let l = level(11);
        let (delta, d) = admissible_pairs(11, 2, 1)[0];
        for m in [2u32, 3, 5] {
            let direct = l.sharp_function_direct(m).unwrap();
            let a = twisted_trace(&direct, delta, d, 11, &TraceOptions::default()).unwrap().value_over_sqrt_delta;
            assert_eq!(a, l.trace_sharp(m, delta, d).unwrap());
        }
    }

    #[test]
    fn trace_identities_at_level_11() {
        let l = level(11);
        for p in [2u32, 3] {
            for (delta, d) in admissible_pairs(11, p, 2) {
                let hep = verify_hep(l, delta, d, p, 3).unwrap();
                assert!(hep.pass, "{}", hep.to_json());
                let t = verify_thm44(l, delta, d, p, 3).unwrap();
                assert!(t.pass, "{}", t.to_json());
                assert!(verify_cor45(l, delta, d, p, 3).unwrap().pass);
            }
        }
        let (delta, d) = admissible_pairs(11, 2, 1)[0];
        let r = verify_div3(l, delta, d, 10).unwrap();
        assert!(r.pass, "{}", r.to_json());
    }
}
