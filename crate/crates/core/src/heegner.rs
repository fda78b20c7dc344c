//! Positive definite binary quadratic forms, their `Gamma_0(N)`-classes,
//! genus characters, CM points and twisted traces of singular moduli.
//!
//! Forms `[A, B, C]` at level `N` are normalized with `N | A` (the orbit of
//! `Gamma_0(N)` acting by `Q -> Q o gamma` preserves this), and the CM point
//! is `(-B + i sqrt|D|) / (2A)`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::{Mutex, OnceLock};

use num_bigint::BigInt;
use num_complex::Complex;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::arith::{divisors, gcd, is_square_mod, kronecker};
use crate::bigfloat::BigFloat;
use crate::error::{Error, Result};
use crate::forms::{faber_j_z, j_z};
use crate::qseries::QSeries;
use crate::scalar::{clog2_abs, q_of_tau, rational_abs_log2};

/// `[[p, q], [r, s]]` in SL2(Z), stored row-major.
pub type Mat = [i64; 4];

const IDENTITY: Mat = [1, 0, 0, 1];

fn mat_mul(x: &Mat, y: &Mat) -> Mat {
    [
        x[0] * y[0] + x[1] * y[2],
        x[0] * y[1] + x[1] * y[3],
        x[2] * y[0] + x[3] * y[2],
        x[2] * y[1] + x[3] * y[3],
    ]
}

fn mat_inv(x: &Mat) -> Mat {
    [x[3], -x[1], -x[2], x[0]]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct QuadForm {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

impl fmt::Display for QuadForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{},{}]", self.a, self.b, self.c)
    }
}

impl QuadForm {
    pub fn new(a: i64, b: i64, c: i64) -> Self {
        QuadForm { a, b, c }
    }

    pub fn disc(&self) -> i64 {
        self.b * self.b - 4 * self.a * self.c
    }

    pub fn is_positive_definite(&self) -> bool {
        self.a > 0 && self.disc() < 0
    }

    pub fn content(&self) -> i64 {
        gcd(gcd(self.a, self.b), self.c)
    }

    pub fn eval(&self, x: i64, y: i64) -> i64 {
        self.a * x * x + self.b * x * y + self.c * y * y
    }

    /// `(Q o g)(X, Y) = Q(pX + qY, rX + sY)`.
    pub fn act(&self, g: &Mat) -> QuadForm {
        let [p, q, r, s] = *g;
        QuadForm {
            a: self.eval(p, r),
            b: 2 * self.a * p * q + self.b * (p * s + q * r) + 2 * self.c * r * s,
            c: self.eval(q, s),
        }
    }

    /// Fricke involution `[A, B, C] -> [NC, -B, A/N]`; requires `N | A`.
    pub fn fricke(&self, n: i64) -> QuadForm {
        debug_assert_eq!(self.a % n, 0);
        QuadForm { a: n * self.c, b: -self.b, c: self.a / n }
    }

    pub fn is_reduced(&self) -> bool {
        let (a, b, c) = (self.a, self.b, self.c);
        -a < b && b <= a && a <= c && !(a == c && b < 0)
    }

    /// The reduced form `Q0 = Q o M` with `M` in SL2(Z).
    pub fn reduce(&self) -> (QuadForm, Mat) {
        let mut q = *self;
        let mut m = IDENTITY;
        loop {
            if q.b <= -q.a || q.b > q.a {
                // Translate so that -A < B <= A.
                let k = (q.a - q.b).div_euclid(2 * q.a);
                let t = [1, k, 0, 1];
                q = q.act(&t);
                m = mat_mul(&m, &t);
            }
            if q.a > q.c || (q.a == q.c && q.b < 0) {
                let s = [0, -1, 1, 0];
                q = q.act(&s);
                m = mat_mul(&m, &s);
                continue;
            }
            break;
        }
        (q, m)
    }

    pub fn cm_point(&self) -> CmPoint {
        CmPoint::of_form(self)
    }
}

/// All reduced forms of discriminant `D < 0`, primitive or not.
pub fn reduced_forms(disc: i64) -> Vec<QuadForm> {
    let mut out = Vec::new();
    let mut a = 1;
    while 3 * a * a <= -disc {
        for b in (-a + 1)..=a {
            let num = b * b - disc;
            if num % (4 * a) != 0 {
                continue;
            }
            let f = QuadForm::new(a, b, num / (4 * a));
            if f.is_reduced() {
                out.push(f);
            }
        }
        a += 1;
    }
    out
}

/// `Stab(Q0) / {+-1}` for a reduced form, by search over small matrices.
fn reduced_stabilizer(q0: &QuadForm) -> Vec<Mat> {
    let bound = 3;
    let firsts: Vec<(i64, i64)> = (-bound..=bound)
        .flat_map(|p| (-bound..=bound).map(move |r| (p, r)))
        .filter(|&(p, r)| q0.eval(p, r) == q0.a)
        .collect();
    let mut out = Vec::new();
    for &(p, r) in &firsts {
        for qq in -bound..=bound {
            for s in -bound..=bound {
                let g = [p, qq, r, s];
                if p * s - qq * r != 1 || q0.act(&g) != *q0 {
                    continue;
                }
                // Keep one of each pair +-g.
                let lead = if p != 0 { p } else { r };
                if lead > 0 {
                    out.push(g);
                }
            }
        }
    }
    out
}

/// A point of `P^1(Z/N)` in normalized form.
fn p1_normalize(x: i64, y: i64, n: i64) -> (i64, i64) {
    let (x, y) = (x.rem_euclid(n), y.rem_euclid(n));
    let mut best = (x, y);
    for u in 1..n.max(2) {
        if gcd(u, n) != 1 {
            continue;
        }
        let c = ((u * x).rem_euclid(n), (u * y).rem_euclid(n));
        if c < best {
            best = c;
        }
    }
    best
}

fn p1_points(n: i64) -> Vec<(i64, i64)> {
    let mut set = BTreeSet::new();
    for x in 0..n.max(1) {
        for y in 0..n.max(1) {
            if gcd(gcd(x, y), n) == 1 {
                set.insert(p1_normalize(x, y, n));
            }
        }
    }
    if n == 1 {
        set.insert((0, 0));
    }
    set.into_iter().collect()
}

fn act_p1(g: &Mat, x: (i64, i64), n: i64) -> (i64, i64) {
    p1_normalize(g[0] * x.0 + g[1] * x.1, g[2] * x.0 + g[3] * x.1, n)
}

/// Decomposes `Q = Q0 o gamma` with `Q0` reduced, returning `Q0` and the
/// first column of `gamma` in `P^1(Z/N)`.
fn decompose(q: &QuadForm, n: i64) -> (QuadForm, (i64, i64)) {
    let (q0, m) = q.reduce();
    let g = mat_inv(&m);
    (q0, p1_normalize(g[0], g[2], n))
}

/// A canonical label for the `Gamma_0(N)`-class of `Q` (requires `N | A`).
pub fn class_key(q: &QuadForm, n: i64) -> (QuadForm, (i64, i64)) {
    let (q0, x) = decompose(q, n);
    let orbit = reduced_stabilizer(&q0).iter().map(|s| act_p1(s, x, n)).min().unwrap_or(x);
    (q0, orbit.min(x))
}

fn stabilizer_order(q0: &QuadForm, x: (i64, i64), n: i64) -> u32 {
    reduced_stabilizer(q0).iter().filter(|s| act_p1(s, x, n) == x).count() as u32
}

/// The representative of the coset `x` with the smallest leading coefficient,
/// i.e. the CM point of largest imaginary part in the `Gamma_0(N)`-class.
fn best_lift(q0: &QuadForm, x: (i64, i64), n: i64) -> QuadForm {
    let disc = -q0.disc();
    let units: Vec<i64> = (1..=n).filter(|&u| gcd(u, n) == 1).collect();
    let mut best: Option<(i64, i64, i64)> = None;
    let mut r = 0i64;
    loop {
        // Q0(p, r) >= |D| r^2 / (4A) for every p.
        let floor = disc * r * r / (4 * q0.a);
        if let Some((v, _, _)) = best {
            if floor > v {
                break;
            }
        }
        for &sign in &[1i64, -1] {
            let r = sign * r;
            for &u in &units {
                if (u * x.1 - r).rem_euclid(n) != 0 {
                    continue;
                }
                let target = (u * x.0).rem_euclid(n);
                let centre = (-(q0.b * r) as f64 / (2 * q0.a) as f64).round() as i64;
                let base = centre - (centre - target).rem_euclid(n);
                for k in -12..=12 {
                    let p = base + k * n;
                    if gcd(p, r) != 1 {
                        continue;
                    }
                    let v = q0.eval(p, r);
                    if best.is_none_or(|(bv, _, _)| v < bv) {
                        best = Some((v, p, r));
                    }
                }
            }
        }
        r += 1;
    }
    let (_, p, r) = best.expect("every coset has a primitive lift");
    let e = p.extended_gcd(&r);
    // p s - q r = 1 with s = e.x, q = -e.y.
    let g = [p, -e.y, r, e.x];
    let mut q = q0.act(&g);
    debug_assert_eq!(q.a % n, 0);
    let k = (q.a - q.b).div_euclid(2 * q.a);
    q = q.act(&[1, k, 0, 1]);
    q
}

/// `best_lift` minimized over the stabilizer orbit of `x`.
fn best_form(q0: &QuadForm, x: (i64, i64), n: i64) -> QuadForm {
    let mut orbit: Vec<(i64, i64)> = reduced_stabilizer(q0).iter().map(|s| act_p1(s, x, n)).collect();
    orbit.push(x);
    orbit.sort();
    orbit.dedup();
    orbit.into_iter().map(|y| best_lift(q0, y, n)).min_by_key(|f| (f.a, f.b.abs(), -f.b)).expect("nonempty orbit")
}

/// The representative of the `Gamma_0(N)`-class of `Q` whose CM point has
/// the largest imaginary part.
pub fn best_representative(q: &QuadForm, n: i64) -> QuadForm {
    let (q0, x) = decompose(q, n);
    best_form(&q0, x, n)
}

/// How the full trace restricts the middle coefficient.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RConvention {
    /// Only forms with `B ≡ r (mod 2N)`.
    Restricted,
    /// All forms of the discriminant.
    Unrestricted,
}

/// Which stabilizer weights the plus trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlusStabilizer {
    /// `|Gamma_0^+(N)_Q|`.
    Extended,
    /// `|Gamma_0(N)_Q|`.
    Plain,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassRep {
    pub form: QuadForm,
    /// Order of the stabilizer in `Gamma_0(N) / {+-1}`.
    pub stabilizer: u32,
    /// Genus character value for the set's `delta`.
    pub chi: i8,
}

#[derive(Clone, Debug)]
pub struct HeegnerClassSet {
    pub level: i64,
    pub disc: i64,
    pub r: Option<i64>,
    pub delta: i64,
    pub reps: Vec<ClassRep>,
}

impl HeegnerClassSet {
    /// `sum 1 / |stab|`.
    pub fn weighted_count(&self) -> BigRational {
        self.reps.iter().map(|c| BigRational::new(BigInt::one(), BigInt::from(c.stabilizer))).sum()
    }

    /// Recomputes the genus character for another fundamental discriminant.
    pub fn with_delta(mut self, delta: i64) -> Result<Self> {
        for c in &mut self.reps {
            c.chi = genus_character(&c.form, delta, self.level)?;
        }
        self.delta = delta;
        Ok(self)
    }

    /// `sum chi(Q) / |stab|`, exactly.
    pub fn twisted_count(&self) -> BigRational {
        self.reps
            .iter()
            .map(|c| BigRational::new(BigInt::from(c.chi), BigInt::from(c.stabilizer)))
            .sum()
    }
}

/// Representatives of the `Gamma_0(N)`-classes of positive definite forms
/// `[A, B, C]` with `N | A` and discriminant `D`, optionally with
/// `B ≡ r (mod 2N)`.
pub fn enumerate_classes(disc: i64, level: i64, r: Option<i64>) -> Result<HeegnerClassSet> {
    if disc >= 0 || !matches!(disc.rem_euclid(4), 0 | 1) {
        return Err(Error::InvalidArgument(format!("{disc} is not a negative discriminant")));
    }
    if level < 1 {
        return Err(Error::InvalidArgument(format!("level {level} must be positive")));
    }
    if let Some(r) = r {
        if (r * r - disc).rem_euclid(4 * level) != 0 {
            return Err(Error::InvalidArgument(format!(
                "r = {r} does not satisfy r^2 ≡ {disc} (mod {})",
                4 * level
            )));
        }
    }
    let points = p1_points(level);
    let mut reps = Vec::new();
    for q0 in reduced_forms(disc) {
        let stab = reduced_stabilizer(&q0);
        let mut seen = BTreeSet::new();
        for &x in &points {
            if seen.contains(&x) || q0.eval(x.0, x.1).rem_euclid(level) != 0 {
                continue;
            }
            for s in &stab {
                seen.insert(act_p1(s, x, level));
            }
            seen.insert(x);
            let form = best_form(&q0, x, level);
            if let Some(r) = r {
                if (form.b - r).rem_euclid(2 * level) != 0 {
                    continue;
                }
            }
            reps.push(ClassRep { form, stabilizer: stabilizer_order(&q0, x, level), chi: 1 });
        }
    }
    reps.sort_by_key(|c| c.form);
    Ok(HeegnerClassSet { level, disc, r, delta: 1, reps })
}

/// The genus character `chi_Delta(Q)` at level `N`.
pub fn genus_character(q: &QuadForm, delta: i64, level: i64) -> Result<i8> {
    if delta == 1 {
        return Ok(1);
    }
    let disc = q.disc();
    if q.a % level != 0 || disc % delta != 0 || !is_square_mod(disc / delta, 4 * level) {
        return Ok(0);
    }
    // Without this the value depends on the splitting N = N1 N2 once N | D.
    if !is_square_mod(delta, 4 * level) {
        return Ok(0);
    }
    if gcd(gcd(q.a / level, q.b), gcd(q.c, delta)) != 1 {
        return Ok(0);
    }
    let splits = divisors(level as u64);
    let mut bound = 4i64;
    while bound <= 512 {
        for x in -bound..=bound {
            for y in -bound..=bound {
                for &n1 in &splits {
                    let n1 = n1 as i64;
                    let v = (q.a / n1) * x * x + q.b * x * y + n1 * q.c * y * y;
                    if v > 0 && gcd(v, delta) == 1 {
                        return Ok(kronecker(delta, v) as i8);
                    }
                }
            }
        }
        bound *= 2;
    }
    Err(Error::RepresentativeNotFound { form: q.to_string(), delta })
}

/// A CM point `re + i * im_coeff * sqrt(radicand)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CmPoint {
    pub re: BigRational,
    pub im_coeff: BigRational,
    pub radicand: BigInt,
}

impl CmPoint {
    pub fn of_form(q: &QuadForm) -> Self {
        let two_a = BigInt::from(2 * q.a);
        CmPoint {
            re: BigRational::new(BigInt::from(-q.b), two_a.clone()),
            im_coeff: BigRational::new(BigInt::one(), two_a),
            radicand: BigInt::from(-q.disc()),
        }
    }

    pub fn to_complex(&self, prec: u32) -> Complex<BigFloat> {
        let root = BigFloat::from_bigint(&self.radicand, prec).sqrt();
        Complex::new(
            BigFloat::from_rational(&self.re, prec),
            &BigFloat::from_rational(&self.im_coeff, prec) * &root,
        )
    }

    pub fn im_f64(&self) -> f64 {
        self.im_coeff.to_f64().unwrap_or(0.0) * self.radicand.to_f64().unwrap_or(0.0).sqrt()
    }
}

impl fmt::Display for CmPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + {}*i*sqrt({})", self.re, self.im_coeff, self.radicand)
    }
}

/// A numerical value with a bound on its absolute error.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub value: Complex<BigFloat>,
    /// `log2` of the absolute error bound.
    pub err_log2: f64,
}

fn log2_sum(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (1.0 + (lo - hi).exp2()).log2()
}

/// `e^{2 pi i k tau / r}` for the given integer `k`.
fn q_power(tau: &Complex<BigFloat>, k: i64, r: u32, prec: u32) -> Complex<BigFloat> {
    let scale = BigRational::new(BigInt::from(k), BigInt::from(r));
    let s = BigFloat::from_rational(&scale, prec);
    let t = Complex::new(&tau.re * &s, &tau.im * &s);
    q_of_tau(&t, prec)
}

/// Evaluates `sum c_k q^{k/r}` over the listed terms (sorted by `k`), with the
/// rounding error folded into the returned bound.
fn sum_terms(
    terms: &[(i64, BigRational)],
    r: u32,
    tau: &Complex<BigFloat>,
    prec: u32,
    q_log2: f64,
) -> (Complex<BigFloat>, f64) {
    let zero = Complex::new(BigFloat::from_i64(0, prec), BigFloat::from_i64(0, prec));
    let Some(&(k0, _)) = terms.first() else {
        return (zero, f64::NEG_INFINITY);
    };
    let step = q_power(tau, 1, r, prec);
    let mut power = q_power(tau, k0, r, prec);
    let mut at = k0;
    let mut acc = zero;
    let mut mag = f64::NEG_INFINITY;
    for (i, (k, c)) in terms.iter().enumerate() {
        while at < *k {
            power = &power * &step;
            at += 1;
        }
        let cf = BigFloat::from_rational(c, prec);
        acc = acc + Complex::new(&power.re * &cf, &power.im * &cf);
        let term = rational_abs_log2(c) + (*k as f64 / r as f64) * q_log2;
        mag = log2_sum(mag, term + ((i + 8) as f64).log2());
    }
    (acc, mag + 4.0 - prec as f64)
}

/// Evaluates a truncated q-series at a CM point.  Fails with
/// `InsufficientTruncation` when the tail, extrapolated geometrically from
/// the last known terms, is not below `2^{-prec/2}` relative to the value.
pub fn evaluate_at_cm(f: &QSeries<BigRational>, z: &CmPoint, prec: u32) -> Result<Evaluation> {
    evaluate_at(f, &z.to_complex(prec), prec)
}

/// [`evaluate_at_cm`] at an arbitrary point of the upper half plane.
pub fn evaluate_at(f: &QSeries<BigRational>, tau: &Complex<BigFloat>, prec: u32) -> Result<Evaluation> {
    let im = tau.im.to_f64();
    if im <= 0.0 {
        return Err(Error::InvalidArgument("point is not in the upper half plane".into()));
    }
    let r = f.ram_index();
    let terms: Vec<(i64, BigRational)> = f
        .terms()
        .map(|(e, c)| ((e * num_rational::Rational64::from_integer(r as i64)).to_integer(), c.clone()))
        .collect();
    let q_log2 = -2.0 * std::f64::consts::PI * im * std::f64::consts::LOG2_E;
    let (value, round_err) = sum_terms(&terms, r, tau, prec, q_log2);
    let Some(trunc) = f.trunc() else {
        return Ok(Evaluation { value, err_log2: round_err });
    };
    let tk = (trunc * num_rational::Rational64::from_integer(r as i64)).ceil().to_integer();
    let size = |(k, c): &(i64, BigRational)| rational_abs_log2(c) + (*k as f64 / r as f64) * q_log2;
    let tail: Vec<(i64, f64)> = terms.iter().rev().take(12).map(|t| (t.0, size(t))).collect();
    let target = clog2_abs(&value).max(0.0) - (prec / 2) as f64;
    let (tail_log2, slope) = match tail.as_slice() {
        [] => (f64::NEG_INFINITY, -1.0),
        [(k, s)] => {
            let slope = q_log2 / r as f64;
            (s + slope * (tk - k) as f64, slope)
        }
        [(k_last, s_last), .., (k_first, s_first)] => {
            let max_ratio = tail
                .windows(2)
                .map(|w| (w[0].1 - w[1].1) / (w[0].0 - w[1].0) as f64)
                .fold(f64::NEG_INFINITY, f64::max);
            let avg = (s_last - s_first) / (k_last - k_first) as f64;
            let slope = max_ratio.max(avg).min(q_log2 / (4 * r) as f64);
            (s_last + slope * (tk - k_last) as f64 - (1.0 - slope.exp2()).log2(), slope)
        }
    };
    if tail_log2 > target {
        let extra = ((tail_log2 - target) / -slope).ceil() as i64 + 1;
        return Err(Error::InsufficientTruncation { needed: Integer::div_ceil(&(tk + extra), &(r as i64)) });
    }
    Ok(Evaluation { value, err_log2: log2_sum(round_err, tail_log2) })
}

/// Coefficients of `j` from `q^{-1}` on, cached across calls.
fn j_coefficients(len: usize) -> Vec<BigInt> {
    static CACHE: OnceLock<Mutex<Vec<BigInt>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(Vec::new()));
    let mut guard = cache.lock().expect("j cache poisoned");
    if guard.len() < len {
        let t = (len.max(2 * guard.len()) as i64) - 1;
        *guard = j_z(t).coeffs;
    }
    guard[..len].to_vec()
}

/// `J_1 = j - 744` at the CM point of `Q`, reduced into the fundamental
/// domain first.  The tail uses `|c(k)| <= e^{4 pi sqrt k}`.
pub fn j1_at(q: &QuadForm, prec: u32) -> Evaluation {
    let (q0, _) = q.reduce();
    let z = q0.cm_point();
    let y = z.im_f64();
    let q_log2 = -2.0 * std::f64::consts::PI * y * std::f64::consts::LOG2_E;
    let bound = |k: f64| (4.0 * std::f64::consts::PI * k.sqrt()) * std::f64::consts::LOG2_E + k * q_log2;
    let target = -q_log2 - prec as f64;
    let mut t = 2usize;
    while bound(t as f64) > target - 4.0 || bound(t as f64 + 1.0) > bound(t as f64) {
        t += 1;
    }
    let coeffs = j_coefficients(t + 1);
    let terms: Vec<(i64, BigRational)> = coeffs
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let k = i as i64 - 1;
            let c = if k == 0 { c - BigInt::from(744) } else { c.clone() };
            (k, BigRational::from_integer(c))
        })
        .filter(|(_, c)| !c.is_zero())
        .collect();
    let tau = z.to_complex(prec);
    let (value, round_err) = sum_terms(&terms, 1, &tau, prec, q_log2);
    // Geometric tail from k = t on: ratio at most 2^{bound'(t)} < 1/2.
    let tail = bound(t as f64) + 1.0;
    Evaluation { value, err_log2: log2_sum(round_err, tail) }
}

/// The form whose CM point is `(a alpha_Q + b) / d`, made primitive.
fn coset_form(q: &QuadForm, a: i64, b: i64, d: i64) -> QuadForm {
    let f = QuadForm::new(
        q.a * d * d,
        d * (a * q.b - 2 * q.a * b),
        q.a * b * b - a * q.b * b + q.c * a * a,
    );
    let g = f.content();
    QuadForm::new(f.a / g, f.b / g, f.c / g)
}

/// `J_n(alpha_Q) = sum_{ad = n, b mod d} J_1((a alpha_Q + b) / d)`.
pub fn faber_j_at(n: u32, q: &QuadForm, prec: u32) -> Evaluation {
    let zero = Complex::new(BigFloat::from_i64(0, prec), BigFloat::from_i64(0, prec));
    if n == 0 {
        return Evaluation { value: Complex::new(BigFloat::from_i64(1, prec), BigFloat::from_i64(0, prec)), err_log2: f64::NEG_INFINITY };
    }
    let mut acc = zero;
    let mut err = f64::NEG_INFINITY;
    for d in divisors(n as u64) {
        let d = d as i64;
        let a = n as i64 / d;
        for b in 0..d {
            let e = j1_at(&coset_form(q, a, b, d), prec);
            acc = acc + e.value;
            err = log2_sum(err, e.err_log2);
        }
    }
    Evaluation { value: acc, err_log2: err + 1.0 }
}

const LOG2_E_2PI: f64 = 2.0 * std::f64::consts::PI * std::f64::consts::LOG2_E;

/// A `Gamma_0(N)`-invariant function that can be evaluated at CM points.
pub trait ModularFunction: Sync {
    fn level(&self) -> i64;
    /// `Some(+1)` or `Some(-1)` for Fricke eigenfunctions.
    fn fricke_sign(&self) -> Option<i8> {
        None
    }
    /// The value, when the function is constant.
    fn constant(&self) -> Option<BigRational> {
        None
    }
    /// Rough upper bound for `log2 |f(alpha_Q)|`, used to size precision.
    fn size_log2(&self, q: &QuadForm) -> f64;
    fn evaluate(&self, q: &QuadForm, prec: u32) -> Result<Evaluation>;
    fn describe(&self) -> String;
}

pub struct ConstantFunction {
    pub level: i64,
    pub value: BigRational,
}

impl ModularFunction for ConstantFunction {
    fn level(&self) -> i64 {
        self.level
    }
    fn fricke_sign(&self) -> Option<i8> {
        Some(1)
    }
    fn constant(&self) -> Option<BigRational> {
        Some(self.value.clone())
    }
    fn size_log2(&self, _q: &QuadForm) -> f64 {
        rational_abs_log2(&self.value).max(0.0)
    }
    fn evaluate(&self, _q: &QuadForm, prec: u32) -> Result<Evaluation> {
        let v = BigFloat::from_rational(&self.value, prec);
        Ok(Evaluation { value: Complex::new(v, BigFloat::from_i64(0, prec)), err_log2: -(prec as f64) })
    }
    fn describe(&self) -> String {
        format!("constant {}", self.value)
    }
}

/// The level-one Faber function `J_n`, evaluated through Hecke cosets.
pub struct FaberJ(pub u32);

impl ModularFunction for FaberJ {
    fn level(&self) -> i64 {
        1
    }
    fn size_log2(&self, q: &QuadForm) -> f64 {
        let y = (-q.disc() as f64).sqrt() / 2.0;
        LOG2_E_2PI * self.0 as f64 * y + 16.0
    }
    fn evaluate(&self, q: &QuadForm, prec: u32) -> Result<Evaluation> {
        Ok(faber_j_at(self.0, q, prec))
    }
    fn describe(&self) -> String {
        format!("J_{}", self.0)
    }
}

/// `J_n` evaluated from its q-expansion instead of Hecke cosets.
pub struct FaberJSeries(pub u32);

impl ModularFunction for FaberJSeries {
    fn level(&self) -> i64 {
        1
    }
    fn size_log2(&self, q: &QuadForm) -> f64 {
        FaberJ(self.0).size_log2(q)
    }
    fn evaluate(&self, q: &QuadForm, prec: u32) -> Result<Evaluation> {
        let (q0, _) = q.reduce();
        let z = q0.cm_point();
        let mut t = 16 + prec as i64 / 6;
        loop {
            let f = faber_j_z(self.0, t).to_qseries();
            match evaluate_at_cm(&f, &z, prec) {
                Err(Error::InsufficientTruncation { needed }) if needed < 1 << 14 => t = needed.max(t + 8),
                other => return other,
            }
        }
    }
    fn describe(&self) -> String {
        format!("J_{} (series)", self.0)
    }
}

/// A level-`N` function given by a truncated q-expansion.  Evaluation moves
/// the point to the representative of largest imaginary part, using the
/// Fricke involution as well when the function is an eigenfunction.
pub struct LevelSeries {
    pub level: i64,
    pub series: QSeries<BigRational>,
    pub fricke: Option<i8>,
    pub name: String,
}

impl LevelSeries {
    fn placement(&self, q: &QuadForm) -> (QuadForm, i8) {
        let here = best_representative(q, self.level);
        match self.fricke {
            Some(sign) if self.level > 1 => {
                let there = best_representative(&q.fricke(self.level), self.level);
                if there.a < here.a {
                    (there, sign)
                } else {
                    (here, 1)
                }
            }
            _ => (here, 1),
        }
    }
}

impl ModularFunction for LevelSeries {
    fn level(&self) -> i64 {
        self.level
    }
    fn fricke_sign(&self) -> Option<i8> {
        self.fricke
    }
    fn size_log2(&self, q: &QuadForm) -> f64 {
        let (p, _) = self.placement(q);
        let v = self.series.valuation().map(|v| v.to_integer()).unwrap_or(0);
        let y = p.cm_point().im_f64();
        (-(v.min(0)) as f64) * LOG2_E_2PI * y + 16.0
    }
    fn evaluate(&self, q: &QuadForm, prec: u32) -> Result<Evaluation> {
        let (p, sign) = self.placement(q);
        let mut e = evaluate_at_cm(&self.series, &p.cm_point(), prec)?;
        if sign < 0 {
            e.value = -e.value;
        }
        Ok(e)
    }
    fn describe(&self) -> String {
        self.name.clone()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TraceVariant {
    Full,
    Plus,
}

#[derive(Clone, Copy, Debug)]
pub struct TraceOptions {
    pub variant: TraceVariant,
    pub convention: RConvention,
    pub plus_stabilizer: PlusStabilizer,
    /// Working precision in bits, on top of the size of the values.
    pub prec: u32,
}

impl Default for TraceOptions {
    fn default() -> Self {
        TraceOptions {
            variant: TraceVariant::Full,
            convention: RConvention::Unrestricted,
            plus_stabilizer: PlusStabilizer::Extended,
            prec: 256,
        }
    }
}

impl TraceOptions {
    pub fn plus() -> Self {
        TraceOptions { variant: TraceVariant::Plus, ..Self::default() }
    }
}

/// One summand `weight * f(alpha_Q)` of a twisted trace.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceTerm {
    pub form: QuadForm,
    pub weight: BigRational,
}

fn check_trace_args(delta: i64, d: i64, level: i64) -> Result<i64> {
    if delta != 1 && !crate::arith::is_fundamental_discriminant(delta) || delta < 1 {
        return Err(Error::InvalidArgument(format!("delta = {delta} is not a positive fundamental discriminant")));
    }
    if d <= 0 {
        return Err(Error::InvalidArgument(format!("d = {d} must be positive")));
    }
    if level < 1 {
        return Err(Error::InvalidArgument(format!("level {level} must be positive")));
    }
    let disc = -d * delta;
    if !matches!(disc.rem_euclid(4), 0 | 1) || !is_square_mod(-d, 4 * level) {
        return Err(Error::InvalidArgument(format!("-d = {} is not a square modulo {}", -d, 4 * level)));
    }
    if !is_square_mod(delta, 4 * level) {
        return Err(Error::InvalidArgument(format!("delta = {delta} is not a square modulo {}", 4 * level)));
    }
    Ok(disc)
}

/// The smallest `r` in `[0, 2N)` with `r^2 ≡ D (mod 4N)`.
pub fn default_r(disc: i64, level: i64) -> Option<i64> {
    (0..2 * level).find(|r| (r * r - disc).rem_euclid(4 * level) == 0)
}

/// The weighted class representatives of a trace.
pub fn trace_terms(delta: i64, d: i64, level: i64, opts: &TraceOptions) -> Result<Vec<TraceTerm>> {
    let disc = check_trace_args(delta, d, level)?;
    let r = default_r(disc, level);
    let all = enumerate_classes(disc, level, None)?.with_delta(delta)?;
    let in_scope = |b: i64| match (opts.convention, opts.variant, r) {
        (RConvention::Unrestricted, _, _) | (_, _, None) => true,
        (RConvention::Restricted, TraceVariant::Full, Some(r)) => (b - r).rem_euclid(2 * level) == 0,
        (RConvention::Restricted, TraceVariant::Plus, Some(r)) => {
            (b - r).rem_euclid(2 * level) == 0 || (b + r).rem_euclid(2 * level) == 0
        }
    };
    let reps: Vec<ClassRep> = all.reps.into_iter().filter(|c| in_scope(c.form.b)).collect();
    let weight = |chi: i8, stab: u32| BigRational::new(BigInt::from(chi), BigInt::from(stab));
    if opts.variant == TraceVariant::Full {
        return Ok(reps.iter().map(|c| TraceTerm { form: c.form, weight: weight(c.chi, c.stabilizer) }).collect());
    }
    // Group the classes into Fricke orbits.
    let mut orbits: BTreeMap<_, Vec<&ClassRep>> = BTreeMap::new();
    for c in &reps {
        let k = class_key(&c.form, level);
        let kw = class_key(&c.form.fricke(level), level);
        orbits.entry(k.min(kw)).or_default().push(c);
    }
    Ok(orbits
        .values()
        .map(|members| {
            let c = members.iter().min_by_key(|c| c.form.a).expect("nonempty orbit");
            let stab = match opts.plus_stabilizer {
                PlusStabilizer::Extended => c.stabilizer * 2 / members.len() as u32,
                PlusStabilizer::Plain => c.stabilizer,
            };
            TraceTerm { form: c.form, weight: weight(c.chi, stab) }
        })
        .collect())
}

/// `H_N(Delta, d) = Tr_{Delta,d,N}(1)`, exactly.
pub fn class_number(delta: i64, d: i64, level: i64, opts: &TraceOptions) -> Result<BigRational> {
    Ok(trace_terms(delta, d, level, opts)?.into_iter().map(|t| t.weight).sum())
}

#[derive(Clone, Debug)]
pub struct TraceResult {
    /// The trace divided by `sqrt(Delta)`, recognized as a rational number.
    pub value_over_sqrt_delta: BigRational,
    /// Distance of the numerical value from the recognized one.
    pub residual: f64,
    pub classes: usize,
    pub prec: u32,
}

fn lcm_of_denominators(terms: &[TraceTerm]) -> BigInt {
    terms.iter().fold(BigInt::one(), |acc, t| acc.lcm(t.weight.denom()))
}

/// Recognition threshold on `|Tr / sqrt(Delta) - m|`.
pub const RECOGNITION_TOL: f64 = 1e-10;

/// `Tr_{Delta,d,N}(f)` (or the plus trace), computed at CM points and
/// recognized as a rational multiple of `sqrt(Delta)`.
pub fn twisted_trace(f: &dyn ModularFunction, delta: i64, d: i64, level: i64, opts: &TraceOptions) -> Result<TraceResult> {
    if f.level() != level && f.constant().is_none() {
        return Err(Error::InvalidArgument(format!("{} has level {}, not {level}", f.describe(), f.level())));
    }
    if opts.variant == TraceVariant::Plus && f.fricke_sign() != Some(1) {
        return Err(Error::InvalidArgument(format!("{} is not Fricke invariant", f.describe())));
    }
    let terms = trace_terms(delta, d, level, opts)?;
    if let Some(c) = f.constant() {
        let exact: BigRational = terms.iter().map(|t| &t.weight * &c).sum();
        if delta != 1 && !exact.is_zero() {
            return Err(Error::RecognitionFailed { value: exact.to_f64().unwrap_or(f64::NAN), residual: f64::NAN });
        }
        return Ok(TraceResult { value_over_sqrt_delta: exact, residual: 0.0, classes: terms.len(), prec: 0 });
    }
    let den = lcm_of_denominators(&terms);
    let mut prec = opts.prec;
    for attempt in 0..2 {
        let size = terms.iter().map(|t| f.size_log2(&t.form)).fold(0.0f64, f64::max);
        let work = prec + size.ceil() as u32;
        let mut acc = Complex::new(BigFloat::from_i64(0, work), BigFloat::from_i64(0, work));
        for t in &terms {
            if t.weight.is_zero() {
                continue;
            }
            let e = f.evaluate(&t.form, work)?;
            let w = BigFloat::from_rational(&t.weight, work);
            acc = acc + Complex::new(&e.value.re * &w, &e.value.im * &w);
        }
        let root = BigFloat::from_i64(delta, work).sqrt();
        let scaled_re = &(&acc.re / &root) * &BigFloat::from_bigint(&den, work);
        let m = scaled_re.round();
        let approx = BigRational::new(m.clone(), den.clone());
        let diff_re = &(&acc.re / &root) - &BigFloat::from_rational(&approx, work);
        let diff_im = &acc.im / &root;
        let residual = diff_re.to_f64().abs().max(diff_im.to_f64().abs());
        if residual < RECOGNITION_TOL {
            return Ok(TraceResult { value_over_sqrt_delta: approx, residual, classes: terms.len(), prec: work });
        }
        if attempt == 1 {
            return Err(Error::RecognitionFailed { value: (&acc.re / &root).to_f64(), residual });
        }
        prec *= 2;
    }
    unreachable!()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::sigma;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn small_class_sets() {
        let s = enumerate_classes(-3, 1, None).unwrap();
        assert_eq!(s.reps, vec![ClassRep { form: QuadForm::new(1, 1, 1), stabilizer: 3, chi: 1 }]);
        let s = enumerate_classes(-4, 1, None).unwrap();
        assert_eq!(s.reps, vec![ClassRep { form: QuadForm::new(1, 0, 1), stabilizer: 2, chi: 1 }]);
        let s = enumerate_classes(-15, 1, None).unwrap();
        let forms: Vec<_> = s.reps.iter().map(|c| (c.form, c.stabilizer)).collect();
        assert_eq!(forms, vec![(QuadForm::new(1, 1, 4), 1), (QuadForm::new(2, 1, 2), 1)]);
        assert!(enumerate_classes(-5, 1, None).is_err());
    }

    /// Kronecker-Hurwitz: sum_t H(4n - t^2) = 2 sigma(n) - sum_{d|n} min(d, n/d).
    #[test]
    fn hurwitz_class_number_relation() {
        let h = |m: i64| -> BigRational {
            if m == 0 {
                return rat(-1, 12);
            }
            enumerate_classes(-m, 1, None).unwrap().weighted_count()
        };
        for n in 1..=25i64 {
            let mut lhs = BigRational::zero();
            let bound = crate::arith::isqrt(4 * n as u64) as i64;
            for t in -bound..=bound {
                lhs += h(4 * n - t * t);
            }
            let lam: i64 = divisors(n as u64).iter().map(|&d| (d as i64).min(n / d as i64)).sum();
            let rhs = BigRational::from_integer(BigInt::from(2 * sigma(n as u64, 1) as i64 - lam));
            assert_eq!(lhs, rhs, "n = {n}");
        }
    }

    #[test]
    fn level_n_counts_match_index() {
        // Each level-1 class splits according to the solutions of Q0(x) ≡ 0 mod N
        // on P^1; the weighted totals must agree with a direct count.
        for &(disc, n) in &[(-15i64, 2i64), (-20, 3), (-7, 11), (-39, 5), (-44, 11), (-95, 19)] {
            let set = enumerate_classes(disc, n, None).unwrap();
            let mut expect = BigRational::zero();
            for q0 in reduced_forms(disc) {
                let stab = reduced_stabilizer(&q0).len() as i64;
                let roots = p1_points(n).iter().filter(|x| q0.eval(x.0, x.1).rem_euclid(n) == 0).count() as i64;
                expect += rat(roots, stab);
            }
            assert_eq!(set.weighted_count(), expect, "D = {disc}, N = {n}");
            for c in &set.reps {
                assert_eq!(c.form.a % n, 0);
                assert_eq!(c.form.disc(), disc);
            }
        }
    }

    #[test]
    fn genus_character_examples() {
        let q = QuadForm::new(1, 1, 4);
        assert_eq!(genus_character(&q, 1, 1).unwrap(), 1);
        assert_eq!(genus_character(&q, 5, 1).unwrap(), 1);
        assert_eq!(genus_character(&QuadForm::new(2, 1, 2), 5, 1).unwrap(), -1);
    }

    #[test]
    fn cm_points() {
        let z = QuadForm::new(1, 0, 1).cm_point();
        assert_eq!((z.re.clone(), z.im_coeff.clone(), z.radicand.clone()), (rat(0, 1), rat(1, 2), BigInt::from(4)));
        let z = QuadForm::new(2, 1, 2).cm_point();
        assert_eq!((z.re, z.im_coeff, z.radicand), (rat(-1, 4), rat(1, 4), BigInt::from(15)));
    }

    fn close_to(e: &Evaluation, target: f64, tol: f64) {
        let re = e.value.re.to_f64();
        let im = e.value.im.to_f64();
        assert!((re - target).abs() <= tol * target.abs().max(1.0) && im.abs() <= tol * target.abs().max(1.0), "{re} + {im}i vs {target}");
    }

    #[test]
    fn classical_singular_moduli() {
        let prec = 256;
        let j = |q: QuadForm| {
            let mut e = j1_at(&q, prec);
            e.value.re = &e.value.re + &BigFloat::from_i64(744, prec);
            e
        };
        close_to(&j(QuadForm::new(1, 0, 1)), 1728.0, 1e-25);
        let rho = j(QuadForm::new(1, 1, 1));
        assert!(rho.value.re.to_f64().abs() < 1e-25 && rho.value.im.to_f64().abs() < 1e-25);
        let e = j(QuadForm::new(1, 1, 41));
        let expect = -BigInt::from(640320).pow(3);
        let diff = &e.value.re - &BigFloat::from_bigint(&expect, prec);
        assert!(diff.to_f64().abs() < 1e-10, "{}", diff.to_f64());
        assert!(e.err_log2 < -100.0);
    }

    #[test]
    fn coset_and_series_evaluations_agree() {
        for q in [QuadForm::new(2, 1, 2), QuadForm::new(1, 1, 6), QuadForm::new(3, 2, 5)] {
            for n in [1u32, 2, 3, 4, 6] {
                let a = FaberJ(n).evaluate(&q, 200).unwrap();
                let b = FaberJSeries(n).evaluate(&q, 200).unwrap();
                let d = (&a.value.re - &b.value.re).to_f64().abs() + (&a.value.im - &b.value.im).to_f64().abs();
                let scale = a.value.re.to_f64().abs().max(1.0);
                assert!(d < 1e-40 * scale, "n = {n}, Q = {q}: {d}");
            }
        }
    }

    #[test]
    fn class_numbers() {
        let o = TraceOptions::default();
        assert_eq!(class_number(1, 4, 1, &o).unwrap(), rat(1, 2));
        assert_eq!(class_number(1, 3, 1, &o).unwrap(), rat(1, 3));
        assert_eq!(class_number(5, 3, 1, &o).unwrap(), rat(0, 1));
        for d in 1..=50 {
            for delta in [5i64, 8, 12, 13] {
                if check_trace_args(delta, d, 1).is_ok() {
                    assert!(class_number(delta, d, 1, &o).unwrap().is_zero(), "delta {delta} d {d}");
                }
            }
        }
    }

    #[test]
    fn trace_of_j1_at_delta5_d3() {
        let t = twisted_trace(&FaberJ(1), 5, 3, 1, &TraceOptions::default()).unwrap();
        assert_eq!(t.value_over_sqrt_delta, rat(-85995, 1));
        assert!(t.residual < 1e-30);
        assert_eq!(t.classes, 2);
        let one = ConstantFunction { level: 1, value: rat(1, 1) };
        assert!(twisted_trace(&one, 5, 3, 1, &TraceOptions::default()).unwrap().value_over_sqrt_delta.is_zero());
    }

    fn j_plus_minus(n: i64, sign: i64, trunc: i64) -> LevelSeries {
        let j = crate::forms::j_series(trunc);
        let jn = j.substitute_up(n as u32).truncate_int(trunc);
        let series = if sign > 0 { j.add(&jn) } else { j.sub(&jn) };
        LevelSeries { level: n, series, fricke: Some(sign as i8), name: format!("j(tau) {} j({n} tau)", if sign > 0 { '+' } else { '-' }) }
    }

    #[test]
    fn r2_selects_unrestricted_classes() {
        let plus = j_plus_minus(11, 1, 1500);
        let minus = j_plus_minus(11, -1, 1500);
        let tr = |f: &LevelSeries, delta, d, o: TraceOptions| twisted_trace(f, delta, d, 11, &o).unwrap().value_over_sqrt_delta;
        for &(delta, d) in &[(5i64, 7i64), (1, 7), (5, 8), (1, 11)] {
            let full = tr(&plus, delta, d, TraceOptions::default());
            let half = tr(&plus, delta, d, TraceOptions::plus());
            assert_eq!(full, &half * BigInt::from(2), "delta {delta} d {d}");
            assert!(tr(&minus, delta, d, TraceOptions::default()).is_zero());
            // Restricting to one r halves the full trace unless r ≡ -r (mod 2N).
            let restricted = TraceOptions { convention: RConvention::Restricted, ..TraceOptions::default() };
            let expect = if d % 11 == 0 { full } else { half };
            assert_eq!(tr(&plus, delta, d, restricted), expect);
        }
        // (11, 1, 7): one SL2 class with j = -3375 gives two Heegner classes.
        assert_eq!(tr(&plus, 1, 7, TraceOptions::plus()), rat(-6750, 1));
    }

    #[test]
    fn fricke_pairing_at_cm_points() {
        let n = 11;
        let f = LevelSeries { fricke: None, ..j_plus_minus(n, 1, 1500) };
        for c in enumerate_classes(-7 * 5, n, None).unwrap().reps {
            let a = f.evaluate(&c.form, 200).unwrap();
            let b = f.evaluate(&c.form.fricke(n), 200).unwrap();
            let d = (&a.value.re - &b.value.re).to_f64().abs() + (&a.value.im - &b.value.im).to_f64().abs();
            assert!(d < 1e-30 * a.value.re.to_f64().abs().max(1.0), "{}: {d}", c.form);
        }
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(64))]
        #[test]
        fn genus_character_is_a_class_invariant(idx in 0usize..64, x in -6i64..6, y in -6i64..6, k in -3i64..3) {
            let cases = [(-35i64, 11i64, 5i64), (-20, 1, 5), (-39, 5, 13), (-84, 1, 12), (-56, 7, 8), (-95, 19, 5)];
            let (disc, n, delta) = cases[idx % cases.len()];
            let set = enumerate_classes(disc, n, None).unwrap();
            let q = set.reps[idx % set.reps.len()].form;
            // An element of Gamma_0(N): [[a, b], [N c, d]].
            let (a, c) = (1 + n * x.abs(), y);
            let e = a.extended_gcd(&(n * c));
            proptest::prop_assume!(e.gcd == 1);
            let g = [a, -e.y + k * a, n * c, e.x + k * n * c];
            proptest::prop_assert_eq!(g[0] * g[3] - g[1] * g[2], 1);
            let moved = q.act(&g);
            proptest::prop_assert_eq!(genus_character(&moved, delta, n).unwrap(), genus_character(&q, delta, n).unwrap());
            proptest::prop_assert_eq!(class_key(&moved, n), class_key(&q, n));
        }
    }
}
