//! Property tests for the field, series and operator layers, plus the
//! class-number conventions against brute-force counts.

use heckelift::arith::{is_fundamental_discriminant, kronecker};
use heckelift::heegner::{class_number, genus_character, QuadForm, TraceOptions};
use heckelift::hecke::{hecke_integral, hecke_integral_power, hecke_integral_power_closed};
use heckelift::zagier::is_admissible;
use heckelift::{Cyclotomic, Rational, RationalSeries};
use num_bigint::BigInt;
use num_traits::{One, Zero};
use proptest::prelude::*;

const ORDERS: [u32; 8] = [1, 3, 4, 5, 7, 8, 12, 15];

fn cyclotomic() -> impl Strategy<Value = Cyclotomic> {
    (0..ORDERS.len(), proptest::collection::vec((-9i64..=9, 1i64..=4), 8)).prop_map(|(i, raw)| {
        let order = ORDERS[i];
        let n = heckelift::arith::euler_phi(order as u64) as usize;
        let coords: Vec<Rational> = raw[..n].iter().map(|&(a, b)| Rational::new(a.into(), b.into())).collect();
        Cyclotomic::from_coords(order, &coords)
    })
}

fn series(len: std::ops::Range<usize>) -> impl Strategy<Value = RationalSeries> {
    (-2i64..=1, proptest::collection::vec(-50i64..=50, len)).prop_map(|(offset, c)| {
        RationalSeries::from_dense(offset, c.into_iter().map(|v| Rational::from_integer(v.into())).collect())
    })
}

fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn cyclotomic_ring_laws(a in cyclotomic(), b in cyclotomic(), c in cyclotomic()) {
        prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
        prop_assert_eq!(&a * &b, &b * &a);
        prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        if !a.is_zero_value() {
            let inv = a.inverse().expect("nonzero elements are invertible");
            prop_assert!((&a * &inv).is_one());
        }
    }

    #[test]
    fn galois_action_is_a_ring_map(a in cyclotomic(), b in cyclotomic(), g in 1i64..840) {
        // Every product of two sampled orders divides 840.
        let m = 840;
        prop_assume!(num_integer::Integer::gcd(&g, &m) == 1);
        prop_assert_eq!((&a * &b).galois(g), &a.galois(g) * &b.galois(g));
        prop_assert_eq!((&a + &b).galois(g), &a.galois(g) + &b.galois(g));
    }

    #[test]
    fn embedding_is_multiplicative(a in cyclotomic(), b in cyclotomic()) {
        let lhs = (&a * &b).embed_f64();
        let rhs = a.embed_f64() * b.embed_f64();
        prop_assert!((lhs - rhs).norm() <= 1e-9 * (1.0 + rhs.norm()));
    }

    #[test]
    fn series_ring_laws(a in series(4..20), b in series(4..20), c in series(4..20)) {
        prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
        prop_assert_eq!(a.mul(&b), b.mul(&a));
        prop_assert_eq!(a.mul(&b.add(&c)), a.mul(&b).add(&a.mul(&c)));
    }

    #[test]
    fn theta_is_a_derivation(a in series(4..20), b in series(4..20)) {
        prop_assert_eq!(a.mul(&b).theta(), a.theta().mul(&b).add(&a.mul(&b.theta())));
    }

    #[test]
    fn inverse_and_powers(a in series(6..20), n in 1i64..4, m in 1i64..4) {
        prop_assume!(!a.is_zero());
        let inv = a.invert().unwrap();
        let one = a.mul(&inv);
        let t = one.trunc().unwrap().to_integer();
        prop_assert!(one.agrees_with(&RationalSeries::one().truncate_int(t), None));
        prop_assert_eq!(a.pow(n).unwrap().mul(&a.pow(m).unwrap()), a.pow(n + m).unwrap());
    }

    #[test]
    fn hecke_recursion_matches_closed_sum(a in series(40..120), k in 0i32..14, pi in 0usize..3, m in 1u32..4) {
        let p = [2u32, 3, 5][pi];
        let rec = hecke_integral_power(&a, k, p, m).unwrap();
        let closed = hecke_integral_power_closed(&a, k, p, m).unwrap();
        prop_assert_eq!(rec, closed);
    }

    #[test]
    fn hecke_operators_commute(a in series(60..120), k in 0i32..14) {
        let lhs = hecke_integral(&hecke_integral(&a, k, 2).unwrap(), k, 3).unwrap();
        let rhs = hecke_integral(&hecke_integral(&a, k, 3).unwrap(), k, 2).unwrap();
        let t = lhs.trunc().unwrap().min(rhs.trunc().unwrap());
        prop_assert_eq!(lhs.truncate(t), rhs.truncate(t));
    }

    #[test]
    fn kronecker_is_multiplicative(a in -200i64..200, b in -200i64..200, n in 1i64..200) {
        prop_assert_eq!(kronecker(a * b, n), kronecker(a, n) * kronecker(b, n));
    }

    #[test]
    fn fricke_is_an_involution(a in 1i64..20, b in -30i64..30, c in 1i64..40, ni in 0usize..3) {
        let n = [11i64, 17, 19][ni];
        let q = QuadForm::new(n * a, b, c);
        prop_assume!(q.disc() < 0);
        prop_assert_eq!(q.fricke(n).fricke(n), q);
        prop_assert_eq!(q.fricke(n).disc(), q.disc());
    }

    #[test]
    fn genus_character_values(a in 1i64..15, b in -20i64..20, c in 1i64..30, di in 0usize..4) {
        let delta = [5i64, 8, 12, 13][di];
        let q = QuadForm::new(a, b, c);
        prop_assume!(q.disc() < 0 && (q.disc() % delta == 0) && is_fundamental_discriminant(delta));
        prop_assume!(((q.disc() / delta) % 4 + 4) % 4 <= 1);
        let chi = genus_character(&q, delta, 1).unwrap();
        prop_assert!(chi == 0 || chi == 1 || chi == -1);
    }
}

/// Hurwitz class number by enumerating reduced forms of discriminant `-d`,
/// primitive or not, with the usual 1/2 and 1/3 weights.
fn hurwitz_brute(d: i64) -> Rational {
    let mut h = Rational::zero();
    let mut a = 1;
    while 3 * a * a <= d {
        for b in -a + 1..=a {
            let num = b * b + d;
            if num % (4 * a) != 0 {
                continue;
            }
            let c = num / (4 * a);
            if c < a || (c == a && b < 0) {
                continue;
            }
            h += if a == b && b == c {
                Rational::new(1.into(), 3.into())
            } else if a == c && b == 0 {
                Rational::new(1.into(), 2.into())
            } else {
                Rational::one()
            };
        }
        a += 1;
    }
    h
}

#[test]
fn untwisted_class_numbers_are_hurwitz() {
    for d in (3..=400).filter(|&d| is_admissible(d)) {
        assert_eq!(class_number(1, d, 1, &TraceOptions::default()).unwrap(), hurwitz_brute(d), "d = {d}");
    }
    assert_eq!(hurwitz_brute(3), Rational::new(1.into(), 3.into()));
    assert_eq!(hurwitz_brute(4), Rational::new(1.into(), 2.into()));
    assert_eq!(hurwitz_brute(23), int(3));
}

#[test]
fn twisted_class_numbers_vanish_at_level_one() {
    for delta in [5i64, 8, 12, 13, 17, 21] {
        for d in (3..=120).filter(|&d| is_admissible(d)) {
            let h = class_number(delta, d, 1, &TraceOptions::default()).unwrap();
            assert!(h.is_zero(), "Delta = {delta}, d = {d}: {h}");
        }
    }
}
