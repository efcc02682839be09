use frobtower::arith::{binom_int_mod_p, binom_mod_p, PExponent};
use frobtower::series::{LaurentPoly, LocalSeries, Side, SupportSet};
use num_bigint::BigInt;
use proptest::prelude::*;

fn primes() -> impl Strategy<Value = u64> {
    prop::sample::select(vec![2u64, 3, 5])
}

fn exponent(p: u64) -> impl Strategy<Value = PExponent> {
    let den = (p - 1) as i64;
    (-60 * den..=60 * den).prop_map(move |k| PExponent::ratio(k, den))
}

fn poly(p: u64, span: i64, max_terms: usize) -> impl Strategy<Value = LaurentPoly> {
    prop::collection::vec((-span..=span, 1..p as i64), 0..=max_terms)
        .prop_map(move |ts| LaurentPoly::from_terms(p, ts))
}

fn support_set() -> impl Strategy<Value = SupportSet> {
    let leaf = prop_oneof![
        (0i64..9, 1i64..9).prop_map(|(o, m)| SupportSet::residue(o, m)),
        (-12i64..12).prop_map(SupportSet::AtLeast),
        (-12i64..12).prop_map(SupportSet::AtMost),
        prop::collection::btree_set(-12i64..12, 0..6).prop_map(SupportSet::Finite),
    ];
    leaf.prop_recursive(2, 8, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 1..3).prop_map(SupportSet::Union),
            prop::collection::vec(inner.clone(), 1..3).prop_map(SupportSet::Intersection),
            inner.prop_map(SupportSet::complement),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn digits_reconstruct(p in primes(), seed in any::<i64>()) {
        let den = (p - 1) as i64;
        let a = PExponent::ratio(seed % (1000 * den), den);
        let (num, den) = (BigInt::from(a.num()), BigInt::from(a.den()));
        let mut sum = BigInt::from(0);
        let mut pow = BigInt::from(1);
        for (n, d) in a.digits(p).take(41).enumerate() {
            sum += &pow * d;
            pow *= p;
            // den·S − num ≡ 0 (mod p^{n+1}), with den a unit
            let diff: BigInt = &den * &sum - &num;
            prop_assert_eq!(diff % &pow, BigInt::from(0), "n = {}", n);
        }
    }

    #[test]
    fn binomials_at_powers_detect_zero(p in primes(), a in exponent(5)) {
        let den = (p - 1) as i64;
        let a = PExponent::ratio(a.num() % (60 * den), den);
        let mut all_zero = true;
        let powers = std::iter::successors(Some(1u64), |q| q.checked_mul(p));
        for (n, q) in powers.take(41).enumerate() {
            let b = binom_mod_p(&a, q, p);
            prop_assert_eq!(b.value(), a.digit(p, n));
            all_zero &= b.is_zero();
        }
        prop_assert_eq!(all_zero, a.is_zero());
    }

    #[test]
    fn support_restrict_splits(p in primes(), f in poly(5, 12, 8), u in support_set()) {
        let f = LaurentPoly::from_terms(p, f.terms().map(|(e, c)| (e, c as i64)));
        let inside = f.support_restrict(&u);
        let outside = f.support_restrict(&u.clone().complement());
        prop_assert_eq!(inside.add(&outside), f.clone());
        prop_assert_eq!(inside.support_restrict(&u), inside.clone());
        prop_assert!(inside.terms().all(|(e, _)| u.contains(e)));

        let side = if p % 2 == 0 { Side::AtInf } else { Side::At0 };
        let s = LocalSeries::from_poly(&f, side, 13);
        let si = s.support_restrict(&u);
        let so = s.support_restrict(&u.clone().complement());
        prop_assert!(si.add(&so).agrees_with(&s));
        prop_assert!(si.support_restrict(&u).agrees_with(&si));
    }

    #[test]
    fn unit_decompose_round_trip(p in primes(), n in 0u32..3, a in -4i64..4, c in 1i64..5, h in poly(5, 4, 3)) {
        let q = (p as i64).pow(n);
        let lam = LaurentPoly::monomial(p, c % p as i64 + (c % p as i64 == 0) as i64, a * q);
        let (e, l) = lam.unit_decompose(n).unwrap();
        prop_assert_eq!(LaurentPoly::monomial(p, l.value() as i64, e * q), lam.clone());

        for side in [Side::At0, Side::AtInf] {
            let s = side_sign(side);
            let bump = LaurentPoly::from_terms(p, h.terms().map(|(e, c)| (s * (e.abs() + 1) * q, c as i64 % p as i64)));
            let f = LocalSeries::from_poly(&lam.mul(&LaurentPoly::one(p).add(&bump)), side, 200);
            let (k, l, u) = f.unit_decompose(n).unwrap();
            prop_assert_eq!(k, a);
            let back = u.scale(l).shift(k * q);
            prop_assert!(back.agrees_with(&f));
            prop_assert_eq!(u.valuation(), 0);
        }
    }

    #[test]
    fn delta_is_leibniz(p in primes(), f in poly(5, 20, 4), g in poly(5, 20, 4), m in 0u64..30) {
        let f = LaurentPoly::from_terms(p, f.terms().map(|(e, c)| (e, c as i64)));
        let g = LaurentPoly::from_terms(p, g.terms().map(|(e, c)| (e, c as i64)));
        let lhs = f.mul(&g).delta_apply(m);
        let mut rhs = LaurentPoly::zero(p);
        for a in 0..=m {
            rhs = rhs.add(&f.delta_apply(a).mul(&g.delta_apply(m - a)));
        }
        prop_assert_eq!(lhs, rhs);
        for (e, c) in f.delta_apply(m).terms() {
            prop_assert_eq!(c, f.coeff(e).value() * binom_int_mod_p(e, m, p).value() % p);
        }
    }

    #[test]
    fn levels_closed_under_products(p in primes(), n in 0u32..3, f in poly(5, 6, 4), g in poly(5, 6, 4)) {
        let q = (p as i64).pow(n);
        let lift = |x: &LaurentPoly| LaurentPoly::from_terms(p, x.terms().map(|(e, c)| (e * q, c as i64)));
        let (f, g) = (lift(&f), lift(&g));
        prop_assert!(f.level_member(n) && g.level_member(n));
        prop_assert!(f.mul(&g).level_member(n));
        let side = if n % 2 == 0 { Side::At0 } else { Side::AtInf };
        let (fs, gs) = (LocalSeries::from_poly(&f, side, 40), LocalSeries::from_poly(&g, side, 40));
        prop_assert!(fs.mul(&gs).level_member(n));
    }
}

fn side_sign(side: Side) -> i64 {
    match side {
        Side::At0 => 1,
        Side::AtInf => -1,
    }
}
