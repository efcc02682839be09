//! Sparse Laurent polynomials, precision-tracked local Laurent series and
//! their support calculus.

mod laurent;
mod local;
mod support;

use std::fmt::Debug;

use serde::{Deserialize, Serialize};

pub use laurent::LaurentPoly;
pub use local::{LocalSeries, Side, EXACT};
pub use support::SupportSet;

use crate::arith::FieldScalar;
use crate::error::Result;

pub(crate) fn pow_i64(p: u64, n: u32) -> Option<i64> {
    (p as i64).checked_pow(n)
}

/// The three base rings `k[t^{±1}]`, `k((t))` and `k((t^{-1}))`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ring {
    Gm,
    Disc0,
    DiscInf,
}

impl Ring {
    pub fn side(self) -> Option<Side> {
        match self {
            Ring::Gm => None,
            Ring::Disc0 => Some(Side::At0),
            Ring::DiscInf => Some(Side::AtInf),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Ring::Gm => "k[t^±1]",
            Ring::Disc0 => "k((t))",
            Ring::DiscInf => "k((t^-1))",
        }
    }
}

/// Ring elements usable as matrix entries of a tower.
pub trait Coeff: Clone + PartialEq + Debug + Send + Sync + Serialize + FromRaw {
    fn p(&self) -> u64;
    fn ring(&self) -> Ring;
    fn zero_like(&self) -> Self;
    fn monomial_like(&self, coeff: i64, exp: i64) -> Self;
    fn one_like(&self) -> Self {
        self.monomial_like(1, 0)
    }
    fn from_laurent_like(&self, f: &LaurentPoly) -> Self;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn neg(&self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn scale(&self, c: FieldScalar) -> Self;
    fn shift(&self, k: i64) -> Self;
    fn scale_exponents(&self, q: i64) -> Result<Self>;
    fn inverse(&self) -> Result<Self>;
    fn is_zero(&self) -> bool;
    fn level_member(&self, n: u32) -> bool;
    /// Splits into the part that decides triviality over this ring (always
    /// a Laurent polynomial) and the part that is trivial for sign reasons:
    /// everything over `k[t^{±1}]`; the polar part at `0`; the part of
    /// nonnegative degree at `∞`.
    fn relevant_split(&self) -> (LaurentPoly, Self);
    /// Equality on all known coefficients.
    fn agrees(&self, other: &Self) -> bool;
    fn precision(&self) -> i64;
    /// Known terms as a Laurent polynomial.
    fn known_terms(&self) -> LaurentPoly;
    fn truncated(&self, precision: i64) -> Self;
    fn zero_in(p: u64, ring: Ring) -> Self;
    /// `self = t^{a p^n} · λ · u` for a unit of the level-`n` subring.
    fn unit_parts(&self, n: u32) -> Result<(i64, FieldScalar, Self)>;
}

impl Coeff for LaurentPoly {
    fn p(&self) -> u64 {
        LaurentPoly::p(self)
    }
    fn ring(&self) -> Ring {
        Ring::Gm
    }
    fn zero_like(&self) -> Self {
        LaurentPoly::zero(LaurentPoly::p(self))
    }
    fn monomial_like(&self, coeff: i64, exp: i64) -> Self {
        LaurentPoly::monomial(LaurentPoly::p(self), coeff, exp)
    }
    fn from_laurent_like(&self, f: &LaurentPoly) -> Self {
        f.clone()
    }
    fn add(&self, other: &Self) -> Self {
        LaurentPoly::add(self, other)
    }
    fn sub(&self, other: &Self) -> Self {
        LaurentPoly::sub(self, other)
    }
    fn neg(&self) -> Self {
        LaurentPoly::neg(self)
    }
    fn mul(&self, other: &Self) -> Self {
        LaurentPoly::mul(self, other)
    }
    fn scale(&self, c: FieldScalar) -> Self {
        LaurentPoly::scale(self, c)
    }
    fn shift(&self, k: i64) -> Self {
        LaurentPoly::shift(self, k)
    }
    fn scale_exponents(&self, q: i64) -> Result<Self> {
        LaurentPoly::scale_exponents(self, q)
    }
    fn inverse(&self) -> Result<Self> {
        LaurentPoly::inverse(self)
    }
    fn is_zero(&self) -> bool {
        LaurentPoly::is_zero(self)
    }
    fn level_member(&self, n: u32) -> bool {
        LaurentPoly::level_member(self, n)
    }
    fn relevant_split(&self) -> (LaurentPoly, Self) {
        (self.clone(), self.zero_like())
    }
    fn agrees(&self, other: &Self) -> bool {
        self == other
    }
    fn precision(&self) -> i64 {
        EXACT
    }
    fn known_terms(&self) -> LaurentPoly {
        self.clone()
    }
    fn truncated(&self, _precision: i64) -> Self {
        self.clone()
    }
    fn zero_in(p: u64, _ring: Ring) -> Self {
        LaurentPoly::zero(p)
    }
    fn unit_parts(&self, n: u32) -> Result<(i64, FieldScalar, Self)> {
        let (a, lambda) = self.unit_decompose(n)?;
        Ok((a, lambda, self.one_like()))
    }
}

impl Coeff for LocalSeries {
    fn p(&self) -> u64 {
        LocalSeries::p(self)
    }
    fn ring(&self) -> Ring {
        match self.side() {
            Side::At0 => Ring::Disc0,
            Side::AtInf => Ring::DiscInf,
        }
    }
    fn zero_like(&self) -> Self {
        LocalSeries::zero(LocalSeries::p(self), self.side(), EXACT)
    }
    fn monomial_like(&self, coeff: i64, exp: i64) -> Self {
        LocalSeries::exact_monomial(LocalSeries::p(self), self.side(), coeff, exp)
    }
    fn from_laurent_like(&self, f: &LaurentPoly) -> Self {
        LocalSeries::from_poly(f, self.side(), EXACT)
    }
    fn add(&self, other: &Self) -> Self {
        LocalSeries::add(self, other)
    }
    fn sub(&self, other: &Self) -> Self {
        LocalSeries::sub(self, other)
    }
    fn neg(&self) -> Self {
        LocalSeries::neg(self)
    }
    fn mul(&self, other: &Self) -> Self {
        LocalSeries::mul(self, other)
    }
    fn scale(&self, c: FieldScalar) -> Self {
        LocalSeries::scale(self, c)
    }
    fn shift(&self, k: i64) -> Self {
        LocalSeries::shift(self, k)
    }
    fn scale_exponents(&self, q: i64) -> Result<Self> {
        LocalSeries::scale_exponents(self, q)
    }
    fn inverse(&self) -> Result<Self> {
        LocalSeries::inverse(self)
    }
    fn is_zero(&self) -> bool {
        LocalSeries::is_zero(self)
    }
    fn level_member(&self, n: u32) -> bool {
        LocalSeries::level_member(self, n)
    }
    fn relevant_split(&self) -> (LaurentPoly, Self) {
        let (nonneg, neg) = self.split_sign();
        match self.side() {
            Side::At0 => (neg.known_part(), nonneg),
            Side::AtInf => (nonneg.known_part(), neg),
        }
    }
    fn agrees(&self, other: &Self) -> bool {
        self.agrees_with(other)
    }
    fn precision(&self) -> i64 {
        LocalSeries::precision(self)
    }
    fn known_terms(&self) -> LaurentPoly {
        self.known_part()
    }
    fn truncated(&self, precision: i64) -> Self {
        LocalSeries::truncated(self, precision)
    }
    fn zero_in(p: u64, ring: Ring) -> Self {
        LocalSeries::zero(p, ring.side().unwrap_or(Side::At0), EXACT)
    }
    fn unit_parts(&self, n: u32) -> Result<(i64, FieldScalar, Self)> {
        self.unit_decompose(n)
    }
}

impl Serialize for LaurentPoly {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let v: Vec<[i64; 2]> = self.terms().map(|(e, c)| [e, c as i64]).collect();
        v.serialize(s)
    }
}

/// Deserialization needs the characteristic, so polynomials are read as raw
/// term lists first.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RawPoly(pub Vec<[i64; 2]>);

impl RawPoly {
    pub fn into_poly(self, p: u64) -> LaurentPoly {
        LaurentPoly::from_terms(p, self.0.into_iter().map(|[e, c]| (e, c)))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawSeries {
    pub side: Side,
    /// `null` for exact series
    pub precision: Option<i64>,
    pub terms: Vec<[i64; 2]>,
}

impl RawSeries {
    pub fn from_series(f: &LocalSeries) -> Self {
        RawSeries {
            side: f.side(),
            precision: (!f.is_exact()).then(|| f.precision()),
            terms: f.terms().map(|(e, c)| [e, c as i64]).collect(),
        }
    }

    pub fn into_series(self, p: u64) -> LocalSeries {
        LocalSeries::new(
            p,
            self.side,
            self.terms.into_iter().map(|[e, c]| (e, c)),
            self.precision.unwrap_or(EXACT),
        )
    }
}

impl Serialize for LocalSeries {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RawSeries::from_series(self).serialize(s)
    }
}

/// Either a bare term list (an exact polynomial) or a series object.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RawEntry {
    Poly(RawPoly),
    Series(RawSeries),
}

/// Conversion from the raw JSON forms.
pub trait FromRaw: Sized {
    fn from_raw(raw: RawEntry, p: u64, ring: Ring) -> Result<Self>;
    fn to_raw(&self) -> RawEntry;
}

impl FromRaw for LaurentPoly {
    fn from_raw(raw: RawEntry, p: u64, _ring: Ring) -> Result<Self> {
        match raw {
            RawEntry::Poly(f) => Ok(f.into_poly(p)),
            RawEntry::Series(_) => Err(crate::error::Error::Parse(
                "series entry in a k[t^±1] tower".into(),
            )),
        }
    }
    fn to_raw(&self) -> RawEntry {
        RawEntry::Poly(RawPoly(self.terms().map(|(e, c)| [e, c as i64]).collect()))
    }
}

impl FromRaw for LocalSeries {
    fn from_raw(raw: RawEntry, p: u64, ring: Ring) -> Result<Self> {
        let side = ring
            .side()
            .ok_or_else(|| crate::error::Error::Parse("k[t^±1] is not a local ring".into()))?;
        match raw {
            RawEntry::Poly(f) => Ok(LocalSeries::from_poly(&f.into_poly(p), side, EXACT)),
            RawEntry::Series(s) if s.side == side => Ok(s.into_series(p)),
            RawEntry::Series(_) => Err(crate::error::Error::Parse(
                "series side does not match the ring".into(),
            )),
        }
    }
    fn to_raw(&self) -> RawEntry {
        RawEntry::Series(RawSeries::from_series(self))
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn poly_strategy(p: u64) -> impl Strategy<Value = LaurentPoly> {
        prop::collection::vec((-8i64..8, 0i64..p as i64), 0..5)
            .prop_map(move |t| LaurentPoly::from_terms(p, t))
    }

    proptest! {
        #[test]
        fn restrict_is_complementary(f in poly_strategy(3), off in 0i64..3) {
            let u = SupportSet::residue(off, 3);
            let a = f.support_restrict(&u);
            let b = f.support_restrict(&u.clone().complement());
            prop_assert_eq!(a.add(&b), f.clone());
            prop_assert_eq!(a.support_restrict(&u), a);
        }

        #[test]
        fn leibniz(f in poly_strategy(3), g in poly_strategy(3), m in 0u64..12) {
            let lhs = f.mul(&g).delta_apply(m);
            let mut rhs = LaurentPoly::zero(3);
            for a in 0..=m {
                rhs = rhs.add(&f.delta_apply(a).mul(&g.delta_apply(m - a)));
            }
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn level_membership_is_multiplicative(f in poly_strategy(2), g in poly_strategy(2)) {
            let f = f.scale_exponents(2).unwrap();
            let g = g.scale_exponents(4).unwrap();
            prop_assert!(f.mul(&g).level_member(1));
        }

        #[test]
        fn series_unit_round_trip(t in prop::collection::vec((0i64..6, 1i64..3), 1..4), a in -3i64..3) {
            let mut f = LocalSeries::new(3, Side::At0, t.iter().map(|(e, c)| (3 * e, *c)), 30);
            f = f.shift(3 * a);
            if let Ok((k, lambda, u)) = f.unit_decompose(1) {
                let back = u.scale(lambda).shift(3 * k);
                prop_assert!(back.agrees_with(&f));
                prop_assert!(u.level_member(1));
            }
        }
    }

    #[test]
    fn relevant_split_sides() {
        let f = LocalSeries::new(3, Side::At0, [(-2, 1), (0, 1), (5, 2)], 10);
        let (rel, rest) = f.relevant_split();
        assert_eq!(rel, LaurentPoly::monomial(3, 1, -2));
        assert_eq!(rest.terms().count(), 2);
        let g = LocalSeries::new(3, Side::AtInf, [(-2, 1), (0, 1), (5, 2)], 10);
        let (rel, _) = g.relevant_split();
        assert_eq!(rel, LaurentPoly::from_terms(3, [(0, 1), (5, 2)]));
    }
}
