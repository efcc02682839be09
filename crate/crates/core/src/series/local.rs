use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::arith::{binom_int_mod_p, mod_inv, reduce, FieldScalar};
use crate::error::{Error, Result};

use super::{pow_i64, LaurentPoly, SupportSet};

/// Precision value standing for "known exactly".
pub const EXACT: i64 = i64::MAX / 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Side {
    At0,
    AtInf,
}

impl Side {
    /// Sign relating the actual exponent of `t` to the local uniformizer.
    fn sign(self) -> i64 {
        match self {
            Side::At0 => 1,
            Side::AtInf => -1,
        }
    }
}

/// A Laurent series at `0` (in `t`) or at `∞` (in `t^{-1}`) known up to a
/// precision.
///
/// Internally terms are keyed by the exponent of the local uniformizer
/// (`t` or `t^{-1}`), so all precision bookkeeping is side independent: a
/// series with precision `P` is known modulo `u^P`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct LocalSeries {
    p: u64,
    side: Side,
    local: BTreeMap<i64, u64>,
    precision: i64,
}

impl fmt::Debug for LocalSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .terms()
            .map(|(e, c)| if c == 1 { format!("t^{e}") } else { format!("{c}t^{e}") })
            .collect();
        let body = if parts.is_empty() { "0".to_string() } else { parts.join(" + ") };
        match (self.side, self.precision >= EXACT) {
            (_, true) => write!(f, "{body} [exact, {:?}]", self.side),
            (Side::At0, false) => write!(f, "{body} + O(t^{})", self.precision),
            (Side::AtInf, false) => write!(f, "{body} + O(t^-{})", self.precision),
        }
    }
}

impl LocalSeries {
    /// Builds a series from actual `t`-exponents; terms outside the known
    /// window are dropped.
    pub fn new<I: IntoIterator<Item = (i64, i64)>>(
        p: u64,
        side: Side,
        terms: I,
        precision: i64,
    ) -> Self {
        let mut s = LocalSeries {
            p,
            side,
            local: BTreeMap::new(),
            precision,
        };
        for (e, c) in terms {
            s.add_local(side.sign() * e, reduce(c, p));
        }
        s.truncate();
        s
    }

    pub fn from_poly(f: &LaurentPoly, side: Side, precision: i64) -> Self {
        Self::new(f.p(), side, f.terms().map(|(e, c)| (e, c as i64)), precision)
    }

    pub fn zero(p: u64, side: Side, precision: i64) -> Self {
        Self::new(p, side, [], precision)
    }

    pub fn exact_monomial(p: u64, side: Side, coeff: i64, exp: i64) -> Self {
        Self::new(p, side, [(exp, coeff)], EXACT)
    }

    fn add_local(&mut self, u: i64, c: u64) {
        let p = self.p;
        if c % p == 0 {
            return;
        }
        let entry = self.local.entry(u).or_insert(0);
        *entry = (*entry + c) % p;
        if *entry == 0 {
            self.local.remove(&u);
        }
    }

    fn truncate(&mut self) {
        let prec = self.precision;
        self.local.retain(|u, _| *u < prec);
    }

    fn with_local(&self, local: BTreeMap<i64, u64>, precision: i64) -> Self {
        let mut s = LocalSeries {
            p: self.p,
            side: self.side,
            local,
            precision: precision.min(EXACT),
        };
        s.truncate();
        s
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn precision(&self) -> i64 {
        self.precision
    }

    pub fn is_exact(&self) -> bool {
        self.precision >= EXACT
    }

    /// True when every known coefficient vanishes.
    pub fn is_zero(&self) -> bool {
        self.local.is_empty()
    }

    /// Known terms, actual `t`-exponents, in increasing local order.
    pub fn terms(&self) -> impl Iterator<Item = (i64, u64)> + '_ {
        let s = self.side.sign();
        self.local.iter().map(move |(u, c)| (s * u, *c))
    }

    pub fn coeff(&self, exp: i64) -> Result<FieldScalar> {
        let u = self.side.sign() * exp;
        if u >= self.precision {
            return Err(Error::PrecisionInsufficient(format!(
                "coefficient of t^{exp} beyond precision {}",
                self.precision
            )));
        }
        Ok(FieldScalar::new(
            self.local.get(&u).copied().unwrap_or(0) as i64,
            self.p,
        ))
    }

    /// Local valuation: first known nonzero exponent, or the precision for
    /// a series with no known nonzero term.
    pub fn valuation(&self) -> i64 {
        self.local.keys().next().copied().unwrap_or(self.precision)
    }

    fn check(&self, other: &Self) {
        assert_eq!(self.p, other.p, "characteristic mismatch");
        assert_eq!(self.side, other.side, "mixing series at 0 and at ∞");
    }

    pub fn add(&self, other: &Self) -> Self {
        self.check(other);
        let mut out = self.clone();
        out.precision = self.precision.min(other.precision);
        for (u, c) in &other.local {
            out.add_local(*u, *c);
        }
        out.truncate();
        out
    }

    pub fn neg(&self) -> Self {
        let p = self.p;
        self.with_local(
            self.local.iter().map(|(u, c)| (*u, p - c)).collect(),
            self.precision,
        )
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.check(other);
        let p = self.p;
        let prec = self
            .precision
            .saturating_add(other.valuation())
            .min(other.precision.saturating_add(self.valuation()))
            .min(EXACT);
        let mut out = LocalSeries {
            p,
            side: self.side,
            local: BTreeMap::new(),
            precision: prec,
        };
        for (u1, c1) in &self.local {
            for (u2, c2) in &other.local {
                if u1 + u2 < prec {
                    out.add_local(u1 + u2, c1 * c2 % p);
                }
            }
        }
        out
    }

    pub fn scale(&self, c: FieldScalar) -> Self {
        let p = self.p;
        let mut out = self.with_local(BTreeMap::new(), self.precision);
        for (u, v) in &self.local {
            out.add_local(*u, v * c.value() % p);
        }
        out
    }

    /// Multiplication by `t^k`.
    pub fn shift(&self, k: i64) -> Self {
        let du = self.side.sign() * k;
        self.with_local(
            self.local.iter().map(|(u, c)| (u + du, *c)).collect(),
            self.precision.saturating_add(du),
        )
    }

    /// `f(t) ↦ f(t^q)`, `q >= 1`; precision scales with `q`.
    pub fn scale_exponents(&self, q: i64) -> Result<Self> {
        assert!(q >= 1);
        let mut local = BTreeMap::new();
        for (u, c) in &self.local {
            local.insert(u.checked_mul(q).ok_or(Error::Overflow)?, *c);
        }
        Ok(self.with_local(local, self.precision.saturating_mul(q)))
    }

    /// Multiplicative inverse; needs the leading term inside the window.
    pub fn inverse(&self) -> Result<Self> {
        let (&v, &lead) = self.local.iter().next().ok_or_else(|| {
            Error::PrecisionInsufficient(format!("order of {self:?} not determinable"))
        })?;
        let p = self.p;
        if self.local.len() == 1 && self.is_exact() {
            return Ok(self.with_local([(-v, mod_inv(lead, p))].into(), EXACT));
        }
        if self.is_exact() {
            return Err(Error::PrecisionInsufficient(format!(
                "inverse of exact non-monomial {self:?} needs a working precision"
            )));
        }
        // unit part 1 + h known modulo u^{P − v}, supported on a lattice gZ
        let width = self.precision - v;
        let inv_lead = mod_inv(lead, p);
        let g = self
            .local
            .keys()
            .map(|u| u - v)
            .fold(0i64, num_integer::gcd)
            .max(1);
        let len = if width <= 0 { 0 } else { ((width + g - 1) / g) as usize };
        let h: Vec<(usize, u64)> = self
            .local
            .iter()
            .filter(|(u, _)| **u > v)
            .map(|(u, c)| (((u - v) / g) as usize, c * inv_lead % p))
            .filter(|(i, _)| *i < len)
            .collect();
        if h.is_empty() {
            return Ok(self.with_local([(-v, inv_lead)].into(), width - v));
        }
        if len > 1 << 24 {
            return Err(Error::PrecisionInsufficient(format!(
                "inverse to precision {width} needs a working precision"
            )));
        }
        let mut inv = vec![0u64; len];
        if len > 0 {
            inv[0] = 1;
        }
        for k in 1..len {
            let mut acc = 0u64;
            for &(j, c) in &h {
                if j > k {
                    break;
                }
                acc = (acc + c * inv[k - j]) % p;
            }
            inv[k] = (p - acc) % p;
        }
        let local = inv
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0)
            .map(|(i, c)| (i as i64 * g - v, c * inv_lead % p))
            .collect();
        Ok(self.with_local(local, width - v))
    }

    pub fn support_restrict(&self, set: &SupportSet) -> Self {
        let s = self.side.sign();
        self.with_local(
            self.local
                .iter()
                .filter(|(u, _)| set.contains(s * **u))
                .map(|(u, c)| (*u, *c))
                .collect(),
            self.precision,
        )
    }

    /// Restriction that must be exact: fails when `set` meets the unknown
    /// part of the series.
    pub fn support_restrict_exact(&self, set: &SupportSet) -> Result<LaurentPoly> {
        if !self.is_exact() {
            let hits = match self.side {
                Side::At0 => set.meets_at_or_above(self.precision),
                Side::AtInf => set.meets_at_or_below(-self.precision),
            };
            if hits {
                return Err(Error::PrecisionInsufficient(
                    "support set meets the unknown tail".into(),
                ));
            }
        }
        let r = self.support_restrict(set);
        Ok(LaurentPoly::from_terms(
            self.p,
            r.terms().map(|(e, c)| (e, c as i64)),
        ))
    }

    /// `(f^{≥0}, f^{<0})` in actual exponents of `t`.
    pub fn split_sign(&self) -> (Self, Self) {
        (
            self.support_restrict(&SupportSet::AtLeast(0)),
            self.support_restrict(&SupportSet::AtMost(-1)),
        )
    }

    /// Known terms as a Laurent polynomial (drops the precision).
    pub fn known_part(&self) -> LaurentPoly {
        LaurentPoly::from_terms(self.p, self.terms().map(|(e, c)| (e, c as i64)))
    }

    pub fn level_member(&self, n: u32) -> bool {
        match pow_i64(self.p, n) {
            Some(q) => self.local.keys().all(|u| u % q == 0),
            None => self.local.keys().all(|u| *u == 0),
        }
    }

    /// `f = t^{a p^n} · λ · u` with `u ≡ 1` modulo the local uniformizer
    /// raised to `p^n`.
    pub fn unit_decompose(&self, n: u32) -> Result<(i64, FieldScalar, LocalSeries)> {
        let (&v, &lead) = self.local.iter().next().ok_or_else(|| {
            Error::PrecisionInsufficient(format!("order of {self:?} not determinable"))
        })?;
        let q = pow_i64(self.p, n).ok_or(Error::Overflow)?;
        if v % q != 0 {
            return Err(Error::NotAUnit(format!(
                "order {v} of {self:?} not divisible by p^{n}"
            )));
        }
        let lambda = FieldScalar::new(lead as i64, self.p);
        let inv = lambda.inverse().unwrap();
        let u = self.shift(-self.side.sign() * v).scale(inv);
        Ok((self.side.sign() * v / q, lambda, u))
    }

    pub fn delta_apply(&self, m: u64) -> Self {
        let p = self.p;
        let s = self.side.sign();
        let mut out = self.with_local(BTreeMap::new(), self.precision);
        for (u, c) in &self.local {
            let b = binom_int_mod_p(s * u, m, p);
            out.add_local(*u, c * b.value() % p);
        }
        out
    }

    /// Agreement on every coefficient known for both series.
    pub fn agrees_with(&self, other: &Self) -> bool {
        self.check(other);
        let prec = self.precision.min(other.precision);
        let a: Vec<_> = self.local.iter().filter(|(u, _)| **u < prec).collect();
        let b: Vec<_> = other.local.iter().filter(|(u, _)| **u < prec).collect();
        a == b
    }

    /// Replaces the precision by `min(current, precision)`.
    pub fn truncated(&self, precision: i64) -> Self {
        self.with_local(self.local.clone(), self.precision.min(precision))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at0(t: &[(i64, i64)], prec: i64) -> LocalSeries {
        LocalSeries::new(3, Side::At0, t.iter().copied(), prec)
    }

    #[test]
    fn unit_decompose_example() {
        let f = at0(&[(3, 2), (6, 2)], 40);
        let (a, lambda, u) = f.unit_decompose(1).unwrap();
        assert_eq!(a, 1);
        assert_eq!(lambda.value(), 2);
        assert_eq!(u.known_part(), LaurentPoly::from_terms(3, [(0, 1), (3, 1)]));
        assert_eq!(u.precision(), 37);
    }

    #[test]
    fn inverse_round_trip() {
        let f = at0(&[(-1, 1), (0, 2), (4, 1)], 20);
        let g = f.inverse().unwrap();
        let one = f.mul(&g);
        assert!(one.agrees_with(&LocalSeries::exact_monomial(3, Side::At0, 1, 0)));
        assert_eq!(g.precision(), 22);
        assert_eq!(one.precision(), 21);
    }

    #[test]
    fn at_infinity_precision() {
        let f = LocalSeries::new(3, Side::AtInf, [(2, 1), (-1, 1), (-50, 1)], 10);
        assert_eq!(f.terms().count(), 2);
        assert!(f.coeff(-9).is_ok());
        assert!(f.coeff(-10).is_err());
        let g = f.inverse().unwrap();
        assert!(f
            .mul(&g)
            .agrees_with(&LocalSeries::exact_monomial(3, Side::AtInf, 1, 0)));
    }

    #[test]
    fn exact_restriction_fails_on_unknown_tail() {
        let f = at0(&[(-1, 1), (1, 1)], 5);
        assert!(f.support_restrict_exact(&SupportSet::residue(0, 3)).is_err());
        assert_eq!(
            f.support_restrict_exact(&SupportSet::AtMost(-1)).unwrap(),
            LaurentPoly::monomial(3, 1, -1)
        );
    }

    #[test]
    fn multiplication_precision() {
        let f = at0(&[(1, 1)], 10);
        let g = at0(&[(-2, 1)], 4);
        let h = f.mul(&g);
        // min(10 + (-2), 4 + 1)
        assert_eq!(h.precision(), 5);
        assert_eq!(h.known_part(), LaurentPoly::monomial(3, 1, -1));
    }
}
