use std::collections::BTreeMap;
use std::fmt;

use crate::arith::{binom_int_mod_p, reduce, FieldScalar};
use crate::error::{Error, Result};

use super::{pow_i64, SupportSet};

/// A sparse Laurent polynomial over F_p. Zero coefficients are never stored.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct LaurentPoly {
    p: u64,
    terms: BTreeMap<i64, u64>,
}

impl fmt::Debug for LaurentPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(e, c)| match (e, c) {
                (0, c) => format!("{c}"),
                (e, 1) => format!("t^{e}"),
                (e, c) => format!("{c}t^{e}"),
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

impl LaurentPoly {
    pub fn zero(p: u64) -> Self {
        LaurentPoly {
            p,
            terms: BTreeMap::new(),
        }
    }

    pub fn one(p: u64) -> Self {
        Self::monomial(p, 1, 0)
    }

    pub fn monomial(p: u64, coeff: i64, exp: i64) -> Self {
        let mut f = Self::zero(p);
        f.add_term(exp, reduce(coeff, p));
        f
    }

    /// Collects `(exponent, coefficient)` pairs, summing repeats.
    pub fn from_terms<I: IntoIterator<Item = (i64, i64)>>(p: u64, terms: I) -> Self {
        let mut f = Self::zero(p);
        for (e, c) in terms {
            f.add_term(e, reduce(c, p));
        }
        f
    }

    pub(crate) fn add_term(&mut self, exp: i64, coeff: u64) {
        let p = self.p;
        if coeff % p == 0 {
            return;
        }
        let entry = self.terms.entry(exp).or_insert(0);
        *entry = (*entry + coeff) % p;
        if *entry == 0 {
            self.terms.remove(&exp);
        }
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, exp: i64) -> FieldScalar {
        FieldScalar::new(self.terms.get(&exp).copied().unwrap_or(0) as i64, self.p)
    }

    /// Terms in increasing exponent order.
    pub fn terms(&self) -> impl Iterator<Item = (i64, u64)> + '_ {
        self.terms.iter().map(|(e, c)| (*e, *c))
    }

    pub fn min_exp(&self) -> Option<i64> {
        self.terms.keys().next().copied()
    }

    pub fn max_exp(&self) -> Option<i64> {
        self.terms.keys().next_back().copied()
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.p, other.p, "characteristic mismatch");
        let mut out = self.clone();
        for (e, c) in other.terms() {
            out.add_term(e, c);
        }
        out
    }

    pub fn neg(&self) -> Self {
        let p = self.p;
        LaurentPoly {
            p,
            terms: self.terms.iter().map(|(e, c)| (*e, p - c)).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.p, other.p, "characteristic mismatch");
        let p = self.p;
        let mut out = Self::zero(p);
        for (e1, c1) in self.terms() {
            for (e2, c2) in other.terms() {
                out.add_term(e1 + e2, c1 * c2 % p);
            }
        }
        out
    }

    pub fn scale(&self, c: FieldScalar) -> Self {
        let p = self.p;
        let mut out = Self::zero(p);
        for (e, v) in self.terms() {
            out.add_term(e, v * c.value() % p);
        }
        out
    }

    /// Multiplication by `t^k`.
    pub fn shift(&self, k: i64) -> Self {
        LaurentPoly {
            p: self.p,
            terms: self.terms.iter().map(|(e, c)| (e + k, *c)).collect(),
        }
    }

    /// `f(t) ↦ f(t^q)` for `q >= 1`.
    pub fn scale_exponents(&self, q: i64) -> Result<Self> {
        assert!(q >= 1);
        let mut terms = BTreeMap::new();
        for (e, c) in self.terms() {
            terms.insert(e.checked_mul(q).ok_or(Error::Overflow)?, c);
        }
        Ok(LaurentPoly { p: self.p, terms })
    }

    /// Inverse of a monomial; other polynomials are not units of `k[t^{±1}]`.
    pub fn inverse(&self) -> Result<Self> {
        match self.as_monomial() {
            Some((c, e)) => Ok(Self::monomial(
                self.p,
                c.inverse().unwrap().value() as i64,
                -e,
            )),
            None => Err(Error::NotAUnit(format!("{self:?} in k[t^±1]"))),
        }
    }

    pub fn as_monomial(&self) -> Option<(FieldScalar, i64)> {
        if self.terms.len() == 1 {
            let (e, c) = self.terms.iter().next().unwrap();
            Some((FieldScalar::new(*c as i64, self.p), *e))
        } else {
            None
        }
    }

    pub fn support_restrict(&self, set: &SupportSet) -> Self {
        LaurentPoly {
            p: self.p,
            terms: self
                .terms
                .iter()
                .filter(|(e, _)| set.contains(**e))
                .map(|(e, c)| (*e, *c))
                .collect(),
        }
    }

    /// `(f^{≥0}, f^{<0})`.
    pub fn split_sign(&self) -> (Self, Self) {
        let mut nonneg = Self::zero(self.p);
        let mut neg = Self::zero(self.p);
        for (e, c) in self.terms() {
            if e >= 0 {
                nonneg.terms.insert(e, c);
            } else {
                neg.terms.insert(e, c);
            }
        }
        (nonneg, neg)
    }

    /// Whether `supp(f) ⊆ p^n Z`, i.e. `f ∈ R^{p^n}`.
    pub fn level_member(&self, n: u32) -> bool {
        match pow_i64(self.p, n) {
            Some(q) => self.terms.keys().all(|e| e % q == 0),
            None => self.terms.keys().all(|e| *e == 0),
        }
    }

    /// `f = t^{a p^n} · λ` for a unit of `k[t^{±1}]^{p^n}`.
    pub fn unit_decompose(&self, n: u32) -> Result<(i64, FieldScalar)> {
        let (c, e) = self
            .as_monomial()
            .ok_or_else(|| Error::NotAUnit(format!("{self:?} in k[t^±1]")))?;
        let q = pow_i64(self.p, n).ok_or(Error::Overflow)?;
        if e % q != 0 {
            return Err(Error::NotAUnit(format!("{self:?} not in level {n}")));
        }
        Ok((e / q, c))
    }

    /// `δ^{(m)}`: `t^i ↦ C(i, m) t^i`.
    pub fn delta_apply(&self, m: u64) -> Self {
        let p = self.p;
        let mut out = Self::zero(p);
        for (e, c) in self.terms() {
            let b = binom_int_mod_p(e, m, p);
            out.add_term(e, c * b.value() % p);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(p: u64, t: &[(i64, i64)]) -> LaurentPoly {
        LaurentPoly::from_terms(p, t.iter().copied())
    }

    #[test]
    fn restrict_examples() {
        let f = lp(3, &[(-1, 1), (3, 2)]);
        assert_eq!(f.support_restrict(&SupportSet::residue(0, 3)), lp(3, &[(3, 2)]));
        let g = lp(3, &[(-1, 1), (1, 1)]);
        let u = SupportSet::residue(2, 3).complement();
        assert_eq!(g.support_restrict(&u), lp(3, &[(1, 1)]));
        assert!(LaurentPoly::zero(3).support_restrict(&u).is_zero());
    }

    #[test]
    fn sign_split_examples() {
        let (a, b) = lp(3, &[(-2, 1), (0, 1), (1, 1)]).split_sign();
        assert_eq!(a, lp(3, &[(0, 1), (1, 1)]));
        assert_eq!(b, lp(3, &[(-2, 1)]));
        let (a, b) = lp(3, &[(-9, 1)]).split_sign();
        assert!(a.is_zero());
        assert_eq!(b, lp(3, &[(-9, 1)]));
    }

    #[test]
    fn level_membership() {
        assert!(lp(3, &[(3, 2), (6, 2)]).level_member(1));
        assert!(!lp(3, &[(1, 1)]).level_member(1));
        assert!(LaurentPoly::one(3).level_member(7));
        assert!(LaurentPoly::one(3).level_member(60));
    }

    #[test]
    fn unit_decomposition() {
        assert_eq!(
            lp(3, &[(-3, 2)]).unit_decompose(1).unwrap(),
            (-1, FieldScalar::new(2, 3))
        );
        assert!(matches!(
            lp(3, &[(0, 1), (1, 1)]).unit_decompose(0),
            Err(Error::NotAUnit(_))
        ));
    }

    #[test]
    fn delta_examples() {
        assert_eq!(lp(3, &[(5, 1)]).delta_apply(3), lp(3, &[(5, 1)]));
        assert!(LaurentPoly::monomial(3, 2, 0).delta_apply(1).is_zero());
        let f = lp(5, &[(-3, 1), (7, 4)]);
        assert_eq!(f.delta_apply(0), f);
    }

    #[test]
    fn monomial_inverse() {
        let f = lp(5, &[(4, 3)]);
        assert_eq!(f.mul(&f.inverse().unwrap()), LaurentPoly::one(5));
        assert!(lp(5, &[(0, 1), (1, 1)]).inverse().is_err());
    }
}
