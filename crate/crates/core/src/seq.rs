//! Sequences `(x_n)_{n≥0}` with `x_n` in the level-`n` subring, given by
//! explicit head values and an eventually periodic self-similar rule.

use crate::error::{Error, Result};
use crate::series::{pow_i64, Coeff, LaurentPoly, Ring, EXACT};

/// `x_n = head[n]` for `n < h`, else `x_n = cycle[(n − h) mod L](t^{p^n})`.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelSeq<E> {
    pub p: u64,
    pub ring: Ring,
    pub head: Vec<E>,
    pub cycle: Vec<E>,
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Local exponents of the known terms (`e` at `0`, `−e` at `∞`).
pub(crate) fn local_exponents<E: Coeff>(x: &E) -> Vec<i64> {
    let sign = if x.ring() == Ring::DiscInf { -1 } else { 1 };
    x.known_terms().terms().map(|(e, _)| sign * e).collect()
}

/// Rule scaled to level `n`. Exact rules scale exactly; the others are
/// first truncated to relative precision `cap`, so the value is known to
/// local precision `cap·p^n`.
pub(crate) fn scale_rule<E: Coeff>(rule: &E, p: u64, n: usize, cap: i64) -> Result<E> {
    let exact = rule.precision() >= EXACT;
    if rule.is_zero() && exact {
        return Ok(rule.clone());
    }
    let rule = if exact { rule.clone() } else { rule.truncated(cap) };
    match pow_i64(p, n as u32) {
        Some(q) => rule.scale_exponents(q),
        None => {
            // only a constant term survives at representable exponents
            if exact && !rule.known_terms().terms().all(|(e, _)| e == 0) {
                return Err(Error::Overflow);
            }
            if local_exponents(&rule).iter().any(|u| *u < 0) {
                return Err(Error::Overflow);
            }
            let c = rule.known_terms().coeff(0).value() as i64;
            Ok(rule.from_laurent_like(&LaurentPoly::monomial(p, c, 0)))
        }
    }
}

impl<E: Coeff> LevelSeq<E> {
    pub fn zero(p: u64, ring: Ring) -> Self {
        LevelSeq {
            p,
            ring,
            head: Vec::new(),
            cycle: vec![E::zero_in(p, ring)],
        }
    }

    pub fn finite(p: u64, ring: Ring, head: Vec<E>) -> Self {
        LevelSeq {
            p,
            ring,
            head,
            cycle: vec![E::zero_in(p, ring)],
        }
    }

    pub fn self_similar(p: u64, ring: Ring, head: Vec<E>, rule: E) -> Self {
        LevelSeq {
            p,
            ring,
            head,
            cycle: vec![rule],
        }
    }

    pub fn head_len(&self) -> usize {
        self.head.len()
    }

    pub fn period(&self) -> usize {
        self.cycle.len()
    }

    pub fn rule_at(&self, n: usize) -> &E {
        debug_assert!(n >= self.head.len());
        &self.cycle[(n - self.head.len()) % self.cycle.len()]
    }

    /// `x_n`; non-exact rules are used to relative precision `cap`.
    pub fn value(&self, n: usize, cap: i64) -> Result<E> {
        if n < self.head.len() {
            return Ok(self.head[n].clone());
        }
        scale_rule(self.rule_at(n), self.p, n, cap)
    }

    pub fn values(&self, upto: usize, cap: i64) -> Result<Vec<E>> {
        (0..upto).map(|n| self.value(n, cap)).collect()
    }

    /// Materializes levels below `h` into the head.
    pub fn extend_head(&self, h: usize, cap: i64) -> Result<Self> {
        if h <= self.head.len() {
            return Ok(self.clone());
        }
        let mut head = self.head.clone();
        for n in self.head.len()..h {
            head.push(self.value(n, cap)?);
        }
        let l = self.cycle.len();
        let shift = (h - self.head.len()) % l;
        let cycle = (0..l).map(|k| self.cycle[(k + shift) % l].clone()).collect();
        Ok(LevelSeq {
            p: self.p,
            ring: self.ring,
            head,
            cycle,
        })
    }

    fn with_period(&self, l: usize) -> Self {
        let mut out = self.clone();
        out.cycle = (0..l).map(|k| self.cycle[k % self.cycle.len()].clone()).collect();
        out
    }

    /// Brings two sequences to a common head length and period.
    pub fn align(&self, other: &Self, cap: i64) -> Result<(Self, Self)> {
        let h = self.head.len().max(other.head.len());
        let a = self.extend_head(h, cap)?;
        let b = other.extend_head(h, cap)?;
        let (la, lb) = (a.cycle.len(), b.cycle.len());
        let l = la / gcd(la, lb) * lb;
        Ok((a.with_period(l), b.with_period(l)))
    }

    fn zip_with(&self, other: &Self, cap: i64, f: impl Fn(&E, &E) -> E) -> Result<Self> {
        let (a, b) = self.align(other, cap)?;
        Ok(LevelSeq {
            p: a.p,
            ring: a.ring,
            head: a.head.iter().zip(&b.head).map(|(x, y)| f(x, y)).collect(),
            cycle: a.cycle.iter().zip(&b.cycle).map(|(x, y)| f(x, y)).collect(),
        })
    }

    pub fn add(&self, other: &Self, cap: i64) -> Result<Self> {
        self.zip_with(other, cap, |x, y| x.add(y))
    }

    pub fn sub(&self, other: &Self, cap: i64) -> Result<Self> {
        self.zip_with(other, cap, |x, y| x.sub(y))
    }

    /// Levelwise product; rules multiply because scaling is a ring map.
    pub fn mul(&self, other: &Self, cap: i64) -> Result<Self> {
        self.zip_with(other, cap, |x, y| x.mul(y))
    }

    pub fn neg(&self) -> Self {
        self.map(|x| x.neg())
    }

    /// Applies a map commuting with `t ↦ t^p` to every value.
    pub fn map(&self, f: impl Fn(&E) -> E) -> Self {
        LevelSeq {
            p: self.p,
            ring: self.ring,
            head: self.head.iter().map(&f).collect(),
            cycle: self.cycle.iter().map(&f).collect(),
        }
    }

    pub fn try_map<F: Clone + Coeff>(&self, ring: Ring, f: impl Fn(&E) -> Result<F>) -> Result<LevelSeq<F>> {
        Ok(LevelSeq {
            p: self.p,
            ring,
            head: self.head.iter().map(&f).collect::<Result<_>>()?,
            cycle: self.cycle.iter().map(&f).collect::<Result<_>>()?,
        })
    }

    /// `(x_{n+1})_n`.
    pub fn shift_index(&self) -> Result<Self> {
        let p = self.p as i64;
        if self.head.is_empty() {
            let l = self.cycle.len();
            let cycle = (0..l)
                .map(|k| self.cycle[(k + 1) % l].scale_exponents(p))
                .collect::<Result<_>>()?;
            return Ok(LevelSeq {
                p: self.p,
                ring: self.ring,
                head: Vec::new(),
                cycle,
            });
        }
        Ok(LevelSeq {
            p: self.p,
            ring: self.ring,
            head: self.head[1..].to_vec(),
            cycle: self
                .cycle
                .iter()
                .map(|x| x.scale_exponents(p))
                .collect::<Result<_>>()?,
        })
    }

    pub fn is_zero(&self) -> bool {
        self.head.iter().all(|x| x.is_zero()) && self.cycle.iter().all(|x| x.is_zero())
    }

    pub fn tail_is_zero(&self) -> bool {
        self.cycle.iter().all(|x| x.is_zero())
    }

    /// Drops head entries that already follow the rule, and repeated cycles.
    pub fn compact(&self, cap: i64) -> Result<Self> {
        let mut out = self.clone();
        let l = out.cycle.len();
        if l > 1 && out.cycle.iter().all(|x| *x == out.cycle[0]) {
            out.cycle.truncate(1);
        }
        while let Some(last) = out.head.last() {
            let n = out.head.len() - 1;
            let l = out.cycle.len();
            // moving level n into the rule rotates the cycle back by one
            let rule = out.cycle[l - 1].clone();
            if out.ring != Ring::Gm {
                break;
            }
            if scale_rule(&rule, out.p, n, cap)? != *last {
                break;
            }
            out.head.pop();
            out.cycle.rotate_right(1);
        }
        Ok(out)
    }
}
