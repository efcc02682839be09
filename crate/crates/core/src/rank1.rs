//! Rank-one towers: the objects `O(α)` and their classes in `Z_p/Z`.

use serde::{Deserialize, Serialize};

use crate::arith::PExponent;
use crate::error::{Error, Result};
use crate::matrix;
use crate::series::{pow_i64, Coeff, Ring};
use crate::tower::{digit_exponent, monomial, Group, Tail, Tower};

/// A class in `Z_p/Z`, stored by its representative in `[0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rank1Class {
    pub alpha: PExponent,
}

impl Rank1Class {
    pub fn new(alpha: PExponent) -> Self {
        Rank1Class {
            alpha: alpha.class_mod_z(),
        }
    }
}

/// `σ_n = t^{α_n p^n}` for `n < depth`, with twist `[α]`.
pub fn make_oalpha<E: Coeff>(p: u64, alpha: PExponent, ring: Ring, depth: usize) -> Result<Tower<E>> {
    alpha.validate(p)?;
    let mut matrices = Vec::with_capacity(depth);
    for n in 0..depth {
        matrices.push(vec![vec![monomial::<E>(p, ring, digit_exponent(&alpha, p, n)?)]]);
    }
    Ok(Tower {
        p,
        ring,
        group: Group::D,
        twist: vec![alpha],
        matrices,
        tail: Tail::DiagonalTwist,
    })
}

/// Direct sum of `O(α_i)`.
pub fn make_diagonal<E: Coeff>(p: u64, alphas: &[PExponent], ring: Ring, depth: usize) -> Result<Tower<E>> {
    let mut matrices = Vec::with_capacity(depth);
    for n in 0..depth {
        let d = alphas
            .iter()
            .map(|a| Ok(monomial::<E>(p, ring, digit_exponent(a, p, n)?)))
            .collect::<Result<Vec<E>>>()?;
        matrices.push(matrix::diagonal(p, ring, &d));
    }
    Ok(Tower {
        p,
        ring,
        group: Group::D,
        twist: alphas.to_vec(),
        matrices,
        tail: Tail::DiagonalTwist,
    })
}

/// Exponent `a_n` of the local uniformizer in `σ_n = u^{a_n p^n} λ_n (unit)`.
pub(crate) fn local_order<E: Coeff>(x: &E, n: usize) -> Result<i64> {
    let (a, _, _) = x.unit_parts(n as u32)?;
    Ok(match x.ring() {
        Ring::DiscInf => -a,
        _ => a,
    })
}

/// `Σ_{n<N} a_n p^n` plus the tail contribution, taken mod `Z`.
///
/// Exponents are read in the local uniformizer, so over `k((t^{-1}))` the
/// twist enters with a minus sign.
pub fn classify_rank1<E: Coeff>(t: &Tower<E>) -> Result<Rank1Class> {
    if t.rank() != 1 {
        return Err(Error::ShapeMismatch(format!("rank {} tower is not rank one", t.rank())));
    }
    let p = t.p;
    let mut acc: i128 = 0;
    for n in 0..t.depth() {
        let a = local_order(&t.matrices[n][0][0], n)? as i128;
        let q = pow_i64(p, n as u32).ok_or(Error::Overflow)? as i128;
        acc = acc.checked_add(a.checked_mul(q).ok_or(Error::Overflow)?).ok_or(Error::Overflow)?;
    }
    let tau = t.twist[0];
    let head = tau.partial_sum(p, t.depth())? as i128;
    let sign = if t.ring == Ring::DiscInf { -1 } else { 1 };
    // α = acc + sign (τ − head)
    let den = tau.den() as i128;
    let num = (acc - sign * head) * den + sign * tau.num() as i128;
    let frac = num.rem_euclid(den);
    Ok(Rank1Class {
        alpha: PExponent::ratio(frac as i64, den as i64),
    })
}

pub fn is_trivial_rank1(c: &Rank1Class) -> bool {
    c.alpha.is_integer()
}

pub fn hom_dim(a: &Rank1Class, b: &Rank1Class) -> u32 {
    u32::from((a.alpha - b.alpha).is_integer())
}

/// `α ↦ −α`, the effect of reading a class at the other disc.
pub fn flip_side(c: &Rank1Class) -> Rank1Class {
    Rank1Class::new(-c.alpha)
}
