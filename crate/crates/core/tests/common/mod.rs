#![allow(dead_code)]

use frobtower::arith::PExponent;
use frobtower::matrix::{self, Matrix};
use frobtower::series::{LaurentPoly, LocalSeries, Ring, Side};
use frobtower::tower::{GaugeWitness, Group, Tail, Tower};
use rand::rngs::StdRng;
use rand::Rng;

pub fn twist_for(rng: &mut StdRng, p: u64) -> PExponent {
    let den = (p - 1) as i64;
    PExponent::ratio(rng.gen_range(-2 * den..=2 * den), den)
}

fn q(p: u64, n: usize) -> i64 {
    (p as i64).pow(n as u32)
}

/// Digit of a twist times `p^n`.
pub fn digit_exp(a: &PExponent, p: u64, n: usize) -> i64 {
    a.digit(p, n) as i64 * q(p, n)
}

/// Random element of `k((t^{p^n}))` with local exponents in `lo..hi` (in
/// units of `p^n`), known to relative precision `prec`.
pub fn local_elem(rng: &mut StdRng, p: u64, side: Side, n: usize, lo: i64, hi: i64, terms: usize, prec: i64) -> LocalSeries {
    let s = if side == Side::AtInf { -1 } else { 1 };
    let k = rng.gen_range(0..=terms);
    let ts: Vec<(i64, i64)> = (0..k)
        .map(|_| (s * rng.gen_range(lo..hi) * q(p, n), rng.gen_range(1..p as i64)))
        .collect();
    LocalSeries::new(p, side, ts, prec * q(p, n))
}

/// `t^{(digit + shift) p^n}` times `λ(1 + h)` with `h` of positive order.
pub fn local_unit(rng: &mut StdRng, p: u64, side: Side, n: usize, base: i64, prec: i64) -> LocalSeries {
    let lead = LocalSeries::new(p, side, [(base, rng.gen_range(1..p as i64))], EXACT_LIKE);
    let h = local_elem(rng, p, side, n, 1, 4, 2, prec);
    let one = LocalSeries::new(p, side, [(0, 1)], prec * q(p, n));
    lead.mul(&one.add(&h))
}

const EXACT_LIKE: i64 = frobtower::series::EXACT;

/// Random triangular tower over a disc with `DiagonalTwist` tail.
pub fn random_local_b(rng: &mut StdRng, p: u64, side: Side, rank: usize, depth: usize, prec: i64) -> Tower<LocalSeries> {
    let twist: Vec<PExponent> = (0..rank).map(|_| twist_for(rng, p)).collect();
    random_local_b_with(rng, p, side, &twist, depth, prec, true)
}

/// With `shifts`, diagonal orders move off the digits by `±p^n`.
pub fn random_local_b_with(
    rng: &mut StdRng,
    p: u64,
    side: Side,
    twist: &[PExponent],
    depth: usize,
    prec: i64,
    shifts: bool,
) -> Tower<LocalSeries> {
    let ring = if side == Side::At0 { Ring::Disc0 } else { Ring::DiscInf };
    let rank = twist.len();
    let mut matrices = Vec::with_capacity(depth);
    for n in 0..depth {
        let mut m: Matrix<LocalSeries> = matrix::zero(p, ring, rank);
        for i in 0..rank {
            let shift = if shifts { rng.gen_range(-1..=1) * q(p, n) } else { 0 };
            m[i][i] = local_unit(rng, p, side, n, digit_exp(&twist[i], p, n) + shift, prec);
            for j in i + 1..rank {
                m[i][j] = local_elem(rng, p, side, n, -3, 3, 2, prec);
            }
        }
        matrices.push(m);
    }
    Tower::new(p, ring, Group::B, twist.to_vec(), matrices, Tail::DiagonalTwist).expect("generated tower is valid")
}

/// Random finite gauge in `B` over a disc, identity from level `depth`.
pub fn random_local_gauge(rng: &mut StdRng, p: u64, side: Side, rank: usize, depth: usize, prec: i64) -> GaugeWitness<LocalSeries> {
    let ring = if side == Side::At0 { Ring::Disc0 } else { Ring::DiscInf };
    let mut matrices = Vec::with_capacity(depth + 1);
    for n in 0..=depth {
        let mut m: Matrix<LocalSeries> = matrix::identity(p, ring, rank);
        if n < depth {
            for i in 0..rank {
                m[i][i] = local_unit(rng, p, side, n, 0, prec);
                for j in i + 1..rank {
                    m[i][j] = local_elem(rng, p, side, n, -2, 3, 2, prec);
                }
            }
        }
        matrices.push(m);
    }
    GaugeWitness { p, ring, group: Group::B, matrices }
}

pub fn poly(p: u64, t: &[(i64, i64)]) -> LaurentPoly {
    LaurentPoly::from_terms(p, t.iter().copied())
}

/// Random Laurent element of level `n` with exponents `p^n · (lo..hi)`.
pub fn gm_elem(rng: &mut StdRng, p: u64, n: usize, lo: i64, hi: i64, terms: usize) -> LaurentPoly {
    let k = rng.gen_range(0..=terms);
    LaurentPoly::from_terms(p, (0..k).map(|_| (rng.gen_range(lo..hi) * q(p, n), rng.gen_range(1..p as i64))))
}

/// Random triangular tower over `k[t^{±1}]`: a few explicit levels and a
/// self-similar tail.
pub fn random_gm_b(rng: &mut StdRng, p: u64, rank: usize, depth: usize) -> Tower<LaurentPoly> {
    let twist: Vec<PExponent> = (0..rank).map(|_| twist_for(rng, p)).collect();
    let mut matrices = Vec::with_capacity(depth);
    for n in 0..depth {
        let mut m: Matrix<LaurentPoly> = matrix::zero(p, Ring::Gm, rank);
        for i in 0..rank {
            let shift = rng.gen_range(-1..=1) * q(p, n);
            m[i][i] = LaurentPoly::monomial(p, rng.gen_range(1..p as i64), digit_exp(&twist[i], p, n) + shift);
            for j in i + 1..rank {
                m[i][j] = gm_elem(rng, p, n, -3, 4, 2);
            }
        }
        matrices.push(m);
    }
    let mut v: Matrix<LaurentPoly> = matrix::zero(p, Ring::Gm, rank);
    for i in 0..rank {
        for j in i + 1..rank {
            v[i][j] = gm_elem(rng, p, 0, -2, 3, 2);
        }
    }
    let tail = if v.iter().flatten().all(|x| x.is_zero()) {
        Tail::DiagonalTwist
    } else {
        Tail::SelfSimilar { unipotent: v }
    };
    Tower::new(p, Ring::Gm, Group::B, twist, matrices, tail).expect("generated tower is valid")
}

/// Random finite `B`-gauge over `k[t^{±1}]`.
pub fn random_gm_gauge(rng: &mut StdRng, p: u64, rank: usize, depth: usize) -> GaugeWitness<LaurentPoly> {
    let mut matrices = Vec::with_capacity(depth + 1);
    for n in 0..=depth {
        let mut m: Matrix<LaurentPoly> = matrix::identity(p, Ring::Gm, rank);
        if n < depth {
            for i in 0..rank {
                m[i][i] = LaurentPoly::monomial(p, rng.gen_range(1..p as i64), rng.gen_range(-1..=1) * q(p, n));
                for j in i + 1..rank {
                    m[i][j] = gm_elem(rng, p, n, -2, 3, 2);
                }
            }
        }
        matrices.push(m);
    }
    GaugeWitness { p, ring: Ring::Gm, group: Group::B, matrices }
}

/// A tower at `∞` whose diagonal exponents match those of `a` where the
/// twist tails allow it.
pub fn mirror_partner(rng: &mut StdRng, a: &Tower<LocalSeries>, prec: i64) -> Tower<LocalSeries> {
    let p = a.p;
    let exps = frobtower::special::diagonal_exponents(a).unwrap();
    let twist: Vec<PExponent> = exps
        .iter()
        .zip(&a.twist)
        .map(|(e, t)| if e.eventual_digit(p).1 == t.eventual_digit(p).1 { *e } else { *t })
        .collect();
    random_local_b_with(rng, p, Side::AtInf, &twist, a.depth(), prec, false)
}
