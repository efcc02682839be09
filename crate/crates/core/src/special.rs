//! Triangular towers: the diagonal-split test, special towers, lifting from
//! `k((t))`, witness transfer and gluing.
//!
//! All algorithms share one elimination: normalize the diagonal to digit
//! monomials, then clear the entries above it column by column, each entry
//! being a twisted rank-2 class handed to the unipotent engine.

use serde::{Deserialize, Serialize};

use crate::arith::PExponent;
use crate::error::{Error, Result};
use crate::matrix::{self, Matrix};
use crate::rank1::{classify_rank1, flip_side, Rank1Class};
use crate::seq::LevelSeq;
use crate::series::{pow_i64, Coeff, LaurentPoly, LocalSeries, Ring, Side, EXACT};
use crate::tower::{
    digit_exponent, restrict, verify_witness, verify_witness_report, GaugeWitness, Group, Tail, Tower,
    VerifyReport,
};
use crate::unipotent::{criterion_name, lift_seq, normalize_seq, offending_terms, ysum_seq, UnipClass};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpecialSide {
    /// Regular singular at `∞`.
    Rsi,
    /// Regular singular at `0`.
    Rs0,
}

impl SpecialSide {
    pub fn side(self) -> Side {
        match self {
            SpecialSide::Rsi => Side::AtInf,
            SpecialSide::Rs0 => Side::At0,
        }
    }
}

/// One processed entry: its twist and normalized class.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntryTrace {
    pub entry: (usize, usize),
    pub twist: PExponent,
    /// `None` when the normalized tail has period larger than one.
    pub class: Option<UnipClass>,
}

/// Why an entry cannot be cleared.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certificate {
    pub entry: (usize, usize),
    pub twist: PExponent,
    pub class: Option<UnipClass>,
    pub criterion: &'static str,
    /// `(coefficient, exponent)` pairs of the tail rule.
    pub offending: Vec<(u64, i64)>,
}

#[derive(Clone, Debug)]
pub struct SplitData<E> {
    /// `⊕ O(α_i)` with digit-monomial levels.
    pub diagonal: Tower<E>,
    /// Gauges the input onto `diagonal`.
    pub witness: GaugeWitness<E>,
    /// Whether the witness is the identity past its stored levels. If not,
    /// it is exact only on the stored range.
    pub finite: bool,
    pub trace: Vec<EntryTrace>,
    pub report: VerifyReport,
}

#[derive(Clone, Debug)]
pub enum SplitOutcome<E> {
    Split(Box<SplitData<E>>),
    NotSplit(Certificate),
}

impl<E> SplitOutcome<E> {
    pub fn is_split(&self) -> bool {
        matches!(self, SplitOutcome::Split(_))
    }
}

fn level_cap(precision: i64, p: u64, n: usize) -> i64 {
    pow_i64(p, n as u32).map_or(i64::MAX, |q| precision.saturating_mul(q))
}

/// Largest level whose exponents stay comfortably inside `i64`.
fn representable_depth(p: u64, precision: i64) -> usize {
    let mut n = 0usize;
    let mut q: i64 = precision.max(1).saturating_mul(64);
    while let Some(next) = q.checked_mul(p as i64 * p as i64) {
        q = next / p as i64;
        n += 1;
    }
    n
}

fn check_triangular<E: Coeff>(t: &Tower<E>) -> Result<()> {
    let tail_upper = match &t.tail {
        Tail::SelfSimilar { unipotent } => matrix::is_upper(unipotent),
        Tail::DiagonalTwist => true,
    };
    if t.matrices.iter().all(|m| matrix::is_upper(m)) && tail_upper {
        Ok(())
    } else {
        Err(Error::ShapeMismatch("tower is not upper triangular".into()))
    }
}

/// Classes of the diagonal entries, read in the local uniformizer.
pub fn diagonal_classes<E: Coeff>(t: &Tower<E>) -> Result<Vec<Rank1Class>> {
    check_triangular(t)?;
    (0..t.rank())
        .map(|i| {
            let sub = Tower {
                p: t.p,
                ring: t.ring,
                group: Group::D,
                twist: vec![t.twist[i]],
                matrices: t.matrices.iter().map(|m| vec![vec![m[i][i].clone()]]).collect(),
                tail: Tail::DiagonalTwist,
            };
            classify_rank1(&sub)
        })
        .collect()
}

/// Exponents of `t` carried by the diagonal entries, before reduction mod
/// `Z`: `Σ_{n<N} a_n p^n + τ − (τ_0 + … + τ_{N−1} p^{N−1})`.
pub fn diagonal_exponents<E: Coeff>(t: &Tower<E>) -> Result<Vec<PExponent>> {
    check_triangular(t)?;
    let p = t.p;
    let mut out = Vec::with_capacity(t.rank());
    for i in 0..t.rank() {
        let mut acc: i128 = 0;
        for (n, m) in t.matrices.iter().enumerate() {
            let (a, _, _) = m[i][i].unit_parts(n as u32)?;
            let q = pow_i64(p, n as u32).ok_or(Error::Overflow)? as i128;
            acc = acc.checked_add((a as i128).checked_mul(q).ok_or(Error::Overflow)?).ok_or(Error::Overflow)?;
        }
        let tau = t.twist[i];
        let head = tau.partial_sum(p, t.depth())? as i128;
        out.push(tau + PExponent::int(to_i64(acc - head)?));
    }
    Ok(out)
}

/// Twist of the output for a target exponent, compatible with the input's
/// tail: the target itself unless an integer target crosses sign.
fn output_twist(p: u64, tau: PExponent, target: PExponent) -> Result<PExponent> {
    let (_, ts) = tau.eventual_digit(p);
    let (_, cs) = target.eventual_digit(p);
    if ts == cs {
        Ok(target)
    } else if target.is_integer() && ts == 0 {
        Ok(PExponent::int(0))
    } else if target.is_integer() && ts == p - 1 {
        Ok(PExponent::int(-1))
    } else {
        Err(Error::UnsupportedTail(format!("twist {tau} does not end like {target}")))
    }
}

struct Shift<E> {
    twist: PExponent,
    /// `t^{K_n}`.
    k: LevelSeq<E>,
    k_inv: LevelSeq<E>,
    k_laurent: LevelSeq<LaurentPoly>,
    /// `t^{(c_i − c_j)_n p^n}`.
    tau: LevelSeq<E>,
}

struct Parts<E> {
    class: LevelSeq<LaurentPoly>,
    z: LevelSeq<E>,
}

/// Working state: `σ_n = G_n^{-1} ψ_n^{-1} (U_n Δ_n) ψ_{n+1} G_{n+1}`.
struct Reduction<E> {
    p: u64,
    ring: Ring,
    r: usize,
    precision: i64,
    max_depth: usize,
    twist: Vec<PExponent>,
    settle: usize,
    g: Vec<Vec<E>>,
    u: Vec<Vec<LevelSeq<E>>>,
    psi: Vec<Vec<LevelSeq<E>>>,
    out: Vec<Vec<LevelSeq<LaurentPoly>>>,
    trace: Vec<EntryTrace>,
}

fn mono_seq(p: u64, head: &[i64], rule: i64) -> LevelSeq<LaurentPoly> {
    LevelSeq::self_similar(
        p,
        Ring::Gm,
        head.iter().map(|e| LaurentPoly::monomial(p, 1, *e)).collect(),
        LaurentPoly::monomial(p, 1, rule),
    )
}

fn to_i64(x: i128) -> Result<i64> {
    i64::try_from(x).map_err(|_| Error::Overflow)
}

fn split_relevant<E: Coeff>(a: &LevelSeq<E>, twist: PExponent) -> Result<(LevelSeq<LaurentPoly>, LevelSeq<E>)> {
    let p = a.p;
    let one = |x: &E| -> Result<(LaurentPoly, E)> {
        if x.ring() != Ring::Gm && x.precision() < 1 {
            return Err(Error::PrecisionInsufficient(format!(
                "entry known only to precision {}",
                x.precision()
            )));
        }
        Ok(x.relevant_split())
    };
    // a head level never affects triviality, so an undetermined one is
    // telescoped whole
    let (rel_h, irr_h): (Vec<_>, Vec<_>) = a
        .head
        .iter()
        .map(|x| one(x).unwrap_or_else(|_| (LaurentPoly::zero(p), x.clone())))
        .unzip();
    let mut cycle = a.cycle.iter().map(one).collect::<Result<Vec<_>>>()?;
    if a.ring == Ring::Disc0 && twist.eventual_digit(p).1 == 0 {
        // constant tails do not telescope and are normalized instead
        for (rel, irr) in &mut cycle {
            let c = irr.known_terms().coeff(0);
            if !c.is_zero() {
                let m = LaurentPoly::monomial(p, c.value() as i64, 0);
                *rel = rel.add(&m);
                *irr = irr.sub(&irr.from_laurent_like(&m));
            }
        }
    }
    let (rel_c, irr_c): (Vec<_>, Vec<_>) = cycle.into_iter().unzip();
    Ok((
        LevelSeq { p, ring: Ring::Gm, head: rel_h, cycle: rel_c },
        LevelSeq { p, ring: a.ring, head: irr_h, cycle: irr_c },
    ))
}

fn negative_part(s: &LevelSeq<LaurentPoly>) -> LevelSeq<LaurentPoly> {
    s.map(|f| f.split_sign().1)
}

fn nonnegative_part(s: &LevelSeq<LaurentPoly>) -> LevelSeq<LaurentPoly> {
    s.map(|f| f.split_sign().0)
}

impl<E: Coeff> Reduction<E> {
    fn prepare(t: &Tower<E>, targets: &[PExponent], max_depth: usize, precision: i64) -> Result<Self> {
        let (p, ring, r) = (t.p, t.ring, t.rank());
        let twist = (0..r)
            .map(|i| output_twist(p, t.twist[i], targets[i]))
            .collect::<Result<Vec<_>>>()?;
        let settle = t
            .settled_from()
            .max(twist.iter().map(|a| a.eventual_digit(p).0).max().unwrap_or(0));
        let one = E::zero_in(p, ring).one_like();
        let levels = (0..settle).map(|n| t.level(n)).collect::<Result<Vec<_>>>()?;
        let mut g = vec![vec![one.clone(); r]; settle + 1];
        let mut ginv = g.clone();
        for n in (0..settle).rev() {
            let cap = level_cap(precision, p, n);
            for i in 0..r {
                let c = digit_exponent(&twist[i], p, n)?;
                let d = &levels[n][i][i];
                let dinv = matrix::unit_inverse(d, cap)?;
                g[n][i] = g[n + 1][i].mul(&dinv).shift(c);
                ginv[n][i] = d.mul(&ginv[n + 1][i]).shift(-c);
            }
        }
        let tail_v = match &t.tail {
            Tail::SelfSimilar { unipotent } => Some(unipotent),
            Tail::DiagonalTwist => None,
        };
        let zero = LevelSeq::zero(p, ring);
        let mut u = vec![vec![zero.clone(); r]; r];
        for i in 0..r {
            for j in i + 1..r {
                let mut head = Vec::with_capacity(settle);
                for n in 0..settle {
                    let c = digit_exponent(&twist[j], p, n)?;
                    head.push(g[n][i].mul(&levels[n][i][j]).mul(&ginv[n + 1][j]).shift(-c));
                }
                let rule = tail_v.map_or_else(|| E::zero_in(p, ring), |v| v[i][j].clone());
                u[i][j] = LevelSeq::self_similar(p, ring, head, rule);
            }
        }
        let mut psi = vec![vec![zero; r]; r];
        for (i, row) in psi.iter_mut().enumerate() {
            row[i] = LevelSeq::self_similar(p, ring, vec![], one.clone());
        }
        Ok(Reduction {
            p,
            ring,
            r,
            precision,
            max_depth,
            twist,
            settle,
            g,
            u,
            psi,
            out: vec![vec![LevelSeq::zero(p, Ring::Gm); r]; r],
            trace: Vec::new(),
        })
    }

    /// Entry order: columns left to right, each column bottom up. Clearing
    /// an entry only disturbs entries that come later.
    fn order(&self) -> Vec<(usize, usize)> {
        (1..self.r).flat_map(|j| (0..j).rev().map(move |i| (i, j))).collect()
    }

    fn shift_data(&self, i: usize, j: usize) -> Result<Shift<E>> {
        let p = self.p;
        let pi = p as i128;
        let (ai, aj) = (self.twist[i], self.twist[j]);
        let twist = (ai - aj).class_mod_z();
        let ns = [ai, aj, twist].iter().map(|a| a.eventual_digit(p).0).max().unwrap_or(0);
        let diff = |n: usize| ai.digit(p, n) as i128 - aj.digit(p, n) as i128;
        let pow = |n: usize| pow_i64(p, n as u32).map(i128::from).ok_or(Error::Overflow);
        let num = twist.eventual_digit(p).1 as i128 - diff(ns);
        if num % (pi - 1) != 0 {
            return Err(Error::UnsupportedTail(format!("twist difference {} leaves the family", ai - aj)));
        }
        let b = num / (pi - 1);
        let mut k = b * pow(ns)?;
        let mut ks = vec![0i64; ns];
        let mut ds = vec![0i64; ns];
        for n in (0..ns).rev() {
            let q = pow(n)?;
            k -= (twist.digit(p, n) as i128 - diff(n)) * q;
            ks[n] = to_i64(k)?;
            ds[n] = to_i64(diff(n) * q)?;
        }
        let b = to_i64(b)?;
        let k_laurent = mono_seq(p, &ks, b);
        let neg: Vec<i64> = ks.iter().map(|e| -e).collect();
        Ok(Shift {
            twist,
            k: lift_seq(&k_laurent, self.ring),
            k_inv: lift_seq(&mono_seq(p, &neg, -b), self.ring),
            k_laurent,
            tau: lift_seq(&mono_seq(p, &ds, to_i64(diff(ns))?), self.ring),
        })
    }

    fn engine_entry(&self, i: usize, j: usize, sh: &Shift<E>) -> Result<LevelSeq<E>> {
        sh.k_inv.mul(&self.u[i][j], self.precision)
    }

    /// Normalized class of an entry and the witness reducing it to that class.
    fn parts(&self, a: &LevelSeq<E>, twist: PExponent) -> Result<Parts<E>> {
        let (rel, irr) = split_relevant(a, twist)?;
        let nz = normalize_seq(&rel, twist, self.max_depth)?;
        let z = lift_seq::<E>(&nz.witness, self.ring).add(&ysum_seq(&irr, twist, self.precision)?, self.precision)?;
        Ok(Parts { class: nz.class, z })
    }

    /// `z + Σ`-trivialization of a remainder that meets the criterion.
    fn absorb(&self, z: &LevelSeq<E>, rest: &LevelSeq<LaurentPoly>, twist: PExponent) -> Result<LevelSeq<E>> {
        let y = ysum_seq(&lift_seq::<E>(rest, self.ring), twist, self.precision)?;
        z.add(&y, self.precision)
    }

    /// Applies `I + Y E_ij` with `Y = −t^K z` and records the new entry.
    fn apply(&mut self, i: usize, j: usize, sh: &Shift<E>, keep: &LevelSeq<LaurentPoly>, z: &LevelSeq<E>) -> Result<()> {
        let cap = self.precision;
        let y = sh.k.mul(z, cap)?.neg();
        for k in j + 1..self.r {
            let d = y.mul(&self.u[j][k], cap)?;
            self.u[i][k] = self.u[i][k].add(&d, cap)?;
        }
        if i > 0 {
            let y1 = sh.tau.mul(&y.shift_index()?, cap)?;
            for k in 0..i {
                let d = self.u[k][i].mul(&y1, cap)?;
                self.u[k][j] = self.u[k][j].sub(&d, cap)?;
            }
        }
        let out = sh.k_laurent.mul(keep, cap)?.compact(cap)?;
        self.u[i][j] = lift_seq(&out, self.ring);
        self.out[i][j] = out;
        for c in 0..self.r {
            let d = y.mul(&self.psi[j][c], cap)?;
            self.psi[i][c] = self.psi[i][c].add(&d, cap)?;
        }
        Ok(())
    }

    fn record(&mut self, entry: (usize, usize), twist: PExponent, class: &LevelSeq<LaurentPoly>) {
        self.trace.push(EntryTrace {
            entry,
            twist,
            class: UnipClass::from_seq(class, twist).ok(),
        });
    }

    /// Number of levels to materialize, and whether that is all of them.
    fn extent(&self) -> (usize, bool) {
        let mut h = self.settle;
        let mut finite = true;
        for (a, row) in self.psi.iter().enumerate() {
            for (c, s) in row.iter().enumerate() {
                h = h.max(s.head_len());
                if a != c && !s.tail_is_zero() {
                    finite = false;
                }
            }
        }
        for row in &self.out {
            for s in row {
                h = h.max(s.head_len());
            }
        }
        if finite {
            (h + 1, true)
        } else {
            let deep = representable_depth(self.p, self.precision);
            (h.max(self.max_depth.min(deep)), false)
        }
    }

    fn witness(&self, depth: usize, group: Group) -> Result<GaugeWitness<E>> {
        let mut matrices = Vec::with_capacity(depth + 1);
        let one = E::zero_in(self.p, self.ring).one_like();
        for n in 0..=depth {
            let mut m: Matrix<E> = Vec::with_capacity(self.r);
            for row in &self.psi {
                let mut out = Vec::with_capacity(self.r);
                for (c, s) in row.iter().enumerate() {
                    let gc = self.g.get(n).map_or(&one, |g| &g[c]);
                    out.push(s.value(n, self.precision)?.mul(gc));
                }
                m.push(out);
            }
            matrices.push(m);
        }
        Ok(GaugeWitness {
            p: self.p,
            ring: self.ring,
            group,
            matrices,
        })
    }

    fn diagonal_tower(&self) -> Tower<E> {
        Tower {
            p: self.p,
            ring: self.ring,
            group: Group::D,
            twist: self.twist.clone(),
            matrices: Vec::new(),
            tail: Tail::DiagonalTwist,
        }
    }

    /// The recorded entries as a tower over `k[t^{±1}]`.
    fn output_tower(&self) -> Result<Tower<LaurentPoly>> {
        let (p, r) = (self.p, self.r);
        let h = self.out.iter().flatten().map(|s| s.head_len()).max().unwrap_or(0);
        let mut rules = matrix::zero::<LaurentPoly>(p, Ring::Gm, r);
        let mut seqs = vec![vec![LevelSeq::zero(p, Ring::Gm); r]; r];
        for i in 0..r {
            for j in i + 1..r {
                let s = self.out[i][j].extend_head(h, self.precision)?;
                if s.period() != 1 {
                    return Err(Error::UnsupportedTail(format!(
                        "entry ({i},{j}) has a tail of period {}",
                        s.period()
                    )));
                }
                rules[i][j] = s.cycle[0].clone();
                seqs[i][j] = s;
            }
        }
        let mut matrices = Vec::with_capacity(h);
        for n in 0..h {
            let mut m = matrix::zero::<LaurentPoly>(p, Ring::Gm, r);
            for j in 0..r {
                let c = digit_exponent(&self.twist[j], p, n)?;
                m[j][j] = LaurentPoly::monomial(p, 1, c);
                for i in 0..j {
                    m[i][j] = seqs[i][j].value(n, self.precision)?.shift(c);
                }
            }
            matrices.push(m);
        }
        let tail = if rules.iter().flatten().all(|x| x.is_zero()) {
            Tail::DiagonalTwist
        } else {
            Tail::SelfSimilar { unipotent: rules }
        };
        Tower::new(p, Ring::Gm, Group::B, self.twist.clone(), matrices, tail)
    }
}

fn witness_group(g: Group) -> Group {
    if g == Group::GL {
        Group::GL
    } else {
        Group::B
    }
}

fn verify_extended<E: Coeff>(t: &Tower<E>, t2: &Tower<E>, psi: &GaugeWitness<E>, precision: i64) -> Result<VerifyReport> {
    let d = psi.depth();
    verify_witness_report(&t.extended(d)?, &t2.extended(d)?, psi, precision)
}

/// Decides whether a triangular tower is gauge equivalent to the direct sum
/// of its diagonal rank-one pieces, over the tower's own ring.
pub fn is_diagonal_split<E: Coeff>(t: &Tower<E>, max_depth: usize, precision: i64) -> Result<SplitOutcome<E>> {
    let targets = diagonal_exponents(t)?;
    let mut red = Reduction::prepare(t, &targets, max_depth, precision)?;
    for (i, j) in red.order() {
        let sh = red.shift_data(i, j)?;
        let a = red.engine_entry(i, j, &sh)?;
        let parts = red.parts(&a, sh.twist)?;
        red.record((i, j), sh.twist, &parts.class);
        let offending: Vec<(u64, i64)> = parts
            .class
            .cycle
            .iter()
            .flat_map(|rule| offending_terms(rule, red.ring))
            .collect();
        if !offending.is_empty() {
            return Ok(SplitOutcome::NotSplit(Certificate {
                entry: (i, j),
                twist: sh.twist,
                class: UnipClass::from_seq(&parts.class, sh.twist).ok(),
                criterion: criterion_name(red.ring),
                offending,
            }));
        }
        let z = red.absorb(&parts.z, &parts.class, sh.twist)?;
        let keep = LevelSeq::zero(red.p, Ring::Gm);
        red.apply(i, j, &sh, &keep, &z)?;
    }
    let (depth, finite) = red.extent();
    let witness = red.witness(depth, witness_group(t.group))?;
    let diagonal = red.diagonal_tower();
    let report = verify_extended(t, &diagonal, &witness, precision)?;
    Ok(SplitOutcome::Split(Box::new(SplitData {
        diagonal,
        witness,
        finite,
        trace: red.trace,
        report,
    })))
}

/// Result of `is_special`.
#[derive(Clone, Debug, Serialize)]
pub struct SpecialReport {
    pub special: bool,
    pub side: SpecialSide,
    /// Set when the tower is not triangular.
    pub reason: Option<String>,
    pub certificate: Option<Certificate>,
    pub trace: Vec<EntryTrace>,
    /// Levels of the splitting witness, as JSON.
    pub witness: Option<serde_json::Value>,
}

/// A triangular tower over `k[t^{±1}]` is special at a side when its
/// restriction there splits into rank-one pieces.
pub fn is_special(t: &Tower<LaurentPoly>, side: SpecialSide, max_depth: usize, precision: i64) -> Result<SpecialReport> {
    let mut report = SpecialReport {
        special: false,
        side,
        reason: None,
        certificate: None,
        trace: Vec::new(),
        witness: None,
    };
    if check_triangular(t).is_err() {
        report.reason = Some(format!("{:?} tower is not upper triangular", t.group));
        return Ok(report);
    }
    let local = restrict(t, side.side(), precision);
    match is_diagonal_split(&local, max_depth, precision)? {
        SplitOutcome::Split(data) => {
            report.special = true;
            report.trace = data.trace;
            report.witness = Some(serde_json::to_value(data.witness.to_repr()).map_err(|e| Error::Parse(e.to_string()))?);
        }
        SplitOutcome::NotSplit(cert) => report.certificate = Some(cert),
    }
    Ok(report)
}

/// A tower over `k[t^{±1}]` whose restriction to `k((t^{-1}))` splits.
#[derive(Clone, Debug)]
pub struct SpecialTower {
    pub tower: Tower<LaurentPoly>,
    pub entries: Vec<EntryTrace>,
    pub split: GaugeWitness<LocalSeries>,
}

impl SpecialTower {
    pub fn new(tower: Tower<LaurentPoly>, max_depth: usize, precision: i64) -> Result<Self> {
        if tower.ring != Ring::Gm {
            return Err(Error::ShapeMismatch("special towers live over k[t^±1]".into()));
        }
        check_triangular(&tower)?;
        let local = restrict(&tower, Side::AtInf, precision);
        match is_diagonal_split(&local, max_depth, precision)? {
            SplitOutcome::Split(data) => Ok(SpecialTower {
                tower,
                entries: data.trace,
                split: data.witness,
            }),
            SplitOutcome::NotSplit(_) => Err(Error::CriterionNotMet(Ring::DiscInf.name())),
        }
    }

    pub fn to_json(&self) -> Result<serde_json::Value> {
        let mut v = serde_json::to_value(self.tower.to_repr()).map_err(|e| Error::Parse(e.to_string()))?;
        let verdicts = serde_json::json!({
            "entries": self.entries,
            "split_witness": self.split.to_repr(),
        });
        v["verdicts"] = verdicts;
        Ok(v)
    }
}

#[derive(Clone, Debug)]
pub struct LiftResult {
    pub special: SpecialTower,
    /// Gauges the input onto the restriction of `special.tower`.
    pub witness: GaugeWitness<LocalSeries>,
    pub finite: bool,
    pub report: VerifyReport,
}

/// A special tower over `k[t^{±1}]` whose restriction to `k((t))` is
/// gauge equivalent to `l`.
pub fn lift_triangular(l: &Tower<LocalSeries>, max_depth: usize, precision: i64) -> Result<LiftResult> {
    if l.ring != Ring::Disc0 {
        return Err(Error::ShapeMismatch(format!("lift expects a tower over k((t)), got {}", l.ring.name())));
    }
    let targets = diagonal_exponents(l)?;
    let mut red = Reduction::prepare(l, &targets, max_depth, precision)?;
    for (i, j) in red.order() {
        let sh = red.shift_data(i, j)?;
        let a = red.engine_entry(i, j, &sh)?;
        let parts = red.parts(&a, sh.twist)?;
        red.record((i, j), sh.twist, &parts.class);
        let keep = negative_part(&parts.class);
        let rest = parts.class.sub(&keep, 0)?;
        let z = red.absorb(&parts.z, &rest, sh.twist)?;

        red.apply(i, j, &sh, &keep, &z)?;
    }
    let tower = red.output_tower()?;
    let (depth, finite) = red.extent();
    let witness = red.witness(depth, witness_group(l.group))?;
    let report = verify_extended(l, &restrict(&tower, Side::At0, EXACT), &witness, precision)?;
    let special = SpecialTower::new(tower, max_depth, precision)?;
    Ok(LiftResult {
        special,
        witness,
        finite,
        report,
    })
}

fn term_in_band(x: &LocalSeries, n: usize) -> bool {
    let top = x.precision();
    if top >= crate::series::EXACT {
        return false;
    }
    let q = pow_i64(x.p(), n as u32).unwrap_or(i64::MAX);
    let band = (top / 4).max(q);
    let sign = if x.ring() == Ring::DiscInf { -1 } else { 1 };
    x.known_terms().terms().any(|(e, _)| sign * e >= top.saturating_sub(band))
}

/// Reinterprets a local witness between the restrictions of two special
/// towers as a witness over `k[t^{±1}]`, checked exactly.
pub fn transfer_local_witness(
    e: &SpecialTower,
    e2: &SpecialTower,
    psi: &GaugeWitness<LocalSeries>,
) -> Result<GaugeWitness<LaurentPoly>> {
    let mut matrices: Vec<Matrix<LaurentPoly>> = Vec::with_capacity(psi.matrices.len());
    for (n, m) in psi.matrices.iter().enumerate() {
        let mut out = Vec::with_capacity(m.len());
        for (i, row) in m.iter().enumerate() {
            let mut r = Vec::with_capacity(row.len());
            for (j, x) in row.iter().enumerate() {
                if term_in_band(x, n) {
                    return Err(Error::NotLaurent(format!(
                        "level {n} entry ({i},{j}) has terms near precision {}",
                        x.precision()
                    )));
                }
                r.push(x.known_terms());
            }
            out.push(r);
        }
        matrices.push(out);
    }
    // terms past the window are recovered from ψ_n = σ'_n ψ_{n+1} σ_n^{-1}
    let top = matrices.len().saturating_sub(1);
    for n in (0..top).rev() {
        let s1 = matrix::inverse(&e.tower.level(n)?, crate::series::EXACT)?;
        let back = matrix::mul(&matrix::mul(&e2.tower.level(n)?, &matrices[n + 1]), &s1);
        for (i, row) in back.iter().enumerate() {
            for (j, x) in row.iter().enumerate() {
                let known = &psi.matrices[n][i][j];
                let local = LocalSeries::from_poly(x, known.side(), known.precision());
                if !local.agrees_with(known) {
                    return Err(Error::VerificationFailed(format!(
                        "level {n} entry ({i},{j}) disagrees with the relation"
                    )));
                }
            }
        }
        matrices[n] = back;
    }
    let global = GaugeWitness {
        p: psi.p,
        ring: Ring::Gm,
        group: psi.group,
        matrices,
    };
    let depth = global.depth().max(e.tower.settled_from()).max(e2.tower.settled_from()) + 2;
    let ok = verify_witness(&e.tower.extended(depth)?, &e2.tower.extended(depth)?, &global, crate::series::EXACT)?;
    if !ok {
        return Err(Error::VerificationFailed("transferred witness does not relate the towers".into()));
    }
    Ok(global)
}

#[derive(Clone, Debug)]
pub struct GlueResult {
    pub tower: Tower<LaurentPoly>,
    pub witness_disc0: GaugeWitness<LocalSeries>,
    pub witness_discinf: GaugeWitness<LocalSeries>,
    pub report_disc0: VerifyReport,
    pub report_discinf: VerifyReport,
}

/// A tower over `k[t^{±1}]` restricting to `a` at `0` and to `b` at `∞`.
pub fn glue_triangular(
    a: &Tower<LocalSeries>,
    b: &Tower<LocalSeries>,
    max_depth: usize,
    precision: i64,
) -> Result<GlueResult> {
    if a.ring != Ring::Disc0 || b.ring != Ring::DiscInf {
        return Err(Error::ShapeMismatch("glue expects towers over k((t)) and k((t^-1))".into()));
    }
    if a.p != b.p || a.rank() != b.rank() {
        return Err(Error::ShapeMismatch("towers differ in p or rank".into()));
    }
    let ca = diagonal_classes(a)?;
    let cb: Vec<Rank1Class> = diagonal_classes(b)?.iter().map(flip_side).collect();
    if ca != cb {
        return Err(Error::DiagonalMismatch(format!("{ca:?} vs {cb:?}")));
    }
    let ta = diagonal_exponents(a)?;
    let mut ra = Reduction::prepare(a, &ta, max_depth, precision)?;
    let mut rb = Reduction::prepare(b, &ra.twist, max_depth, precision)?;
    if ra.twist != rb.twist {
        return Err(Error::UnsupportedTail(format!(
            "twists {:?} and {:?} end differently",
            a.twist, b.twist
        )));
    }
    for (i, j) in ra.order() {
        let sa = ra.shift_data(i, j)?;
        let sb = rb.shift_data(i, j)?;
        let pa = ra.parts(&ra.engine_entry(i, j, &sa)?, sa.twist)?;
        let pb = rb.parts(&rb.engine_entry(i, j, &sb)?, sb.twist)?;
        ra.record((i, j), sa.twist, &pa.class);
        rb.record((i, j), sb.twist, &pb.class);
        let keep = negative_part(&pa.class).add(&nonnegative_part(&pb.class), 0)?;
        let za = ra.absorb(&pa.z, &pa.class.sub(&keep, 0)?, sa.twist)?;
        let zb = rb.absorb(&pb.z, &pb.class.sub(&keep, 0)?, sb.twist)?;
        ra.apply(i, j, &sa, &keep, &za)?;
        rb.apply(i, j, &sb, &keep, &zb)?;
    }
    let tower = ra.output_tower()?;
    let (da, _) = ra.extent();
    let (db, _) = rb.extent();
    let witness_disc0 = ra.witness(da, witness_group(a.group))?;
    let witness_discinf = rb.witness(db, witness_group(b.group))?;
    let report_disc0 = verify_extended(a, &restrict(&tower, Side::At0, EXACT), &witness_disc0, precision)?;
    let report_discinf = verify_extended(b, &restrict(&tower, Side::AtInf, EXACT), &witness_discinf, precision)?;
    Ok(GlueResult {
        tower,
        witness_disc0,
        witness_discinf,
        report_disc0,
        report_discinf,
    })
}

/// `O(α_1) ⊕ … ⊕ O(α_r)` plus strictly upper self-similar entries.
pub fn triangular_self_similar<E: Coeff>(
    p: u64,
    ring: Ring,
    alphas: &[PExponent],
    rules: Matrix<E>,
) -> Result<Tower<E>> {
    for a in alphas {
        a.validate(p)?;
    }
    let group = if alphas.iter().all(|a| a.is_zero()) { Group::U } else { Group::B };
    Tower::new(p, ring, group, alphas.to_vec(), Vec::new(), Tail::SelfSimilar { unipotent: rules })
}
