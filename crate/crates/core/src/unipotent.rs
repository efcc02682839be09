//! Twisted additive classes `(a_n)_n` with `a_n ∈ k[t^{±1}]^{p^n}` modulo
//! `a_n ~ a_n + y_n − t^{α_n p^n} y_{n+1}`.

use serde::{Deserialize, Serialize};

use crate::arith::{check_prime, PExponent};
use crate::error::{Error, Result};
use crate::seq::{local_exponents, LevelSeq};
use crate::series::{pow_i64, Coeff, LaurentPoly, LocalSeries, RawEntry, RawPoly, Ring};
use crate::tower::{digit_exponent, Violation, ViolationKind};

/// Iteration bound for the tail recursion; the state space is finite, so
/// hitting it indicates a bug rather than a hard input.
const STATE_LIMIT: usize = 1 << 16;

#[derive(Clone, Debug, PartialEq)]
pub enum UnipTail {
    Zero,
    /// `a_n = rule(t^{p^n})` for `n ≥ from`.
    SelfSimilar { from: usize, rule: LaurentPoly },
}

#[derive(Clone, Debug, PartialEq)]
pub struct UnipClass {
    pub p: u64,
    pub twist: PExponent,
    pub prefix: Vec<LaurentPoly>,
    pub tail: UnipTail,
}

fn violation(kind: ViolationKind, level: Option<usize>, detail: impl Into<String>) -> Error {
    Error::Validation(Violation::new(kind, level, None, detail))
}

/// Splits `f` into (terms failing `pred`, terms satisfying it).
fn partition(f: &LaurentPoly, pred: impl Fn(i64) -> bool) -> (LaurentPoly, LaurentPoly) {
    let p = f.p();
    let (yes, no): (Vec<_>, Vec<_>) = f.terms().map(|(e, c)| (e, c as i64)).partition(|(e, _)| pred(*e));
    (LaurentPoly::from_terms(p, no), LaurentPoly::from_terms(p, yes))
}

fn map_exponents(f: &LaurentPoly, g: impl Fn(i64) -> i64) -> LaurentPoly {
    LaurentPoly::from_terms(f.p(), f.terms().map(|(e, c)| (g(e), c as i64)))
}

impl UnipClass {
    pub fn zero(p: u64, twist: PExponent) -> Self {
        UnipClass {
            p,
            twist,
            prefix: Vec::new(),
            tail: UnipTail::Zero,
        }
    }

    pub fn self_similar(p: u64, twist: PExponent, prefix: Vec<LaurentPoly>, rule: LaurentPoly) -> Self {
        let from = prefix.len();
        UnipClass {
            p,
            twist,
            prefix,
            tail: UnipTail::SelfSimilar { from, rule },
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_prime(self.p).map_err(|_| violation(ViolationKind::Prime, None, format!("{} is not prime", self.p)))?;
        self.twist
            .validate(self.p)
            .map_err(|e| violation(ViolationKind::Twist, None, e.to_string()))?;
        for (n, a) in self.prefix.iter().enumerate() {
            if a.p() != self.p {
                return Err(violation(ViolationKind::Shape, Some(n), "coefficient field mismatch"));
            }
            if !a.level_member(n as u32) {
                return Err(violation(
                    ViolationKind::LevelMembership,
                    Some(n),
                    format!("a_{n} has exponents outside p^{n}Z"),
                ));
            }
        }
        if let UnipTail::SelfSimilar { from, rule } = &self.tail {
            if *from < self.prefix.len() {
                return Err(violation(
                    ViolationKind::Tail,
                    None,
                    format!("tail starts at {from} inside a prefix of length {}", self.prefix.len()),
                ));
            }
            if rule.p() != self.p {
                return Err(violation(ViolationKind::Shape, None, "coefficient field mismatch"));
            }
        }
        Ok(())
    }

    /// `a_n`.
    pub fn expand_level(&self, n: usize) -> Result<LaurentPoly> {
        if n < self.prefix.len() {
            return Ok(self.prefix[n].clone());
        }
        match &self.tail {
            UnipTail::SelfSimilar { from, rule } if n >= *from => {
                let q = pow_i64(self.p, n as u32).ok_or(Error::Overflow)?;
                rule.scale_exponents(q)
            }
            _ => Ok(LaurentPoly::zero(self.p)),
        }
    }

    pub fn to_seq(&self) -> LevelSeq<LaurentPoly> {
        let p = self.p;
        let mut head = self.prefix.clone();
        let rule = match &self.tail {
            UnipTail::Zero => LaurentPoly::zero(p),
            UnipTail::SelfSimilar { from, rule } => {
                head.resize(*from, LaurentPoly::zero(p));
                rule.clone()
            }
        };
        LevelSeq::self_similar(p, Ring::Gm, head, rule)
    }

    /// Inverse of [`UnipClass::to_seq`]; fails on genuinely periodic tails.
    pub fn from_seq(seq: &LevelSeq<LaurentPoly>, twist: PExponent) -> Result<Self> {
        let s = seq.compact(0)?;
        if s.period() != 1 {
            return Err(Error::UnsupportedTail(format!("tail has period {}", s.period())));
        }
        let rule = s.cycle[0].clone();
        let tail = if rule.is_zero() {
            UnipTail::Zero
        } else {
            UnipTail::SelfSimilar { from: s.head.len(), rule }
        };
        Ok(UnipClass {
            p: seq.p,
            twist,
            prefix: s.head,
            tail,
        })
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.p != other.p || self.twist != other.twist {
            return Err(Error::ShapeMismatch(format!(
                "classes over (p={}, α={}) and (p={}, α={})",
                self.p, self.twist, other.p, other.twist
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        Self::from_seq(&self.to_seq().add(&other.to_seq(), 0)?, self.twist)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        Self::from_seq(&self.to_seq().sub(&other.to_seq(), 0)?, self.twist)
    }

    pub fn neg(&self) -> Self {
        Self::from_seq(&self.to_seq().neg(), self.twist).expect("negation keeps the period")
    }

    pub fn tail_rule(&self) -> LaurentPoly {
        match &self.tail {
            UnipTail::Zero => LaurentPoly::zero(self.p),
            UnipTail::SelfSimilar { rule, .. } => rule.clone(),
        }
    }
}

// JSON

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum TailRepr {
    Zero,
    SelfSimilar { from: usize, terms: Vec<[i64; 2]> },
}

#[derive(Serialize, Deserialize)]
pub struct UnipClassRepr {
    p: u64,
    twist: PExponent,
    #[serde(default)]
    prefix: Vec<RawPoly>,
    tail: TailRepr,
}

impl UnipClass {
    pub fn to_repr(&self) -> UnipClassRepr {
        let tail = match &self.tail {
            UnipTail::Zero => TailRepr::Zero,
            UnipTail::SelfSimilar { from, rule } => TailRepr::SelfSimilar {
                from: *from,
                terms: rule.terms().map(|(e, c)| [c as i64, e]).collect(),
            },
        };
        let prefix = self
            .prefix
            .iter()
            .map(|a| RawPoly(a.terms().map(|(e, c)| [e, c as i64]).collect()))
            .collect();
        UnipClassRepr {
            p: self.p,
            twist: self.twist,
            prefix,
            tail,
        }
    }

    pub fn from_repr(r: UnipClassRepr) -> Result<Self> {
        let p = r.p;
        check_prime(p)?;
        let tail = match r.tail {
            TailRepr::Zero => UnipTail::Zero,
            TailRepr::SelfSimilar { from, terms } => {
                let mut seen = std::collections::BTreeSet::new();
                for [c, e] in &terms {
                    if c.rem_euclid(p as i64) == 0 {
                        return Err(Error::Parse(format!("tail term t^{e} has zero coefficient")));
                    }
                    if !seen.insert(*e) {
                        return Err(Error::Parse(format!("repeated tail exponent {e}")));
                    }
                }
                let rule = LaurentPoly::from_terms(p, terms.into_iter().map(|[c, e]| (e, c)));
                UnipTail::SelfSimilar { from, rule }
            }
        };
        let c = UnipClass {
            p,
            twist: r.twist,
            prefix: r.prefix.into_iter().map(|a| a.into_poly(p)).collect(),
            tail,
        };
        c.validate()?;
        Ok(c)
    }
}

impl Serialize for UnipClass {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_repr().serialize(s)
    }
}

/// `a_n = y_n + a'_n − t^{α_n p^n} y_{n+1}` relating a class to `a'`;
/// `a' = 0` for trivializations.
#[derive(Clone, Debug, PartialEq)]
pub struct AdditiveWitness<E> {
    pub seq: LevelSeq<E>,
    /// Local precision the rule values are materialized to; exact over `gm`.
    pub precision: i64,
}

impl<E: Coeff> AdditiveWitness<E> {
    pub fn level(&self, n: usize) -> Result<E> {
        self.seq.value(n, self.precision)
    }

    pub fn levels(&self, upto: usize) -> Result<Vec<E>> {
        (0..=upto).map(|n| self.level(n)).collect()
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let precision = self.precision.min(other.precision);
        Ok(AdditiveWitness {
            seq: self.seq.add(&other.seq, precision)?,
            precision,
        })
    }

    pub fn to_json(&self, upto: usize) -> Result<serde_json::Value> {
        let levels: Vec<RawEntry> = self.levels(upto)?.iter().map(|y| y.to_raw()).collect();
        Ok(serde_json::json!({
            "levels": levels,
            "rule": {
                "from": self.seq.head_len(),
                "cycle": self.seq.cycle.iter().map(|y| y.to_raw()).collect::<Vec<_>>(),
            },
        }))
    }
}

/// A normalized class together with the witness relating it to the input.
#[derive(Clone, Debug)]
pub struct Normalized {
    pub class: LevelSeq<LaurentPoly>,
    pub witness: LevelSeq<LaurentPoly>,
    /// First level from which both sequences follow their cycle.
    pub stable_from: usize,
}

/// Support normalization on a level sequence: afterwards
/// `supp(a'_n) ⊂ p^nZ ∖ (α_n p^n + p^{n+1}Z)`.
pub(crate) fn normalize_seq(a: &LevelSeq<LaurentPoly>, alpha: PExponent, max_depth: usize) -> Result<Normalized> {
    let p = a.p;
    let pi = p as i64;
    let (pre, cstar) = alpha.eventual_digit(p);
    let cstar = cstar as i64;
    let hd = a.head_len().max(pre);
    let a = a.extend_head(hd, 0)?;

    let mut class_head = Vec::with_capacity(hd);
    let mut w_head = vec![LaurentPoly::zero(p)];
    let mut carry = LaurentPoly::zero(p);
    for n in 0..hd {
        let d = digit_exponent(&alpha, p, n)?;
        let q = pow_i64(p, n as u32 + 1).ok_or(Error::Overflow)?;
        let v = a.head[n].add(&carry);
        let (allowed, forb) = partition(&v, |e| (e - d).rem_euclid(q) == 0);
        class_head.push(allowed);
        carry = forb.shift(-d);
        w_head.push(carry.neg());
    }
    // the carry is now in level hd; pass to unit coordinates
    let qh = pow_i64(p, hd as u32).ok_or(Error::Overflow)?;
    let mut c = map_exponents(&carry, |e| e / qh);
    w_head.pop();

    let l = a.period();
    let mut states: Vec<(usize, LaurentPoly)> = Vec::new();
    let mut allowed_rules = Vec::new();
    let mut w_rules = Vec::new();
    let mut phase = 0;
    let start = loop {
        if let Some(i) = states.iter().position(|(ph, x)| *ph == phase && *x == c) {
            break i;
        }
        if states.len() >= STATE_LIMIT {
            return Err(Error::NonStabilized { max_depth });
        }
        states.push((phase, c.clone()));
        let v = a.cycle[phase].add(&c);
        let (allowed, forb) = partition(&v, |e| (e - cstar).rem_euclid(pi) == 0);
        allowed_rules.push(allowed);
        w_rules.push(c.neg());
        c = map_exponents(&forb, |e| (e - cstar) / pi);
        phase = (phase + 1) % l;
    };
    let stable_from = hd + start;
    if stable_from > max_depth {
        return Err(Error::NonStabilized { max_depth });
    }
    let rules_to_head = |rules: &[LaurentPoly], head: &mut Vec<LaurentPoly>| -> Result<()> {
        for (k, r) in rules.iter().take(start).enumerate() {
            let q = pow_i64(p, (hd + k) as u32).ok_or(Error::Overflow)?;
            head.push(r.scale_exponents(q)?);
        }
        Ok(())
    };
    rules_to_head(&allowed_rules, &mut class_head)?;
    rules_to_head(&w_rules, &mut w_head)?;
    let class = LevelSeq {
        p,
        ring: Ring::Gm,
        head: class_head,
        cycle: allowed_rules[start..].to_vec(),
    };
    let witness = LevelSeq {
        p,
        ring: Ring::Gm,
        head: w_head,
        cycle: w_rules[start..].to_vec(),
    };
    Ok(Normalized {
        class: class.compact(0)?,
        witness: witness.compact(0)?,
        stable_from,
    })
}

/// `(c', w)` with `c'` satisfying the support condition at every level.
pub fn normalize_support(c: &UnipClass, max_depth: usize) -> Result<(UnipClass, AdditiveWitness<LaurentPoly>)> {
    c.validate()?;
    let nz = normalize_seq(&c.to_seq(), c.twist, max_depth)?;
    Ok((
        UnipClass::from_seq(&nz.class, c.twist)?,
        AdditiveWitness {
            seq: nz.witness,
            precision: crate::series::EXACT,
        },
    ))
}

/// True when every level of `c` obeys the support condition.
pub fn satisfies_support(c: &UnipClass, upto: usize) -> Result<bool> {
    let p = c.p;
    for n in 0..=upto {
        let d = digit_exponent(&c.twist, p, n)?;
        let q = pow_i64(p, n as u32 + 1).ok_or(Error::Overflow)?;
        let a = c.expand_level(n)?;
        if !a.level_member(n as u32) || a.terms().any(|(e, _)| (e - d).rem_euclid(q) == 0) {
            return Ok(false);
        }
    }
    Ok(true)
}

pub(crate) fn lift<E: Coeff>(f: &LaurentPoly, ring: Ring) -> E {
    E::zero_in(f.p(), ring).from_laurent_like(f)
}

pub(crate) fn lift_seq<E: Coeff>(s: &LevelSeq<LaurentPoly>, ring: Ring) -> LevelSeq<E> {
    LevelSeq {
        p: s.p,
        ring,
        head: s.head.iter().map(|f| lift(f, ring)).collect(),
        cycle: s.cycle.iter().map(|f| lift(f, ring)).collect(),
    }
}

fn ring_label(ring: Ring) -> &'static str {
    ring.name()
}

/// Terms of the tail rule that violate the triviality criterion of `ring`.
pub(crate) fn offending_terms(rule: &LaurentPoly, ring: Ring) -> Vec<(u64, i64)> {
    rule.terms()
        .filter(|(e, _)| match ring {
            Ring::Gm => true,
            Ring::Disc0 => *e < 0,
            Ring::DiscInf => *e >= 0,
        })
        .map(|(e, c)| (c, e))
        .collect()
}

/// `y_m = Σ_{n≥m} a_n t^{α_m p^m + … + α_{n−1} p^{n−1}}`, so that
/// `a_n = y_n − t^{α_n p^n} y_{n+1}`.
///
/// Over `gm` the tail must vanish; over a disc the tail sum must converge
/// and is computed to local precision `precision`.
pub fn ysum_seq<E: Coeff>(a: &LevelSeq<E>, alpha: PExponent, precision: i64) -> Result<LevelSeq<E>> {
    let p = a.p;
    let ring = a.ring;
    let (pre, cstar) = alpha.eventual_digit(p);
    let cstar = cstar as i64;
    let h = a.head_len().max(pre);
    let sign: i64 = if ring == Ring::DiscInf { -1 } else { 1 };
    let digits: Vec<i64> = (0..h).map(|n| digit_exponent(&alpha, p, n)).collect::<Result<_>>()?;
    // rule precision; y_h = Y(t^{p^h}) then covers the head shifts
    let tail_cap = precision;
    let a = a.extend_head(h, tail_cap)?;

    let zero = E::zero_in(p, ring);
    let cycle = if a.tail_is_zero() {
        a.cycle.clone()
    } else {
        if ring == Ring::Gm {
            return Err(Error::CriterionNotMet("gm"));
        }
        let u_min = a
            .cycle
            .iter()
            .flat_map(|r| local_exponents(r))
            .min()
            .unwrap_or(0) as i128;
        let l = a.period();
        let mut out = Vec::with_capacity(l);
        for phase in 0..l {
            let mut acc = zero.truncated(tail_cap);
            let mut k = 0usize;
            loop {
                let qk = pow_i64(p, k as u32).map(|q| q as i128);
                let s = qk.map(|q| cstar as i128 * (q - 1) / (p as i128 - 1));
                let (qk, s) = match (qk, s) {
                    (Some(q), Some(s)) => (q, s),
                    _ => return Err(Error::CriterionNotMet(ring_label(ring))),
                };
                let lower = u_min * qk + sign as i128 * s;
                if lower >= tail_cap as i128 {
                    break;
                }
                if k > 62 {
                    return Err(Error::CriterionNotMet(ring_label(ring)));
                }
                let s = s as i64;
                let rule = &a.cycle[(phase + k) % l];
                let want = tail_cap.saturating_sub(sign * s);
                let rel = (want + qk as i64 - 1).div_euclid(qk as i64).max(1);
                let term = crate::seq::scale_rule(rule, p, k, rel)?.shift(s);
                acc = acc.add(&term);
                k += 1;
            }
            out.push(acc);
        }
        out
    };
    let tail = LevelSeq {
        p,
        ring,
        head: Vec::new(),
        cycle: cycle.clone(),
    };
    // y_h from the tail, then y_m = a_m + t^{α_m p^m} y_{m+1} downwards
    let mut y_next = if h == 0 {
        None
    } else {
        let l = tail.period();
        Some(crate::seq::scale_rule(&tail.cycle[0 % l], p, h, tail_cap)?)
    };
    let mut head = vec![zero.clone(); h];
    for m in (0..h).rev() {
        let ym = a.head[m].add(&y_next.take().unwrap().shift(digits[m]));
        head[m] = ym.clone();
        y_next = Some(ym);
    }
    Ok(LevelSeq { p, ring, head, cycle })
}

/// Outcome of a triviality decision.
#[derive(Clone, Debug)]
pub enum Decision<E> {
    Trivial {
        normalized: UnipClass,
        witness: AdditiveWitness<E>,
    },
    Nontrivial {
        normalized: UnipClass,
        criterion: &'static str,
        /// Offending tail terms as `(c, e)`.
        offending: Vec<(u64, i64)>,
    },
}

impl<E> Decision<E> {
    pub fn is_trivial(&self) -> bool {
        matches!(self, Decision::Trivial { .. })
    }
}

fn require_normal_twist(c: &UnipClass) -> Result<()> {
    if c.twist != c.twist.class_mod_z() {
        return Err(Error::InvalidExponent {
            num: c.twist.num(),
            den: c.twist.den(),
            p: c.p,
            reason: "twist must be the class-mod-Z representative in [0, 1)",
        });
    }
    Ok(())
}

pub(crate) fn criterion_name(ring: Ring) -> &'static str {
    match ring {
        Ring::Gm => "tail must vanish",
        Ring::Disc0 => "tail exponents must be >= 0",
        Ring::DiscInf => "tail exponents must be <= -1",
    }
}

/// Decides triviality over `ring`, with coefficients `E` matching the ring
/// (`LaurentPoly` for `gm`, `LocalSeries` for the discs).
pub fn decide_trivial_in<E: Coeff>(c: &UnipClass, ring: Ring, max_depth: usize, precision: i64) -> Result<Decision<E>> {
    c.validate()?;
    require_normal_twist(c)?;
    let nz = normalize_seq(&c.to_seq(), c.twist, max_depth)?;
    let normalized = UnipClass::from_seq(&nz.class, c.twist)?;
    let offending = offending_terms(&normalized.tail_rule(), ring);
    if !offending.is_empty() {
        return Ok(Decision::Nontrivial {
            normalized,
            criterion: criterion_name(ring),
            offending,
        });
    }
    let ys = ysum_seq(&lift_seq::<E>(&nz.class, ring), c.twist, precision)?;
    let w = lift_seq::<E>(&nz.witness, ring);
    let prec = if ring == Ring::Gm { crate::series::EXACT } else { precision };
    Ok(Decision::Trivial {
        normalized,
        witness: AdditiveWitness {
            seq: w.add(&ys, prec)?,
            precision: prec,
        },
    })
}

/// Ring-erased decision.
#[derive(Clone, Debug)]
pub enum AnyDecision {
    Gm(Decision<LaurentPoly>),
    Local(Decision<LocalSeries>),
}

impl AnyDecision {
    pub fn is_trivial(&self) -> bool {
        match self {
            AnyDecision::Gm(d) => d.is_trivial(),
            AnyDecision::Local(d) => d.is_trivial(),
        }
    }

    pub fn to_json(&self, upto: usize) -> Result<serde_json::Value> {
        fn go<E: Coeff>(d: &Decision<E>, upto: usize) -> Result<serde_json::Value> {
            Ok(match d {
                Decision::Trivial { normalized, witness } => serde_json::json!({
                    "trivial": true,
                    "normalized": normalized,
                    "witness": witness.to_json(upto)?,
                }),
                Decision::Nontrivial {
                    normalized,
                    criterion,
                    offending,
                } => serde_json::json!({
                    "trivial": false,
                    "normalized": normalized,
                    "criterion": criterion,
                    "offending": offending.iter().map(|(c, e)| [*c as i64, *e]).collect::<Vec<_>>(),
                }),
            })
        }
        match self {
            AnyDecision::Gm(d) => go(d, upto),
            AnyDecision::Local(d) => go(d, upto),
        }
    }
}

pub fn decide_trivial(c: &UnipClass, ring: Ring, max_depth: usize, precision: i64) -> Result<AnyDecision> {
    Ok(match ring {
        Ring::Gm => AnyDecision::Gm(decide_trivial_in(c, ring, max_depth, precision)?),
        _ => AnyDecision::Local(decide_trivial_in(c, ring, max_depth, precision)?),
    })
}

/// The y-sum witness for a class already known to be trivial over `ring`.
pub fn witness_ysum<E: Coeff>(c: &UnipClass, ring: Ring, precision: i64) -> Result<AdditiveWitness<E>> {
    c.validate()?;
    let ys = ysum_seq(&lift_seq::<E>(&c.to_seq(), ring), c.twist, precision)?;
    let prec = if ring == Ring::Gm { crate::series::EXACT } else { precision };
    Ok(AdditiveWitness { seq: ys, precision: prec })
}

/// Result of [`verify_additive`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdditiveReport {
    pub ok: bool,
    pub first_failure: Option<usize>,
    /// Smallest comparison window over disc levels (`EXACT` over `gm`).
    pub min_window: i64,
}

/// Checks `a_n = y_n + a'_n − t^{α_n p^n} y_{n+1}` for `n ≤ upto`, on the
/// window `min(precision, known precision)` over discs.
pub fn verify_additive<E: Coeff>(
    a: &UnipClass,
    a2: &UnipClass,
    w: &AdditiveWitness<E>,
    upto: usize,
    precision: i64,
) -> Result<AdditiveReport> {
    a.check_compatible(a2)?;
    let ring = w.seq.ring;
    let p = a.p;
    let mut min_window = crate::series::EXACT;
    let mut y_n = w.level(0)?;
    for n in 0..=upto {
        let d = digit_exponent(&a.twist, p, n)?;
        let y_next = w.level(n + 1)?;
        let lhs: E = lift(&a.expand_level(n)?, ring);
        let rhs = y_n.add(&lift::<E>(&a2.expand_level(n)?, ring)).sub(&y_next.shift(d));
        let diff = lhs.sub(&rhs);
        let window = if ring == Ring::Gm { crate::series::EXACT } else { precision.min(diff.precision()) };
        min_window = min_window.min(window);
        let bad = local_exponents(&diff).into_iter().any(|u| u < window);
        if bad {
            return Ok(AdditiveReport {
                ok: false,
                first_failure: Some(n),
                min_window,
            });
        }
        y_n = y_next;
    }
    Ok(AdditiveReport {
        ok: true,
        first_failure: None,
        min_window,
    })
}

/// `(c^{≥0}, c^{<0})`, split termwise by exponent sign.
pub fn split_class(c: &UnipClass) -> (UnipClass, UnipClass) {
    let part = |keep_neg: bool| {
        let pick = |f: &LaurentPoly| {
            let (nonneg, neg) = f.split_sign();
            if keep_neg {
                neg
            } else {
                nonneg
            }
        };
        let seq = c.to_seq().map(pick);
        UnipClass::from_seq(&seq, c.twist).expect("sign split keeps the period")
    };
    (part(false), part(true))
}

/// A class over `gm` restricting to given classes at both discs.
#[derive(Clone, Debug)]
pub struct Glued {
    pub class: UnipClass,
    /// Trivializes `class − a` over `k((t))`.
    pub witness_disc0: AdditiveWitness<LocalSeries>,
    /// Trivializes `class − b` over `k((t^{-1}))`.
    pub witness_discinf: AdditiveWitness<LocalSeries>,
}

pub fn glue_rank2(a: &UnipClass, b: &UnipClass, max_depth: usize, precision: i64) -> Result<Glued> {
    a.check_compatible(b)?;
    a.validate()?;
    b.validate()?;
    require_normal_twist(a)?;
    let na = normalize_seq(&a.to_seq(), a.twist, max_depth)?;
    let nb = normalize_seq(&b.to_seq(), b.twist, max_depth)?;
    let neg = na.class.map(|f| f.split_sign().1);
    let nonneg = nb.class.map(|f| f.split_sign().0);
    let class = UnipClass::from_seq(&neg.add(&nonneg, 0)?, a.twist)?;
    let trivialize = |other: &UnipClass, ring: Ring| -> Result<AdditiveWitness<LocalSeries>> {
        match decide_trivial_in::<LocalSeries>(&class.sub(other)?, ring, max_depth, precision)? {
            Decision::Trivial { witness, .. } => Ok(witness),
            Decision::Nontrivial { .. } => Err(Error::VerificationFailed(format!(
                "glued class does not restrict to the input over {}",
                ring.name()
            ))),
        }
    };
    let witness_disc0 = trivialize(a, Ring::Disc0)?;
    let witness_discinf = trivialize(b, Ring::DiscInf)?;
    Ok(Glued {
        class,
        witness_disc0,
        witness_discinf,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::EXACT;

    fn poly(t: &[(i64, i64)]) -> LaurentPoly {
        LaurentPoly::from_terms(3, t.iter().copied())
    }

    fn zero_twist() -> PExponent {
        PExponent::int(0)
    }

    fn as_class() -> UnipClass {
        UnipClass::self_similar(3, zero_twist(), vec![], poly(&[(-1, 1)]))
    }

    fn mirror() -> UnipClass {
        UnipClass::self_similar(3, zero_twist(), vec![], poly(&[(1, 1)]))
    }

    fn t3() -> UnipClass {
        UnipClass {
            p: 3,
            twist: zero_twist(),
            prefix: vec![poly(&[(3, 1)])],
            tail: UnipTail::Zero,
        }
    }

    #[test]
    fn expand_examples() {
        assert_eq!(as_class().expand_level(2).unwrap(), poly(&[(-9, 1)]));
        assert_eq!(t3().expand_level(0).unwrap(), poly(&[(3, 1)]));
        assert!(t3().expand_level(5).unwrap().is_zero());
    }

    #[test]
    fn normalize_t3() {
        assert!(matches!(normalize_support(&t3(), 1), Err(Error::NonStabilized { max_depth: 1 })));
        let (c, w) = normalize_support(&t3(), 2).unwrap();
        assert_eq!(c.prefix, vec![poly(&[]), poly(&[(3, 1)])]);
        assert_eq!(c.tail, UnipTail::Zero);
        let ws = w.levels(2).unwrap();
        assert_eq!(ws, vec![poly(&[]), poly(&[(3, -1)]), poly(&[])]);
        assert!(verify_additive(&t3(), &c, &w, 12, EXACT).unwrap().ok);
        assert!(satisfies_support(&c, 12).unwrap());
    }

    #[test]
    fn normalize_leaves_admissible_classes() {
        let c = UnipClass {
            p: 3,
            twist: zero_twist(),
            prefix: vec![poly(&[(-1, 1), (1, 1)])],
            tail: UnipTail::Zero,
        };
        let (c2, w) = normalize_support(&c, 32).unwrap();
        assert_eq!(c2, c);
        assert!(w.seq.is_zero());
        let (a2, w) = normalize_support(&as_class(), 32).unwrap();
        assert_eq!(a2, as_class());
        assert!(w.seq.is_zero());
    }

    #[test]
    fn constant_tail_carries_periodically() {
        let c = UnipClass::self_similar(3, zero_twist(), vec![], poly(&[(0, 1), (2, 1)]));
        let (c2, w) = normalize_support(&c, 32).unwrap();
        assert_eq!(c2.tail_rule(), poly(&[(2, 1)]));
        assert_eq!(w.seq.period(), 3);
        assert!(verify_additive(&c, &c2, &w, 12, EXACT).unwrap().ok);
    }

    #[test]
    fn as_verdicts() {
        let d0 = decide_trivial(&as_class(), Ring::Disc0, 32, 40).unwrap();
        assert!(!d0.is_trivial());
        let gm = decide_trivial(&as_class(), Ring::Gm, 32, 40).unwrap();
        assert!(!gm.is_trivial());
        let di = decide_trivial_in::<LocalSeries>(&as_class(), Ring::DiscInf, 32, 40).unwrap();
        let Decision::Trivial { witness, .. } = di else {
            panic!("AS class should be trivial at infinity")
        };
        let y0 = witness.level(0).unwrap();
        assert_eq!(y0.known_terms(), poly(&[(-1, 1), (-3, 1), (-9, 1), (-27, 1)]));
        let zero = UnipClass::zero(3, zero_twist());
        let r = verify_additive(&as_class(), &zero, &witness, 32, 40).unwrap();
        assert!(r.ok);
        assert_eq!(r.min_window, 40);
    }

    #[test]
    fn mirror_verdicts() {
        let m = mirror();
        assert!(decide_trivial(&m, Ring::Disc0, 32, 40).unwrap().is_trivial());
        assert!(!decide_trivial(&m, Ring::DiscInf, 32, 40).unwrap().is_trivial());
        assert!(!decide_trivial(&m, Ring::Gm, 32, 40).unwrap().is_trivial());
    }

    #[test]
    fn finite_prefix_trivial_over_gm() {
        let Decision::Trivial { witness, .. } = decide_trivial_in::<LaurentPoly>(&t3(), Ring::Gm, 32, 40).unwrap() else {
            panic!()
        };
        assert_eq!(witness.level(0).unwrap(), poly(&[(3, 1)]));
        assert!(witness.level(1).unwrap().is_zero());
        let direct = witness_ysum::<LaurentPoly>(&t3(), Ring::Gm, 40).unwrap();
        assert_eq!(direct.level(0).unwrap(), poly(&[(3, 1)]));
        assert!(direct.level(3).unwrap().is_zero());
    }

    #[test]
    fn nonnormal_twist_rejected() {
        let c = UnipClass::self_similar(3, PExponent::int(-1), vec![], poly(&[(-1, 1)]));
        assert!(matches!(
            decide_trivial(&c, Ring::Gm, 32, 40),
            Err(Error::InvalidExponent { .. })
        ));
    }

    #[test]
    fn split_examples() {
        let c = UnipClass {
            p: 3,
            twist: zero_twist(),
            prefix: vec![poly(&[(-1, 1), (1, 1)])],
            tail: UnipTail::Zero,
        };
        let (pos, neg) = split_class(&c);
        assert_eq!(pos.prefix, vec![poly(&[(1, 1)])]);
        assert_eq!(neg.prefix, vec![poly(&[(-1, 1)])]);
        let both = UnipClass::self_similar(3, zero_twist(), vec![], poly(&[(-1, 1), (1, 1)]));
        let (pos, neg) = split_class(&both);
        assert_eq!(pos, mirror());
        assert_eq!(neg, as_class());
    }

    #[test]
    fn glue_examples() {
        let g = glue_rank2(&as_class(), &mirror(), 32, 40).unwrap();
        assert_eq!(g.class.tail_rule(), poly(&[(-1, 1), (1, 1)]));
        let zero = UnipClass::zero(3, zero_twist());
        assert_eq!(glue_rank2(&zero, &zero, 32, 40).unwrap().class, zero);
        assert_eq!(glue_rank2(&as_class(), &zero, 32, 40).unwrap().class, as_class());
    }

    #[test]
    fn json_round_trip() {
        let j = serde_json::to_value(as_class()).unwrap();
        assert_eq!(
            j,
            serde_json::json!({"p": 3, "twist": {"num": 0, "den": 1}, "prefix": [],
                "tail": {"kind": "self_similar", "from": 0, "terms": [[1, -1]]}})
        );
        let back = UnipClass::from_repr(serde_json::from_value(j).unwrap()).unwrap();
        assert_eq!(back, as_class());
    }
}
