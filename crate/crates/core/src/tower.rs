//! Frobenius-descent cocycle towers and the gauge action on them.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::arith::{check_prime, PExponent};
use crate::error::{Error, Result};
use crate::matrix::{self, Matrix};
use crate::series::{pow_i64, Coeff, LaurentPoly, LocalSeries, RawEntry, Ring, Side};

pub const DEFAULT_PRECISION: i64 = 40;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Group {
    GL,
    B,
    U,
    D,
}

/// Levels past the explicit matrices.
///
/// `DiagonalTwist`: `σ_n = diag(t^{α_{i,n} p^n})` with `α_{i,n}` the digits
/// of the twist. `SelfSimilar`: `σ_n = (I + V(t^{p^n})) · diag(t^{α_{i,n} p^n})`
/// for a strictly upper triangular `V`.
#[derive(Clone, Debug, PartialEq)]
pub enum Tail<E> {
    DiagonalTwist,
    SelfSimilar { unipotent: Matrix<E> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tower<E> {
    pub p: u64,
    pub ring: Ring,
    pub group: Group,
    pub twist: Vec<PExponent>,
    pub matrices: Vec<Matrix<E>>,
    pub tail: Tail<E>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    Prime,
    Shape,
    Twist,
    LevelMembership,
    Group,
    NotUnit,
    Ring,
    Tail,
}

/// First failing invariant of a tower, with its locus.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub level: Option<usize>,
    pub entry: Option<(usize, usize)>,
    pub detail: String,
}

impl Violation {
    pub(crate) fn new(kind: ViolationKind, level: Option<usize>, entry: Option<(usize, usize)>, detail: impl Into<String>) -> Self {
        Violation {
            kind,
            level,
            entry,
            detail: detail.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.kind)?;
        if let Some(n) = self.level {
            write!(f, " at level {n}")?;
        }
        if let Some((i, j)) = self.entry {
            write!(f, " entry ({i},{j})")?;
        }
        write!(f, ": {}", self.detail)
    }
}

pub(crate) fn monomial<E: Coeff>(p: u64, ring: Ring, exp: i64) -> E {
    E::zero_in(p, ring).monomial_like(1, exp)
}

/// `digit(α, n) · p^n`.
pub(crate) fn digit_exponent(alpha: &PExponent, p: u64, n: usize) -> Result<i64> {
    let d = alpha.digit(p, n) as i64;
    if d == 0 {
        return Ok(0);
    }
    let q = pow_i64(p, n as u32).ok_or(Error::Overflow)?;
    d.checked_mul(q).ok_or(Error::Overflow)
}

fn is_level_unit<E: Coeff>(x: &E, n: usize) -> bool {
    x.unit_parts(n as u32).is_ok()
}

/// Checks that `m` is a valid level-`n` element of `group`.
pub fn check_group_matrix<E: Coeff>(m: &Matrix<E>, group: Group, n: usize) -> std::result::Result<(), Violation> {
    use ViolationKind as K;
    let r = m.len();
    for (i, row) in m.iter().enumerate() {
        if row.len() != r {
            return Err(Violation::new(K::Shape, Some(n), None, "matrix is not square"));
        }
        for (j, x) in row.iter().enumerate() {
            if !x.level_member(n as u32) {
                return Err(Violation::new(
                    K::LevelMembership,
                    Some(n),
                    Some((i, j)),
                    format!("{x:?} has support outside p^{n}Z"),
                ));
            }
            let off_ok = match group {
                Group::GL => true,
                Group::B | Group::U => j >= i || x.is_zero(),
                Group::D => j == i || x.is_zero(),
            };
            if !off_ok {
                return Err(Violation::new(K::Group, Some(n), Some((i, j)), format!("nonzero entry {x:?} outside the {group:?} shape")));
            }
        }
    }
    match group {
        Group::GL => {
            let d = matrix::det(m);
            if !is_level_unit(&d, n) {
                return Err(Violation::new(K::NotUnit, Some(n), None, format!("determinant {d:?} is not a unit")));
            }
        }
        Group::U => {
            for (i, row) in m.iter().enumerate() {
                if row[i] != row[i].one_like() {
                    return Err(Violation::new(K::Group, Some(n), Some((i, i)), "diagonal entry is not 1"));
                }
            }
        }
        Group::B | Group::D => {
            for (i, row) in m.iter().enumerate() {
                if !is_level_unit(&row[i], n) {
                    return Err(Violation::new(
                        K::NotUnit,
                        Some(n),
                        Some((i, i)),
                        format!("diagonal entry {:?} is not a unit monomial of level {n}", row[i]),
                    ));
                }
            }
        }
    }
    Ok(())
}

impl<E: Coeff> Tower<E> {
    /// Builds and validates.
    pub fn new(
        p: u64,
        ring: Ring,
        group: Group,
        twist: Vec<PExponent>,
        matrices: Vec<Matrix<E>>,
        tail: Tail<E>,
    ) -> Result<Self> {
        let t = Tower {
            p,
            ring,
            group,
            twist,
            matrices,
            tail,
        };
        t.validate().map_err(Error::Validation)?;
        Ok(t)
    }

    pub fn rank(&self) -> usize {
        self.twist.len()
    }

    pub fn depth(&self) -> usize {
        self.matrices.len()
    }

    pub fn zero(&self) -> E {
        E::zero_in(self.p, self.ring)
    }

    pub fn monomial(&self, exp: i64) -> E {
        monomial(self.p, self.ring, exp)
    }

    /// `σ_n`, from the explicit matrices or the tail convention.
    pub fn level(&self, n: usize) -> Result<Matrix<E>> {
        if n < self.depth() {
            return Ok(self.matrices[n].clone());
        }
        self.tail_level(n)
    }

    /// The tail formula evaluated at level `n`, ignoring explicit matrices.
    pub fn tail_level(&self, n: usize) -> Result<Matrix<E>> {
        let mut diag = Vec::with_capacity(self.rank());
        for a in &self.twist {
            diag.push(self.monomial(digit_exponent(a, self.p, n)?));
        }
        let d = matrix::diagonal(self.p, self.ring, &diag);
        match &self.tail {
            Tail::DiagonalTwist => Ok(d),
            Tail::SelfSimilar { unipotent } => {
                let q = pow_i64(self.p, n as u32).ok_or(Error::Overflow)?;
                let v = matrix::scale_exponents(unipotent, q)?;
                let u = matrix::add(&matrix::identity(self.p, self.ring, self.rank()), &v);
                Ok(matrix::mul(&u, &d))
            }
        }
    }

    /// Same tower with levels below `depth` stored explicitly.
    pub fn extended(&self, depth: usize) -> Result<Self> {
        let mut out = self.clone();
        for n in self.depth()..depth {
            out.matrices.push(self.level(n)?);
        }
        Ok(out)
    }

    /// Level from which the tail is self-similar: twist digits constant.
    pub fn settled_from(&self) -> usize {
        self.twist
            .iter()
            .map(|a| a.eventual_digit(self.p).0)
            .max()
            .unwrap_or(0)
            .max(self.depth())
    }

    pub fn validate(&self) -> std::result::Result<(), Violation> {
        use ViolationKind as K;
        if check_prime(self.p).is_err() {
            return Err(Violation::new(K::Prime, None, None, format!("{} is not a supported prime", self.p)));
        }
        let r = self.rank();
        if r == 0 {
            return Err(Violation::new(K::Shape, None, None, "rank 0"));
        }
        for (i, a) in self.twist.iter().enumerate() {
            if let Err(e) = a.validate(self.p) {
                return Err(Violation::new(K::Twist, None, Some((i, i)), e.to_string()));
            }
            if self.group == Group::U {
                let (n0, d) = a.eventual_digit(self.p);
                if d != 0 || n0 > self.depth() {
                    return Err(Violation::new(
                        K::Twist,
                        None,
                        Some((i, i)),
                        "a unipotent tower needs twist digits 0 past the explicit levels",
                    ));
                }
            }
        }
        for (n, m) in self.matrices.iter().enumerate() {
            if m.len() != r {
                return Err(Violation::new(K::Shape, Some(n), None, format!("expected {r} rows")));
            }
            for (i, row) in m.iter().enumerate() {
                for (j, x) in row.iter().enumerate() {
                    if x.ring() != self.ring {
                        return Err(Violation::new(K::Ring, Some(n), Some((i, j)), "entry over the wrong ring"));
                    }
                }
            }
            check_group_matrix(m, self.group, n)?;
        }
        if let Tail::SelfSimilar { unipotent } = &self.tail {
            if unipotent.len() != r || unipotent.iter().any(|row| row.len() != r) {
                return Err(Violation::new(K::Tail, None, None, "tail matrix has the wrong shape"));
            }
            for (i, row) in unipotent.iter().enumerate() {
                for (j, x) in row.iter().enumerate() {
                    if x.ring() != self.ring {
                        return Err(Violation::new(K::Ring, None, Some((i, j)), "tail entry over the wrong ring"));
                    }
                    let allowed = j > i && self.group != Group::D;
                    if !allowed && !x.is_zero() {
                        return Err(Violation::new(K::Tail, None, Some((i, j)), "tail matrix must be strictly upper triangular"));
                    }
                }
            }
        }
        Ok(())
    }
}

/// A gauge sequence `ψ_0, …, ψ_N`; levels past `N` act as the identity.
#[derive(Clone, Debug, PartialEq)]
pub struct GaugeWitness<E> {
    pub p: u64,
    pub ring: Ring,
    pub group: Group,
    pub matrices: Vec<Matrix<E>>,
}

impl<E: Coeff> GaugeWitness<E> {
    pub fn identity(p: u64, ring: Ring, group: Group, rank: usize, depth: usize) -> Self {
        GaugeWitness {
            p,
            ring,
            group,
            matrices: vec![matrix::identity(p, ring, rank); depth + 1],
        }
    }

    pub fn depth(&self) -> usize {
        self.matrices.len().saturating_sub(1)
    }

    pub fn rank(&self) -> usize {
        self.matrices.first().map_or(0, |m| m.len())
    }

    /// `ψ_n`, the identity beyond the stored levels.
    pub fn level(&self, n: usize) -> Matrix<E> {
        match self.matrices.get(n) {
            Some(m) => m.clone(),
            None => matrix::identity(self.p, self.ring, self.rank()),
        }
    }

    pub fn validate(&self) -> std::result::Result<(), Violation> {
        for (n, m) in self.matrices.iter().enumerate() {
            check_group_matrix(m, self.group, n)?;
        }
        Ok(())
    }

    /// Levelwise product `(ψ·φ)_n = ψ_n φ_n`.
    pub fn compose(&self, other: &Self) -> Self {
        let len = self.matrices.len().max(other.matrices.len());
        GaugeWitness {
            p: self.p,
            ring: self.ring,
            group: self.group,
            matrices: (0..len).map(|n| matrix::mul(&self.level(n), &other.level(n))).collect(),
        }
    }

    pub fn inverse(&self, work: i64) -> Result<Self> {
        Ok(GaugeWitness {
            p: self.p,
            ring: self.ring,
            group: self.group,
            matrices: self
                .matrices
                .iter()
                .map(|m| matrix::inverse(m, work))
                .collect::<Result<_>>()?,
        })
    }
}

fn check_compatible<E: Coeff>(t: &Tower<E>, psi: &GaugeWitness<E>) -> Result<()> {
    if t.p != psi.p || t.ring != psi.ring || t.rank() != psi.rank() {
        return Err(Error::ShapeMismatch(format!(
            "tower (p={}, {:?}, rank {}) vs witness (p={}, {:?}, rank {})",
            t.p,
            t.ring,
            t.rank(),
            psi.p,
            psi.ring,
            psi.rank()
        )));
    }
    Ok(())
}

/// `σ'_n = ψ_n σ_n ψ_{n+1}^{-1}`.
///
/// Levels past the witness use `ψ_n = 1`; when the last stored `ψ_N` is not
/// the identity the output gets one more explicit level.
pub fn gauge_apply<E: Coeff>(t: &Tower<E>, psi: &GaugeWitness<E>) -> Result<Tower<E>> {
    gauge_apply_with(t, psi, DEFAULT_PRECISION)
}

pub fn gauge_apply_with<E: Coeff>(t: &Tower<E>, psi: &GaugeWitness<E>, work: i64) -> Result<Tower<E>> {
    check_compatible(t, psi)?;
    check_group_shape(psi, t.group)?;
    let m = psi.depth().max(t.depth());
    let last_is_identity = psi.matrices.get(m).map_or(true, matrix::is_identity);
    let out_depth = if last_is_identity { m } else { m + 1 };
    let mut out = Vec::with_capacity(out_depth);
    for n in 0..out_depth {
        let next_inv = matrix::inverse(&psi.level(n + 1), work)?;
        out.push(matrix::mul(&matrix::mul(&psi.level(n), &t.level(n)?), &next_inv));
    }
    Ok(Tower {
        p: t.p,
        ring: t.ring,
        group: t.group,
        twist: t.twist.clone(),
        matrices: out,
        tail: t.tail.clone(),
    })
}

fn check_group_shape<E: Coeff>(psi: &GaugeWitness<E>, group: Group) -> Result<()> {
    for (n, m) in psi.matrices.iter().enumerate() {
        check_group_matrix(m, group, n).map_err(|v| Error::NotInGroup(v.to_string()))?;
    }
    Ok(())
}

/// Outcome of a witness check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VerifyReport {
    pub ok: bool,
    pub levels_checked: usize,
    pub first_failure: Option<(usize, usize, usize)>,
    /// Smallest local precision up to which an entry was compared.
    pub min_window: Option<i64>,
}

/// Checks `ψ_n σ_n ψ_{n+1}^{-1} = σ'_n` for every `n` below both depths,
/// exactly over `k[t^{±1}]` and modulo the local uniformizer to the power
/// `min(P, known precision)` over the discs.
pub fn verify_witness<E: Coeff>(t: &Tower<E>, t2: &Tower<E>, psi: &GaugeWitness<E>, precision: i64) -> Result<bool> {
    Ok(verify_witness_report(t, t2, psi, precision)?.ok)
}

pub fn verify_witness_report<E: Coeff>(
    t: &Tower<E>,
    t2: &Tower<E>,
    psi: &GaugeWitness<E>,
    precision: i64,
) -> Result<VerifyReport> {
    check_compatible(t, psi)?;
    check_compatible(t2, psi)?;
    let depth = t.depth().min(t2.depth());
    let mut min_window: Option<i64> = None;
    let work = precision.max(DEFAULT_PRECISION);
    for n in 0..depth {
        let lhs = matrix::mul(
            &matrix::mul(&psi.level(n), &t.level(n)?),
            &matrix::inverse(&psi.level(n + 1), work)?,
        );
        let rhs = t2.level(n)?;
        for (i, (lrow, rrow)) in lhs.iter().zip(&rhs).enumerate() {
            for (j, (l, r)) in lrow.iter().zip(rrow).enumerate() {
                let window = precision.min(l.precision()).min(r.precision());
                if l.ring() != Ring::Gm {
                    min_window = Some(min_window.map_or(window, |w| w.min(window)));
                }
                if !l.truncated(window).agrees(&r.truncated(window)) {
                    return Ok(VerifyReport {
                        ok: false,
                        levels_checked: n,
                        first_failure: Some((n, i, j)),
                        min_window,
                    });
                }
            }
        }
    }
    Ok(VerifyReport {
        ok: true,
        levels_checked: depth,
        first_failure: None,
        min_window,
    })
}

/// `s_R(γ_n^{-1}) A s_R(γ_n)`: entry `(i,j)` times `t^{(γ_{j,n} − γ_{i,n}) p^n}`.
pub fn twist_transition<E: Coeff>(p: u64, gamma: &[PExponent], a: &Matrix<E>, n: usize) -> Result<Matrix<E>> {
    let mut out = a.clone();
    for (i, row) in out.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            let e = digit_exponent(&gamma[j], p, n)? - digit_exponent(&gamma[i], p, n)?;
            *x = x.shift(e);
        }
    }
    Ok(out)
}

/// Reinterprets a `k[t^{±1}]` tower over `k((t))` or `k((t^{-1}))`.
///
/// Entries keep all their terms: each gets precision at least `P` and
/// beyond its top local exponent.
pub fn restrict(t: &Tower<LaurentPoly>, side: Side, precision: i64) -> Tower<LocalSeries> {
    let conv = |f: &LaurentPoly| {
        let top = f
            .terms()
            .map(|(e, _)| match side {
                Side::At0 => e,
                Side::AtInf => -e,
            })
            .max()
            .unwrap_or(i64::MIN);
        LocalSeries::from_poly(f, side, precision.max(top.saturating_add(1)))
    };
    let conv_m = |m: &Matrix<LaurentPoly>| -> Matrix<LocalSeries> {
        m.iter().map(|row| row.iter().map(conv).collect()).collect()
    };
    Tower {
        p: t.p,
        ring: match side {
            Side::At0 => Ring::Disc0,
            Side::AtInf => Ring::DiscInf,
        },
        group: t.group,
        twist: t.twist.clone(),
        matrices: t.matrices.iter().map(conv_m).collect(),
        tail: match &t.tail {
            Tail::DiagonalTwist => Tail::DiagonalTwist,
            Tail::SelfSimilar { unipotent } => Tail::SelfSimilar {
                unipotent: conv_m(unipotent),
            },
        },
    }
}

/// Reinterprets a `k[t^{±1}]` witness over a disc with exact entries.
pub fn restrict_witness(psi: &GaugeWitness<LaurentPoly>, side: Side) -> GaugeWitness<LocalSeries> {
    GaugeWitness {
        p: psi.p,
        ring: match side {
            Side::At0 => Ring::Disc0,
            Side::AtInf => Ring::DiscInf,
        },
        group: psi.group,
        matrices: psi
            .matrices
            .iter()
            .map(|m| {
                m.iter()
                    .map(|row| row.iter().map(|f| LocalSeries::from_poly(f, side, crate::series::EXACT)).collect())
                    .collect()
            })
            .collect(),
    }
}

/// An infinite tower given by explicit levels `n < N` and, for `n >= N`,
/// `σ_n = (I + W(t^{p^n})) · diag(t^{s_{a,n} p^n})` with integer streams
/// `s_a` constant from level `settle`.
struct TailSpec<'a, E> {
    p: u64,
    ring: Ring,
    group: Group,
    prefix: Vec<Matrix<E>>,
    w: Option<Matrix<E>>,
    stream: &'a dyn Fn(usize, usize) -> i64,
    settle: usize,
    twist: Vec<PExponent>,
}

/// Rewrites a [`TailSpec`] into an equivalent tower with a standard tail.
///
/// A diagonal gauge `t^{G_{a,n}}`, trivial below `N`, turns the streams into
/// the twist digits; `G_{a,n} = −Σ_{k≥n} (s_{a,k} − α_{a,k}) p^k`.
fn canonical_tail<E: Coeff>(raw: TailSpec<'_, E>) -> Result<Tower<E>> {
    let p = raw.p;
    let pi = p as i128;
    let r = raw.twist.len();
    let n_pre = raw.prefix.len();
    let m0 = raw
        .twist
        .iter()
        .map(|a| a.eventual_digit(p).0)
        .max()
        .unwrap_or(0)
        .max(raw.settle)
        .max(n_pre);
    let big = |n: usize| -> Result<i128> { (pi).checked_pow(n as u32).ok_or(Error::Overflow) };
    // g[a][n - N] for N <= n <= m0
    let mut g = vec![Vec::new(); r];
    let mut tail_b = vec![0i64; r];
    for a in 0..r {
        let c = |n: usize| raw.twist[a].digit(p, n) as i128;
        let delta = (raw.stream)(a, m0) as i128 - c(m0);
        let mut acc: i128 = 0;
        for k in n_pre..m0 {
            acc += ((raw.stream)(a, k) as i128 - c(k)) * big(k)?;
        }
        let num = delta * big(m0)?;
        if num % (pi - 1) != 0 {
            return Err(Error::UnsupportedTail("stream and twist disagree mod Z".into()));
        }
        let b = delta / (pi - 1);
        tail_b[a] = i64::try_from(b).map_err(|_| Error::Overflow)?;
        let mut cur = -acc + num / (pi - 1);
        for n in n_pre..=m0 {
            g[a].push(i64::try_from(cur).map_err(|_| Error::Overflow)?);
            cur += ((raw.stream)(a, n) as i128 - c(n)) * big(n)?;
        }
    }
    let trivial = g.iter().all(|v| v.iter().all(|x| *x == 0))
        && (n_pre..=m0).all(|n| (0..r).all(|a| (raw.stream)(a, n) == raw.twist[a].digit(p, n) as i64));
    let depth = if trivial { n_pre } else { m0 };
    let gauge = |n: usize| -> Matrix<E> {
        if n < n_pre {
            matrix::identity(p, raw.ring, r)
        } else {
            let d: Vec<E> = (0..r).map(|a| monomial(p, raw.ring, g[a][n - n_pre])).collect();
            matrix::diagonal(p, raw.ring, &d)
        }
    };
    let raw_level = |n: usize| -> Result<Matrix<E>> {
        if n < n_pre {
            return Ok(raw.prefix[n].clone());
        }
        let q = pow_i64(p, n as u32).ok_or(Error::Overflow)?;
        let mut d = Vec::with_capacity(r);
        for a in 0..r {
            d.push(monomial(p, raw.ring, (raw.stream)(a, n).checked_mul(q).ok_or(Error::Overflow)?));
        }
        let d = matrix::diagonal(p, raw.ring, &d);
        Ok(match &raw.w {
            None => d,
            Some(w) => {
                let u = matrix::add(&matrix::identity(p, raw.ring, r), &matrix::scale_exponents(w, q)?);
                matrix::mul(&u, &d)
            }
        })
    };
    let mut matrices = Vec::with_capacity(depth);
    for n in 0..depth {
        let right = matrix::inverse(&gauge(n + 1), 0)?;
        matrices.push(matrix::mul(&matrix::mul(&gauge(n), &raw_level(n)?), &right));
    }
    let tail = match raw.w {
        None => Tail::DiagonalTwist,
        Some(w) => {
            let mut v = w;
            if !trivial {
                for (i, row) in v.iter_mut().enumerate() {
                    for (j, x) in row.iter_mut().enumerate() {
                        *x = x.shift(tail_b[i] - tail_b[j]);
                    }
                }
            }
            Tail::SelfSimilar { unipotent: v }
        }
    };
    Ok(Tower {
        p,
        ring: raw.ring,
        group: raw.group,
        twist: raw.twist,
        matrices,
        tail,
    })
}

fn same_base<E: Coeff>(a: &Tower<E>, b: &Tower<E>) -> Result<()> {
    if a.p != b.p || a.ring != b.ring {
        return Err(Error::ShapeMismatch("towers over different rings".into()));
    }
    Ok(())
}

fn unipotent_part<E: Coeff>(t: &Tower<E>) -> Option<Matrix<E>> {
    match &t.tail {
        Tail::DiagonalTwist => None,
        Tail::SelfSimilar { unipotent } => Some(unipotent.clone()),
    }
}

fn join_group(a: Group, b: Group) -> Group {
    use Group::*;
    match (a, b) {
        (GL, _) | (_, GL) => GL,
        (B, _) | (_, B) => B,
        (U, U) => U,
        (U, D) | (D, U) => B,
        (D, D) => D,
    }
}

/// Levelwise Kronecker product; twists add.
pub fn tensor<E: Coeff>(t1: &Tower<E>, t2: &Tower<E>) -> Result<Tower<E>> {
    same_base(t1, t2)?;
    let p = t1.p;
    let (r1, r2) = (t1.rank(), t2.rank());
    let n = t1.depth().max(t2.depth());
    let prefix = (0..n)
        .map(|k| Ok(matrix::kronecker(&t1.level(k)?, &t2.level(k)?)))
        .collect::<Result<Vec<_>>>()?;
    let w = match (unipotent_part(t1), unipotent_part(t2)) {
        (None, None) => None,
        (a, b) => {
            let id1 = matrix::identity(p, t1.ring, r1);
            let id2 = matrix::identity(p, t1.ring, r2);
            let u = matrix::kronecker(
                &matrix::add(&id1, &a.unwrap_or_else(|| matrix::zero(p, t1.ring, r1))),
                &matrix::add(&id2, &b.unwrap_or_else(|| matrix::zero(p, t1.ring, r2))),
            );
            Some(matrix::sub(&u, &matrix::identity(p, t1.ring, r1 * r2)))
        }
    };
    let stream = |a: usize, k: usize| (t1.twist[a / r2].digit(p, k) + t2.twist[a % r2].digit(p, k)) as i64;
    let mut twist = Vec::with_capacity(r1 * r2);
    for x in &t1.twist {
        for y in &t2.twist {
            twist.push(*x + *y);
        }
    }
    let group = match (t1.group, t2.group) {
        (Group::D, Group::D) => Group::D,
        (Group::U, Group::U) => Group::U,
        (g1, g2) => join_group(join_group(g1, g2), Group::B),
    };
    canonical_tail(TailSpec {
        p,
        ring: t1.ring,
        group,
        prefix,
        w,
        stream: &stream,
        settle: t1.settled_from().max(t2.settled_from()),
        twist,
    })
}

/// Inverse transpose; triangular towers are re-indexed in reverse order so
/// they stay upper triangular.
pub fn dual<E: Coeff>(t: &Tower<E>) -> Result<Tower<E>> {
    let p = t.p;
    let r = t.rank();
    let triangular = t.group != Group::GL;
    let fix = |m: Matrix<E>| if triangular { matrix::reverse(&m) } else { m };
    let prefix = (0..t.depth())
        .map(|k| Ok(fix(matrix::transpose(&matrix::inverse(&t.level(k)?, DEFAULT_PRECISION)?))))
        .collect::<Result<Vec<_>>>()?;
    let w = match unipotent_part(t) {
        None => None,
        Some(v) => {
            let u = matrix::add(&matrix::identity(p, t.ring, r), &v);
            let inv = fix(matrix::transpose(&matrix::inverse(&u, DEFAULT_PRECISION)?));
            Some(matrix::sub(&inv, &matrix::identity(p, t.ring, r)))
        }
    };
    let idx = |a: usize| if triangular { r - 1 - a } else { a };
    let stream = |a: usize, k: usize| -(t.twist[idx(a)].digit(p, k) as i64);
    let twist = (0..r).map(|a| -t.twist[idx(a)]).collect();
    if w.is_some() && !triangular {
        return Err(Error::UnsupportedTail(
            "dual of a GL tower with a self-similar unipotent tail".into(),
        ));
    }
    canonical_tail(TailSpec {
        p,
        ring: t.ring,
        group: t.group,
        prefix,
        w,
        stream: &stream,
        settle: t.settled_from(),
        twist,
    })
}

/// Block-diagonal sum; twists concatenate.
pub fn direct_sum<E: Coeff>(t1: &Tower<E>, t2: &Tower<E>) -> Result<Tower<E>> {
    same_base(t1, t2)?;
    let p = t1.p;
    let (r1, r2) = (t1.rank(), t2.rank());
    let n = t1.depth().max(t2.depth());
    let prefix = (0..n)
        .map(|k| Ok(matrix::block_sum(p, t1.ring, &t1.level(k)?, &t2.level(k)?)))
        .collect::<Result<Vec<_>>>()?;
    let tail = match (unipotent_part(t1), unipotent_part(t2)) {
        (None, None) => Tail::DiagonalTwist,
        (a, b) => Tail::SelfSimilar {
            unipotent: matrix::block_sum(
                p,
                t1.ring,
                &a.unwrap_or_else(|| matrix::zero(p, t1.ring, r1)),
                &b.unwrap_or_else(|| matrix::zero(p, t1.ring, r2)),
            ),
        },
    };
    let mut twist = t1.twist.clone();
    twist.extend(t2.twist.iter().copied());
    Ok(Tower {
        p,
        ring: t1.ring,
        group: join_group(t1.group, t2.group),
        twist,
        matrices: prefix,
        tail,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TailRepr {
    DiagonalTwist,
    SelfSimilar { unipotent: Vec<Vec<RawEntry>> },
}

impl Default for TailRepr {
    fn default() -> Self {
        TailRepr::DiagonalTwist
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TowerRepr {
    pub p: u64,
    pub ring: Ring,
    pub group: Group,
    pub rank: usize,
    pub depth: usize,
    pub twist: Vec<PExponent>,
    pub matrices: Vec<Vec<Vec<RawEntry>>>,
    #[serde(default)]
    pub tail: TailRepr,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessRepr {
    pub p: u64,
    pub ring: Ring,
    pub group: Group,
    pub depth: usize,
    pub matrices: Vec<Vec<Vec<RawEntry>>>,
}

fn matrix_to_raw<E: Coeff>(m: &Matrix<E>) -> Vec<Vec<RawEntry>> {
    m.iter().map(|row| row.iter().map(|x| x.to_raw()).collect()).collect()
}

fn matrix_from_raw<E: Coeff>(m: Vec<Vec<RawEntry>>, p: u64, ring: Ring) -> Result<Matrix<E>> {
    m.into_iter()
        .map(|row| row.into_iter().map(|x| E::from_raw(x, p, ring)).collect())
        .collect()
}

impl<E: Coeff> Tower<E> {
    pub fn to_repr(&self) -> TowerRepr {
        TowerRepr {
            p: self.p,
            ring: self.ring,
            group: self.group,
            rank: self.rank(),
            depth: self.depth(),
            twist: self.twist.clone(),
            matrices: self.matrices.iter().map(matrix_to_raw).collect(),
            tail: match &self.tail {
                Tail::DiagonalTwist => TailRepr::DiagonalTwist,
                Tail::SelfSimilar { unipotent } => TailRepr::SelfSimilar {
                    unipotent: matrix_to_raw(unipotent),
                },
            },
        }
    }

    /// Converts without validating.
    pub fn from_repr(r: TowerRepr) -> Result<Self> {
        check_prime(r.p)?;
        if r.twist.len() != r.rank {
            return Err(Error::Parse(format!("rank {} but {} twist exponents", r.rank, r.twist.len())));
        }
        if r.matrices.len() != r.depth {
            return Err(Error::Parse(format!("depth {} but {} matrices", r.depth, r.matrices.len())));
        }
        let (p, ring) = (r.p, r.ring);
        Ok(Tower {
            p,
            ring,
            group: r.group,
            twist: r.twist,
            matrices: r
                .matrices
                .into_iter()
                .map(|m| matrix_from_raw(m, p, ring))
                .collect::<Result<_>>()?,
            tail: match r.tail {
                TailRepr::DiagonalTwist => Tail::DiagonalTwist,
                TailRepr::SelfSimilar { unipotent } => Tail::SelfSimilar {
                    unipotent: matrix_from_raw(unipotent, p, ring)?,
                },
            },
        })
    }
}

impl<E: Coeff> Serialize for Tower<E> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_repr().serialize(s)
    }
}

impl<E: Coeff> GaugeWitness<E> {
    pub fn to_repr(&self) -> WitnessRepr {
        WitnessRepr {
            p: self.p,
            ring: self.ring,
            group: self.group,
            depth: self.depth(),
            matrices: self.matrices.iter().map(matrix_to_raw).collect(),
        }
    }

    pub fn from_repr(r: WitnessRepr) -> Result<Self> {
        check_prime(r.p)?;
        if r.matrices.len() != r.depth + 1 {
            return Err(Error::Parse(format!("depth {} needs {} matrices", r.depth, r.depth + 1)));
        }
        let (p, ring) = (r.p, r.ring);
        Ok(GaugeWitness {
            p,
            ring,
            group: r.group,
            matrices: r
                .matrices
                .into_iter()
                .map(|m| matrix_from_raw(m, p, ring))
                .collect::<Result<_>>()?,
        })
    }
}

impl<E: Coeff> Serialize for GaugeWitness<E> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_repr().serialize(s)
    }
}

/// A tower over either the global ring or one of the discs.
#[derive(Clone, Debug, PartialEq)]
pub enum AnyTower {
    Gm(Tower<LaurentPoly>),
    Local(Tower<LocalSeries>),
}

impl AnyTower {
    pub fn from_repr(r: TowerRepr) -> Result<Self> {
        Ok(match r.ring {
            Ring::Gm => AnyTower::Gm(Tower::from_repr(r)?),
            _ => AnyTower::Local(Tower::from_repr(r)?),
        })
    }

    pub fn validate(&self) -> std::result::Result<(), Violation> {
        match self {
            AnyTower::Gm(t) => t.validate(),
            AnyTower::Local(t) => t.validate(),
        }
    }

    pub fn to_repr(&self) -> TowerRepr {
        match self {
            AnyTower::Gm(t) => t.to_repr(),
            AnyTower::Local(t) => t.to_repr(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum AnyWitness {
    Gm(GaugeWitness<LaurentPoly>),
    Local(GaugeWitness<LocalSeries>),
}

impl AnyWitness {
    pub fn from_repr(r: WitnessRepr) -> Result<Self> {
        Ok(match r.ring {
            Ring::Gm => AnyWitness::Gm(GaugeWitness::from_repr(r)?),
            _ => AnyWitness::Local(GaugeWitness::from_repr(r)?),
        })
    }
}

/// Bounds for [`oracle_equivalent`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OracleConfig {
    /// Gauge exponents lie in `[-window, window]`.
    pub window: i64,
    /// At most this many terms per gauge entry.
    pub terms: usize,
    pub cap: u128,
    /// Levels past the explicit ones followed when checking that the gauge
    /// extends to the tails.
    pub tail_levels: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            window: 4,
            terms: 3,
            cap: 2_000_000,
            tail_levels: 24,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum OracleResult {
    Equivalent(GaugeWitness<LaurentPoly>),
    NotFound { searched: u128 },
}

fn bounded_polys(p: u64, exps: &[i64], terms: usize) -> Vec<LaurentPoly> {
    let mut out = vec![LaurentPoly::zero(p)];
    for &e in exps {
        let mut next = Vec::new();
        for f in &out {
            if f.len() < terms {
                for c in 1..p {
                    next.push(f.add(&LaurentPoly::monomial(p, c as i64, e)));
                }
            }
        }
        out.extend(next);
    }
    out
}

fn within(f: &LaurentPoly, cfg: &OracleConfig) -> bool {
    f.len() <= cfg.terms && f.terms().all(|(e, _)| e.abs() <= cfg.window)
}

/// Exhaustive search for `ψ` with `σ2_n = ψ_n σ1_n ψ_{n+1}^{-1}`.
///
/// Candidates for `ψ_N` are enumerated; lower levels follow from
/// `ψ_n = σ2_n ψ_{n+1} σ1_n^{-1}` and must respect the bounds; the
/// continuation `ψ_{n+1} = σ2_n^{-1} ψ_n σ1_n` past `N` must stay integral
/// until it becomes self-similar, which proves it extends to every level.
/// A returned witness is a proof; `NotFound` is not.
pub fn oracle_equivalent(
    t1: &Tower<LaurentPoly>,
    t2: &Tower<LaurentPoly>,
    cfg: &OracleConfig,
) -> Result<OracleResult> {
    if t1.p != t2.p || t1.rank() != t2.rank() || t1.group != t2.group {
        return Err(Error::ShapeMismatch("oracle needs towers of the same shape".into()));
    }
    let (p, r, group) = (t1.p, t1.rank(), t1.group);
    let n_top = t1.depth().max(t2.depth());
    let q = pow_i64(p, n_top as u32).ok_or(Error::Overflow)?;
    let exps: Vec<i64> = (-cfg.window..=cfg.window).filter(|e| e % q == 0).collect();
    let polys = bounded_polys(p, &exps, cfg.terms);
    let units: Vec<LaurentPoly> = exps
        .iter()
        .flat_map(|&e| (1..p).map(move |c| LaurentPoly::monomial(p, c as i64, e)))
        .collect();
    let one = vec![LaurentPoly::one(p)];
    let zero = vec![LaurentPoly::zero(p)];
    let mut choices: Vec<&Vec<LaurentPoly>> = Vec::with_capacity(r * r);
    for i in 0..r {
        for j in 0..r {
            choices.push(match (group, i.cmp(&j)) {
                (Group::GL, _) => &polys,
                (Group::U, std::cmp::Ordering::Equal) => &one,
                (_, std::cmp::Ordering::Equal) => &units,
                (Group::B | Group::U, std::cmp::Ordering::Less) => &polys,
                _ => &zero,
            });
        }
    }
    let size = choices.iter().try_fold(1u128, |acc, c| acc.checked_mul(c.len() as u128));
    let size = size.unwrap_or(u128::MAX);
    if size > cfg.cap {
        return Err(Error::SearchSpaceTooLarge { size, cap: cfg.cap });
    }
    let s1: Vec<Matrix<LaurentPoly>> = (0..n_top).map(|n| t1.level(n)).collect::<Result<_>>()?;
    let s2: Vec<Matrix<LaurentPoly>> = (0..n_top).map(|n| t2.level(n)).collect::<Result<_>>()?;
    let s1_inv: Vec<_> = s1.iter().map(|m| matrix::inverse(m, 0)).collect::<Result<_>>()?;
    let settle = t1.settled_from().max(t2.settled_from());
    let mut idx = vec![0usize; r * r];
    let mut searched = 0u128;
    loop {
        searched += 1;
        let top: Matrix<LaurentPoly> = (0..r)
            .map(|i| (0..r).map(|j| choices[i * r + j][idx[i * r + j]].clone()).collect())
            .collect();
        if let Some(w) = oracle_candidate(t1, t2, &s1_inv, &s2, top, group, n_top, settle, cfg) {
            if verify_witness(t1, t2, &w, EXACT_CHECK)? {
                return Ok(OracleResult::Equivalent(w));
            }
        }
        let mut k = 0;
        loop {
            if k == idx.len() {
                return Ok(OracleResult::NotFound { searched });
            }
            idx[k] += 1;
            if idx[k] < choices[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

const EXACT_CHECK: i64 = crate::series::EXACT;

#[allow(clippy::too_many_arguments)]
fn oracle_candidate(
    t1: &Tower<LaurentPoly>,
    t2: &Tower<LaurentPoly>,
    s1_inv: &[Matrix<LaurentPoly>],
    s2: &[Matrix<LaurentPoly>],
    top: Matrix<LaurentPoly>,
    group: Group,
    n_top: usize,
    settle: usize,
    cfg: &OracleConfig,
) -> Option<GaugeWitness<LaurentPoly>> {
    check_group_matrix(&top, group, n_top).ok()?;
    let mut levels = vec![top.clone()];
    for n in (0..n_top).rev() {
        let psi = matrix::mul(&matrix::mul(&s2[n], levels.last().unwrap()), &s1_inv[n]);
        check_group_matrix(&psi, group, n).ok()?;
        if !psi.iter().flatten().all(|f| within(f, cfg)) {
            return None;
        }
        levels.push(psi);
    }
    levels.reverse();
    let mut cur = top;
    for n in n_top..n_top + cfg.tail_levels {
        let a = t1.level(n).ok()?;
        let b_inv = matrix::inverse(&t2.level(n).ok()?, 0).ok()?;
        let next = matrix::mul(&matrix::mul(&b_inv, &cur), &a);
        check_group_matrix(&next, group, n + 1).ok()?;
        if n >= settle && matrix::scale_exponents(&cur, t1.p as i64).ok()? == next {
            return Some(GaugeWitness {
                p: t1.p,
                ring: Ring::Gm,
                group,
                matrices: levels,
            });
        }
        cur = next;
    }
    None
}
