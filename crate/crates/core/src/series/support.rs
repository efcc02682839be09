use std::collections::BTreeSet;

use num_integer::Integer;

/// A decidable set of integer exponents built from residue classes,
/// half-lines and finite sets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SupportSet {
    All,
    Empty,
    /// `{ i : i ≡ offset (mod modulus) }`
    Residue { offset: i64, modulus: i64 },
    AtLeast(i64),
    AtMost(i64),
    Finite(BTreeSet<i64>),
    Union(Vec<SupportSet>),
    Intersection(Vec<SupportSet>),
    Complement(Box<SupportSet>),
}

impl SupportSet {
    pub fn residue(offset: i64, modulus: i64) -> Self {
        assert!(modulus > 0);
        SupportSet::Residue {
            offset: offset.rem_euclid(modulus),
            modulus,
        }
    }

    pub fn complement(self) -> Self {
        SupportSet::Complement(Box::new(self))
    }

    pub fn minus(self, other: SupportSet) -> Self {
        SupportSet::Intersection(vec![self, other.complement()])
    }

    /// `p^n Z \ (digit·p^n + p^{n+1} Z)`, the exponents allowed at level `n`
    /// of a normalized twisted class.
    pub fn support_condition(p: i64, n: u32, digit: i64) -> Self {
        let q = p.pow(n);
        SupportSet::residue(0, q).minus(SupportSet::residue(digit * q, q * p))
    }

    pub fn contains(&self, i: i64) -> bool {
        match self {
            SupportSet::All => true,
            SupportSet::Empty => false,
            SupportSet::Residue { offset, modulus } => i.rem_euclid(*modulus) == *offset,
            SupportSet::AtLeast(b) => i >= *b,
            SupportSet::AtMost(b) => i <= *b,
            SupportSet::Finite(s) => s.contains(&i),
            SupportSet::Union(v) => v.iter().any(|s| s.contains(i)),
            SupportSet::Intersection(v) => v.iter().all(|s| s.contains(i)),
            SupportSet::Complement(s) => !s.contains(i),
        }
    }

    fn thresholds(&self, out: &mut Vec<i64>, period: &mut i64) {
        match self {
            SupportSet::All | SupportSet::Empty => {}
            SupportSet::Residue { modulus, .. } => *period = period.lcm(modulus),
            SupportSet::AtLeast(b) | SupportSet::AtMost(b) => out.push(*b),
            SupportSet::Finite(s) => out.extend(s.iter().copied()),
            SupportSet::Union(v) | SupportSet::Intersection(v) => {
                for s in v {
                    s.thresholds(out, period);
                }
            }
            SupportSet::Complement(s) => s.thresholds(out, period),
        }
    }

    /// Whether the set has an element `>= start`.
    ///
    /// Every descriptor is periodic beyond its largest threshold, so one
    /// period past that point decides the question.
    pub fn meets_at_or_above(&self, start: i64) -> bool {
        let mut th = Vec::new();
        let mut period = 1;
        self.thresholds(&mut th, &mut period);
        let from = th.iter().copied().max().map_or(start, |m| m.max(start));
        (start..=from.saturating_add(period)).any(|i| self.contains(i))
    }

    /// Whether the set has an element `<= end`.
    pub fn meets_at_or_below(&self, end: i64) -> bool {
        let mut th = Vec::new();
        let mut period = 1;
        self.thresholds(&mut th, &mut period);
        let to = th.iter().copied().min().map_or(end, |m| m.min(end));
        (to.saturating_sub(period)..=end).any(|i| self.contains(i))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn membership() {
        let s = SupportSet::support_condition(3, 1, 1);
        assert!(s.contains(6));
        assert!(s.contains(-3));
        assert!(!s.contains(3));
        assert!(!s.contains(12));
        assert!(!s.contains(1));
        let c = SupportSet::residue(2, 3).complement();
        assert!(c.contains(1));
        assert!(!c.contains(-1));
    }

    #[test]
    fn half_line_queries() {
        assert!(!SupportSet::AtMost(5).meets_at_or_above(6));
        assert!(SupportSet::AtMost(5).meets_at_or_above(5));
        assert!(SupportSet::residue(0, 7).meets_at_or_above(100));
        let fin = SupportSet::Finite([1, 4].into_iter().collect());
        assert!(!fin.meets_at_or_above(5));
        assert!(fin.meets_at_or_below(1));
        assert!(!SupportSet::Empty.meets_at_or_above(0));
        let tricky = SupportSet::residue(0, 9).minus(SupportSet::residue(0, 3));
        assert!(!tricky.meets_at_or_above(-50));
    }
}
