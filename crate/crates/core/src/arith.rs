//! Prime-field scalars, rational p-adic exponents and digit-product binomials.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

pub fn check_prime(p: u64) -> Result<u64> {
    if is_prime(p) && p < (1 << 31) {
        Ok(p)
    } else {
        Err(Error::InvalidPrime(p))
    }
}

pub(crate) fn mod_pow(mut base: u64, mut exp: u64, p: u64) -> u64 {
    let mut acc = 1 % p;
    base %= p;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * base % p;
        }
        base = base * base % p;
        exp >>= 1;
    }
    acc
}

pub(crate) fn mod_inv(a: u64, p: u64) -> u64 {
    debug_assert!(a % p != 0);
    mod_pow(a, p - 2, p)
}

/// Reduces a signed integer into `[0, p)`.
pub fn reduce(x: i64, p: u64) -> u64 {
    x.rem_euclid(p as i64) as u64
}

/// An element of the prime field F_p.
///
/// Arithmetic between scalars of different characteristic panics.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldScalar {
    value: u64,
    p: u64,
}

impl FieldScalar {
    pub fn new(value: i64, p: u64) -> Self {
        FieldScalar {
            value: reduce(value, p),
            p,
        }
    }

    pub fn zero(p: u64) -> Self {
        FieldScalar { value: 0, p }
    }

    pub fn one(p: u64) -> Self {
        FieldScalar { value: 1 % p, p }
    }

    pub fn value(self) -> u64 {
        self.value
    }

    pub fn modulus(self) -> u64 {
        self.p
    }

    pub fn is_zero(self) -> bool {
        self.value == 0
    }

    pub fn inverse(self) -> Option<Self> {
        if self.value == 0 {
            None
        } else {
            Some(FieldScalar {
                value: mod_inv(self.value, self.p),
                p: self.p,
            })
        }
    }

    fn same_field(self, other: Self) {
        assert_eq!(
            self.p, other.p,
            "mixing scalars of characteristic {} and {}",
            self.p, other.p
        );
    }
}

impl fmt::Debug for FieldScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (mod {})", self.value, self.p)
    }
}

impl fmt::Display for FieldScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

impl Add for FieldScalar {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        self.same_field(rhs);
        FieldScalar {
            value: (self.value + rhs.value) % self.p,
            p: self.p,
        }
    }
}

impl Sub for FieldScalar {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self.same_field(rhs);
        FieldScalar {
            value: (self.value + self.p - rhs.value) % self.p,
            p: self.p,
        }
    }
}

impl Mul for FieldScalar {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        self.same_field(rhs);
        FieldScalar {
            value: self.value * rhs.value % self.p,
            p: self.p,
        }
    }
}

impl Neg for FieldScalar {
    type Output = Self;
    fn neg(self) -> Self {
        FieldScalar {
            value: (self.p - self.value) % self.p,
            p: self.p,
        }
    }
}

/// A rational p-adic integer `num/den` whose denominator divides `p - 1`.
///
/// Such exponents have eventually constant base-p digit streams, which is
/// what makes the tail conventions of towers and unipotent classes finite.
/// The characteristic is not stored; every digit-level query takes `p`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawExponent", into = "RawExponent")]
pub struct PExponent {
    num: i64,
    den: i64,
}

#[derive(Serialize, Deserialize)]
struct RawExponent {
    num: i64,
    den: i64,
}

impl TryFrom<RawExponent> for PExponent {
    type Error = String;
    fn try_from(raw: RawExponent) -> std::result::Result<Self, String> {
        if raw.den == 0 {
            return Err("zero denominator".into());
        }
        Ok(PExponent::ratio(raw.num, raw.den))
    }
}

impl From<PExponent> for RawExponent {
    fn from(e: PExponent) -> Self {
        RawExponent {
            num: e.num,
            den: e.den,
        }
    }
}

impl fmt::Debug for PExponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for PExponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl PExponent {
    pub const ZERO: PExponent = PExponent { num: 0, den: 1 };

    pub fn int(n: i64) -> Self {
        PExponent { num: n, den: 1 }
    }

    /// Reduced fraction; panics on a zero denominator.
    pub fn ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        let g = num.gcd(&den);
        let s = if den < 0 { -1 } else { 1 };
        PExponent {
            num: s * num / g,
            den: s * den / g,
        }
    }

    /// Builds `num/den` and checks that it belongs to the family for `p`.
    pub fn new(num: i64, den: i64, p: u64) -> Result<Self> {
        if den == 0 {
            return Err(Error::InvalidExponent {
                num,
                den,
                p,
                reason: "zero denominator",
            });
        }
        let e = PExponent::ratio(num, den);
        e.validate(p)?;
        Ok(e)
    }

    pub fn validate(&self, p: u64) -> Result<()> {
        let bad = |reason| Error::InvalidExponent {
            num: self.num,
            den: self.den,
            p,
            reason,
        };
        if (p as i64 - 1) % self.den != 0 {
            return Err(bad("denominator must divide p - 1"));
        }
        if self.num.unsigned_abs() > (1 << 40) {
            return Err(bad("numerator out of range"));
        }
        Ok(())
    }

    pub fn num(&self) -> i64 {
        self.num
    }

    pub fn den(&self) -> i64 {
        self.den
    }

    pub fn is_integer(&self) -> bool {
        self.den == 1
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }

    /// Fractional representative in `[0, 1)`.
    pub fn class_mod_z(&self) -> Self {
        PExponent {
            num: self.num.rem_euclid(self.den),
            den: self.den,
        }
    }

    /// `floor(self)`, so that `self = floor + class_mod_z`.
    pub fn floor(&self) -> i64 {
        self.num.div_euclid(self.den)
    }

    /// Base-p digit stream, computed by `α ← (α − α_0)/p` on exact rationals.
    pub fn digits(&self, p: u64) -> Digits {
        Digits {
            num: self.num as i128,
            den: self.den as i128,
            p: p as i128,
        }
    }

    pub fn digit(&self, p: u64, n: usize) -> u64 {
        self.digits(p).nth(n).expect("digit stream is infinite")
    }

    /// Returns `(n0, d)` such that every digit at index `>= n0` equals `d`,
    /// with `n0` minimal.
    pub fn eventual_digit(&self, p: u64) -> (usize, u64) {
        let mut it = self.digits(p);
        let mut seen = Vec::new();
        loop {
            let state = it.num;
            let d = it.next().unwrap();
            seen.push(d);
            if it.num == state {
                let mut n0 = seen.len() - 1;
                while n0 > 0 && seen[n0 - 1] == d {
                    n0 -= 1;
                }
                return (n0, d);
            }
        }
    }

    /// Sum `Σ_{i<n} digit(i) p^i`.
    pub fn partial_sum(&self, p: u64, n: usize) -> Result<i64> {
        let mut acc: i64 = 0;
        let mut pow: i64 = 1;
        for (i, d) in self.digits(p).take(n).enumerate() {
            acc = acc
                .checked_add((d as i64).checked_mul(pow).ok_or(Error::Overflow)?)
                .ok_or(Error::Overflow)?;
            if i + 1 < n {
                pow = pow.checked_mul(p as i64).ok_or(Error::Overflow)?;
            }
        }
        Ok(acc)
    }
}

impl Add for PExponent {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let l = self.den.lcm(&rhs.den);
        PExponent::ratio(self.num * (l / self.den) + rhs.num * (l / rhs.den), l)
    }
}

impl Sub for PExponent {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Neg for PExponent {
    type Output = Self;
    fn neg(self) -> Self {
        PExponent {
            num: -self.num,
            den: self.den,
        }
    }
}

/// Infinite iterator over base-p digits of a rational exponent.
#[derive(Clone, Debug)]
pub struct Digits {
    num: i128,
    den: i128,
    p: i128,
}

impl Iterator for Digits {
    type Item = u64;
    fn next(&mut self) -> Option<u64> {
        let p = self.p;
        let inv = mod_inv(self.den.rem_euclid(p) as u64, p as u64) as i128;
        let d = (self.num.rem_euclid(p) * inv).rem_euclid(p);
        self.num = (self.num - d * self.den) / p;
        Some(d as u64)
    }
}

/// `C(a, b) mod p` for `0 <= a, b < p`.
fn small_binom(a: u64, b: u64, p: u64) -> u64 {
    if b > a {
        return 0;
    }
    let mut num = 1u64;
    let mut den = 1u64;
    for i in 0..b {
        num = num * ((a - i) % p) % p;
        den = den * ((i + 1) % p) % p;
    }
    num * mod_inv(den, p) % p
}

/// Generalized Lucas binomial `C(α, m) mod p` as the product of digit
/// binomials `Π C(α_i, m_i)`.
pub fn binom_mod_p(alpha: &PExponent, m: u64, p: u64) -> FieldScalar {
    let mut acc = 1u64 % p;
    let mut m = m;
    let mut digits = alpha.digits(p);
    while m > 0 {
        let mi = m % p;
        let ai = digits.next().unwrap();
        acc = acc * small_binom(ai, mi, p) % p;
        if acc == 0 {
            break;
        }
        m /= p;
    }
    FieldScalar { value: acc, p }
}

/// `C(r, m) mod p` for an integer `r` of either sign.
pub fn binom_int_mod_p(r: i64, m: u64, p: u64) -> FieldScalar {
    binom_mod_p(&PExponent::int(r), m, p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digit_examples() {
        assert_eq!(PExponent::int(7).digit(3, 1), 2);
        let half = PExponent::ratio(1, 2);
        assert_eq!(half.digit(3, 0), 2);
        for n in 1..20 {
            assert_eq!(half.digit(3, n), 1);
        }
        for p in [2, 3, 5, 7] {
            for n in 0..30 {
                assert_eq!(PExponent::int(-1).digit(p, n), p - 1);
            }
        }
    }

    #[test]
    fn binom_examples() {
        assert_eq!(binom_int_mod_p(5, 3, 3).value(), 1);
        assert_eq!(binom_mod_p(&PExponent::ratio(1, 2), 3, 3).value(), 1);
        assert_eq!(binom_mod_p(&PExponent::ratio(1, 2), 0, 3).value(), 1);
        assert_eq!(binom_int_mod_p(-1, 4, 3).value(), 1);
    }

    #[test]
    fn exponent_arith() {
        let half = PExponent::ratio(1, 2);
        assert!((half + half).is_integer());
        assert_eq!(half + half, PExponent::int(1));
        assert_eq!(PExponent::ratio(7, 2).class_mod_z(), half);
        assert_eq!((-half).class_mod_z(), half);
        assert_eq!(PExponent::ratio(-7, 2).floor(), -4);
    }

    #[test]
    fn validation() {
        assert!(PExponent::new(1, 2, 3).is_ok());
        assert!(PExponent::new(1, 2, 2).is_err());
        assert!(PExponent::new(1, 3, 5).is_err());
        assert!(PExponent::new(3, 4, 5).is_ok());
        assert!(PExponent::new(1, 0, 5).is_err());
        assert!(check_prime(9).is_err());
        assert!(check_prime(2).is_ok());
    }

    #[test]
    fn eventual_digits() {
        assert_eq!(PExponent::ratio(1, 2).eventual_digit(3), (1, 1));
        assert_eq!(PExponent::int(7).eventual_digit(3), (2, 0));
        assert_eq!(PExponent::int(-1).eventual_digit(3), (0, 2));
        assert_eq!(PExponent::ZERO.eventual_digit(5), (0, 0));
        assert_eq!(PExponent::ratio(1, 4).eventual_digit(5), (1, 3));
    }

    #[test]
    fn field_ops() {
        let a = FieldScalar::new(3, 5);
        let b = FieldScalar::new(4, 5);
        assert_eq!((a + b).value(), 2);
        assert_eq!((a - b).value(), 4);
        assert_eq!((a * b).value(), 2);
        assert_eq!((a * a.inverse().unwrap()).value(), 1);
        assert!(FieldScalar::zero(5).inverse().is_none());
    }

    #[test]
    #[should_panic]
    fn mixing_fields_panics() {
        let _ = FieldScalar::new(1, 3) + FieldScalar::new(1, 5);
    }
}
