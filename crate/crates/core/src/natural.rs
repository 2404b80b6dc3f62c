//! Arbitrary-precision natural numbers with an inline fast path.
//!
//! Nearly every value a desk-scale campaign touches fits in a machine word,
//! so [`Natural`] stores those inline and only falls back to a heap-backed
//! [`BigUint`] above `u64::MAX`. The representation is canonical: a value
//! that fits in `u64` is always stored as `Small`, which keeps derived
//! equality and hashing sound.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

#[derive(Clone, PartialEq, Eq, Hash)]
enum Repr {
    Small(u64),
    Big(BigUint),
}

/// A nonnegative integer of unbounded size.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Natural(Repr);

const LOG10_2: f64 = std::f64::consts::LOG10_2;

impl Natural {
    pub const ZERO: Natural = Natural(Repr::Small(0));
    pub const ONE: Natural = Natural(Repr::Small(1));

    pub const fn from_u64(v: u64) -> Self {
        Natural(Repr::Small(v))
    }

    pub fn from_u128(v: u128) -> Self {
        match u64::try_from(v) {
            Ok(small) => Natural(Repr::Small(small)),
            Err(_) => Natural(Repr::Big(BigUint::from(v))),
        }
    }

    pub fn from_biguint(v: BigUint) -> Self {
        match v.to_u64() {
            Some(small) => Natural(Repr::Small(small)),
            None => Natural(Repr::Big(v)),
        }
    }

    /// `10^exp`.
    pub fn pow10(exp: u32) -> Self {
        if exp <= 19 {
            Natural::from_u64(10u64.pow(exp))
        } else {
            Natural::from_biguint(num_traits::pow(BigUint::from(10u32), exp as usize))
        }
    }

    pub fn to_u64(&self) -> Option<u64> {
        match &self.0 {
            Repr::Small(v) => Some(*v),
            Repr::Big(_) => None,
        }
    }

    pub fn to_u128(&self) -> Option<u128> {
        match &self.0 {
            Repr::Small(v) => Some(*v as u128),
            Repr::Big(b) => b.to_u128(),
        }
    }

    pub fn to_biguint(&self) -> BigUint {
        match &self.0 {
            Repr::Small(v) => BigUint::from(*v),
            Repr::Big(b) => b.clone(),
        }
    }

    pub fn as_big(&self) -> Option<&BigUint> {
        match &self.0 {
            Repr::Small(_) => None,
            Repr::Big(b) => Some(b),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.0, Repr::Small(0))
    }

    pub fn is_one(&self) -> bool {
        matches!(self.0, Repr::Small(1))
    }

    pub fn is_even(&self) -> bool {
        match &self.0 {
            Repr::Small(v) => v % 2 == 0,
            Repr::Big(b) => !b.bit(0),
        }
    }

    pub fn is_odd(&self) -> bool {
        !self.is_even()
    }

    /// Number of significant bits; zero has bit length 0.
    pub fn bit_length(&self) -> u64 {
        match &self.0 {
            Repr::Small(v) => 64 - v.leading_zeros() as u64,
            Repr::Big(b) => b.bits(),
        }
    }

    /// Number of decimal digits; zero counts as one digit.
    pub fn decimal_digits(&self) -> u32 {
        match &self.0 {
            Repr::Small(0) => 1,
            Repr::Small(v) => v.ilog10() + 1,
            Repr::Big(b) => b.to_str_radix(10).len() as u32,
        }
    }

    /// Decimal logarithm in double precision. `log10(0)` is negative infinity.
    pub fn log10(&self) -> f64 {
        match &self.0 {
            Repr::Small(v) => (*v as f64).log10(),
            Repr::Big(b) => {
                let bits = b.bits();
                let shift = bits.saturating_sub(64);
                let top = (b >> shift).to_u64().unwrap_or(u64::MAX);
                (top as f64).log10() + shift as f64 * LOG10_2
            }
        }
    }

    /// Whether the value is a perfect square.
    pub fn is_square(&self) -> bool {
        match &self.0 {
            Repr::Small(v) => {
                let r = v.isqrt();
                r * r == *v
            }
            Repr::Big(b) => {
                let r = b.sqrt();
                &r * &r == *b
            }
        }
    }

    /// Integer square root (floor).
    pub fn isqrt(&self) -> Natural {
        match &self.0 {
            Repr::Small(v) => Natural::from_u64(v.isqrt()),
            Repr::Big(b) => Natural::from_biguint(b.sqrt()),
        }
    }

    /// `self - rhs`, or `None` on underflow.
    pub fn checked_sub(&self, rhs: &Natural) -> Option<Natural> {
        match (&self.0, &rhs.0) {
            (Repr::Small(a), Repr::Small(b)) => a.checked_sub(*b).map(Natural::from_u64),
            _ => {
                if self < rhs {
                    None
                } else {
                    Some(Natural::from_biguint(self.to_biguint() - rhs.to_biguint()))
                }
            }
        }
    }

    /// Remainder modulo a word-sized divisor.
    pub fn rem_u64(&self, m: u64) -> u64 {
        match &self.0 {
            Repr::Small(v) => v % m,
            Repr::Big(b) => (b % m).to_u64().expect("remainder below modulus"),
        }
    }

    pub fn pow(&self, exp: u32) -> Natural {
        if let Repr::Small(v) = self.0 {
            if let Some(p) = (v as u128).checked_pow(exp) {
                return Natural::from_u128(p);
            }
        }
        Natural::from_biguint(num_traits::pow(self.to_biguint(), exp as usize))
    }
}

impl Default for Natural {
    fn default() -> Self {
        Natural::ZERO
    }
}

impl From<u64> for Natural {
    fn from(v: u64) -> Self {
        Natural::from_u64(v)
    }
}

impl From<u32> for Natural {
    fn from(v: u32) -> Self {
        Natural::from_u64(v as u64)
    }
}

impl From<u128> for Natural {
    fn from(v: u128) -> Self {
        Natural::from_u128(v)
    }
}

impl From<BigUint> for Natural {
    fn from(v: BigUint) -> Self {
        Natural::from_biguint(v)
    }
}

impl From<&Natural> for BigUint {
    fn from(v: &Natural) -> Self {
        v.to_biguint()
    }
}

impl Ord for Natural {
    fn cmp(&self, other: &Self) -> Ordering {
        match (&self.0, &other.0) {
            (Repr::Small(a), Repr::Small(b)) => a.cmp(b),
            (Repr::Small(_), Repr::Big(_)) => Ordering::Less,
            (Repr::Big(_), Repr::Small(_)) => Ordering::Greater,
            (Repr::Big(a), Repr::Big(b)) => a.cmp(b),
        }
    }
}

impl PartialOrd for Natural {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq<u64> for Natural {
    fn eq(&self, other: &u64) -> bool {
        matches!(self.0, Repr::Small(v) if v == *other)
    }
}

impl PartialOrd<u64> for Natural {
    fn partial_cmp(&self, other: &u64) -> Option<Ordering> {
        Some(match self.0 {
            Repr::Small(v) => v.cmp(other),
            Repr::Big(_) => Ordering::Greater,
        })
    }
}

impl Add for &Natural {
    type Output = Natural;
    fn add(self, rhs: &Natural) -> Natural {
        if let (Repr::Small(a), Repr::Small(b)) = (&self.0, &rhs.0) {
            return Natural::from_u128(*a as u128 + *b as u128);
        }
        Natural::from_biguint(self.to_biguint() + rhs.to_biguint())
    }
}

impl Mul for &Natural {
    type Output = Natural;
    fn mul(self, rhs: &Natural) -> Natural {
        if let (Repr::Small(a), Repr::Small(b)) = (&self.0, &rhs.0) {
            return Natural::from_u128(*a as u128 * *b as u128);
        }
        Natural::from_biguint(self.to_biguint() * rhs.to_biguint())
    }
}

/// Panics on underflow; use [`Natural::checked_sub`] when that is possible.
impl Sub for &Natural {
    type Output = Natural;
    fn sub(self, rhs: &Natural) -> Natural {
        self.checked_sub(rhs).expect("natural subtraction underflow")
    }
}

impl fmt::Display for Natural {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            Repr::Small(v) => fmt::Display::fmt(v, f),
            Repr::Big(b) => fmt::Display::fmt(b, f),
        }
    }
}

impl fmt::Debug for Natural {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Natural {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
            return Err(Error::Parse(format!("not a natural number: {s:?}")));
        }
        if let Ok(v) = s.parse::<u64>() {
            return Ok(Natural::from_u64(v));
        }
        BigUint::from_str(s)
            .map(Natural::from_biguint)
            .map_err(|e| Error::Parse(format!("{s:?}: {e}")))
    }
}

impl Serialize for Natural {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Natural {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl Zero for Natural {
    fn zero() -> Self {
        Natural::ZERO
    }
    fn is_zero(&self) -> bool {
        Natural::is_zero(self)
    }
}

impl One for Natural {
    fn one() -> Self {
        Natural::ONE
    }
}

impl Add for Natural {
    type Output = Natural;
    fn add(self, rhs: Natural) -> Natural {
        &self + &rhs
    }
}

impl Mul for Natural {
    type Output = Natural;
    fn mul(self, rhs: Natural) -> Natural {
        &self * &rhs
    }
}
