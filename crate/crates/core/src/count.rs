//! Exact counters for header-set cardinalities.
//!
//! A full 128-bit header space has 2^128 headers, one past `u128::MAX`, so
//! cardinalities are kept as 192-bit unsigned integers. All arithmetic is
//! exact; overflow and underflow panic instead of wrapping, since a wrapped
//! count would silently corrupt every downstream verdict.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Sub, SubAssign};
use std::str::FromStr;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Exact non-negative count, up to 2^192 - 1. Value is `hi * 2^128 + lo`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct BigCount {
    hi: u64,
    lo: u128,
}

impl BigCount {
    pub const ZERO: BigCount = BigCount { hi: 0, lo: 0 };
    pub const ONE: BigCount = BigCount { hi: 0, lo: 1 };

    pub fn from_u128(value: u128) -> BigCount {
        BigCount { hi: 0, lo: value }
    }

    /// 2^exp. Panics for exp > 191.
    pub fn pow2(exp: u32) -> BigCount {
        match exp {
            0..=127 => BigCount { hi: 0, lo: 1u128 << exp },
            128..=191 => BigCount { hi: 1u64 << (exp - 128), lo: 0 },
            _ => panic!("BigCount::pow2({exp}) exceeds 192 bits"),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.hi == 0 && self.lo == 0
    }

    pub fn to_u128(&self) -> Option<u128> {
        (self.hi == 0).then_some(self.lo)
    }

    pub fn checked_sub(&self, rhs: &BigCount) -> Option<BigCount> {
        let (lo, borrow) = self.lo.overflowing_sub(rhs.lo);
        let hi = self.hi.checked_sub(rhs.hi)?.checked_sub(borrow as u64)?;
        Some(BigCount { hi, lo })
    }

    fn checked_add(&self, rhs: &BigCount) -> Option<BigCount> {
        let (lo, carry) = self.lo.overflowing_add(rhs.lo);
        let hi = self.hi.checked_add(rhs.hi)?.checked_add(carry as u64)?;
        Some(BigCount { hi, lo })
    }

    /// Exact product; panics if the result exceeds 192 bits.
    pub fn checked_mul(&self, rhs: &BigCount) -> Option<BigCount> {
        let a = self.limbs();
        let b = rhs.limbs();
        let mut acc = [0u128; 6];
        for (i, &ai) in a.iter().enumerate() {
            for (j, &bj) in b.iter().enumerate() {
                acc[i + j] += (ai as u128) * (bj as u128);
                // Largest addend per slot is (2^64-1)^2 < 2^128 and at most
                // three products land in one slot before it is flushed below,
                // so flush carries every row to stay clear of u128 overflow.
            }
            let mut carry = 0u128;
            for slot in acc.iter_mut() {
                let v = *slot + carry;
                *slot = v & (u64::MAX as u128);
                carry = v >> 64;
            }
            if carry != 0 {
                return None;
            }
        }
        if acc[3] != 0 || acc[4] != 0 || acc[5] != 0 {
            return None;
        }
        Some(BigCount::from_limbs([acc[0] as u64, acc[1] as u64, acc[2] as u64]))
    }

    fn limbs(&self) -> [u64; 3] {
        [self.lo as u64, (self.lo >> 64) as u64, self.hi]
    }

    fn from_limbs(l: [u64; 3]) -> BigCount {
        BigCount { hi: l[2], lo: (l[0] as u128) | ((l[1] as u128) << 64) }
    }
}

impl Add for BigCount {
    type Output = BigCount;
    fn add(self, rhs: BigCount) -> BigCount {
        self.checked_add(&rhs).expect("BigCount overflow")
    }
}

impl AddAssign for BigCount {
    fn add_assign(&mut self, rhs: BigCount) {
        *self = *self + rhs;
    }
}

impl Sub for BigCount {
    type Output = BigCount;
    fn sub(self, rhs: BigCount) -> BigCount {
        self.checked_sub(&rhs).expect("BigCount underflow")
    }
}

impl SubAssign for BigCount {
    fn sub_assign(&mut self, rhs: BigCount) {
        *self = *self - rhs;
    }
}

impl Sum for BigCount {
    fn sum<I: Iterator<Item = BigCount>>(iter: I) -> BigCount {
        iter.fold(BigCount::ZERO, |a, b| a + b)
    }
}

impl From<u64> for BigCount {
    fn from(value: u64) -> BigCount {
        BigCount::from_u128(value as u128)
    }
}

impl fmt::Display for BigCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Decimal via repeated division by 10^19 (largest power of ten in u64).
        const CHUNK: u64 = 10_000_000_000_000_000_000;
        let mut limbs = self.limbs();
        let mut chunks: Vec<u64> = Vec::new();
        while limbs != [0, 0, 0] {
            let mut rem = 0u128;
            for limb in limbs.iter_mut().rev() {
                let cur = (rem << 64) | (*limb as u128);
                *limb = (cur / CHUNK as u128) as u64;
                rem = cur % CHUNK as u128;
            }
            chunks.push(rem as u64);
        }
        match chunks.pop() {
            None => write!(f, "0"),
            Some(top) => {
                write!(f, "{top}")?;
                for chunk in chunks.iter().rev() {
                    write!(f, "{chunk:019}")?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Debug for BigCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BigCount({self})")
    }
}

/// Error parsing a decimal count.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid count literal {literal:?}")]
pub struct ParseCountError {
    literal: String,
}

impl FromStr for BigCount {
    type Err = ParseCountError;

    fn from_str(s: &str) -> Result<BigCount, ParseCountError> {
        let err = || ParseCountError { literal: s.to_owned() };
        if s.is_empty() {
            return Err(err());
        }
        let mut acc = BigCount::ZERO;
        let ten = BigCount::from_u128(10);
        for ch in s.chars() {
            let digit = ch.to_digit(10).ok_or_else(err)?;
            acc = acc
                .checked_mul(&ten)
                .and_then(|v| v.checked_add(&BigCount::from(digit as u64)))
                .ok_or_else(err)?;
        }
        Ok(acc)
    }
}

// Counts serialize as decimal strings: 2^128 does not fit a JSON number.
impl Serialize for BigCount {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BigCount {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<BigCount, D::Error> {
        struct CountVisitor;

        impl Visitor<'_> for CountVisitor {
            type Value = BigCount;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a decimal count as string or integer")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<BigCount, E> {
                v.parse().map_err(E::custom)
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<BigCount, E> {
                Ok(BigCount::from(v))
            }
        }

        deserializer.deserialize_any(CountVisitor)
    }
}

/// Signed counter for the atom-cardinality recurrence, which can go negative
/// on collections that are not weakly complete.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub(crate) struct SignedCount {
    negative: bool,
    magnitude: BigCount,
}

impl SignedCount {
    pub(crate) const ZERO: SignedCount = SignedCount { negative: false, magnitude: BigCount::ZERO };

    pub(crate) fn positive(magnitude: BigCount) -> SignedCount {
        SignedCount { negative: false, magnitude }
    }

    pub(crate) fn is_negative(&self) -> bool {
        self.negative && !self.magnitude.is_zero()
    }

    /// The value as an unsigned count, or `None` if negative.
    pub(crate) fn to_unsigned(self) -> Option<BigCount> {
        (!self.is_negative()).then_some(self.magnitude)
    }

    pub(crate) fn add(&self, rhs: &SignedCount) -> SignedCount {
        let out = if self.negative == rhs.negative {
            SignedCount { negative: self.negative, magnitude: self.magnitude + rhs.magnitude }
        } else if self.magnitude >= rhs.magnitude {
            SignedCount { negative: self.negative, magnitude: self.magnitude - rhs.magnitude }
        } else {
            SignedCount { negative: rhs.negative, magnitude: rhs.magnitude - self.magnitude }
        };
        // Normalize zero so equality is sign-independent.
        if out.magnitude.is_zero() {
            SignedCount::ZERO
        } else {
            out
        }
    }

    pub(crate) fn sub(&self, rhs: &SignedCount) -> SignedCount {
        self.add(&SignedCount { negative: !rhs.negative, magnitude: rhs.magnitude })
    }
}
