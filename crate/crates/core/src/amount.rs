//! Exact integer amounts.
//!
//! BSQ is carried as centi-BSQ (two fraction digits) so that supply and
//! conservation arithmetic never touches floating point.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Centi-BSQ per BSQ.
pub const CENTI_PER_BSQ: u64 = 100;

/// An amount of BSQ in centi-BSQ.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct BsqAmount(pub u64);

/// An amount of bitcoin in satoshi.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct SatAmount(pub u64);

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AmountParseError {
    #[error("empty amount")]
    Empty,
    #[error("invalid amount {0:?}: expected digits with at most two fraction digits")]
    Malformed(String),
    #[error("amount {0:?} overflows")]
    Overflow(String),
}

impl BsqAmount {
    pub const ZERO: BsqAmount = BsqAmount(0);

    pub fn from_centi(centi: u64) -> Self {
        BsqAmount(centi)
    }

    pub fn from_bsq(whole: u64) -> Self {
        BsqAmount(whole * CENTI_PER_BSQ)
    }

    pub fn centi(self) -> u64 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    pub fn checked_add(self, other: BsqAmount) -> Option<BsqAmount> {
        self.0.checked_add(other.0).map(BsqAmount)
    }

    pub fn checked_sub(self, other: BsqAmount) -> Option<BsqAmount> {
        self.0.checked_sub(other.0).map(BsqAmount)
    }

    /// Lossy conversion for ratios and display-only scaling.
    pub fn as_bsq_f64(self) -> f64 {
        self.0 as f64 / CENTI_PER_BSQ as f64
    }
}

impl fmt::Display for BsqAmount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}.{:02}",
            self.0 / CENTI_PER_BSQ,
            self.0 % CENTI_PER_BSQ
        )
    }
}

impl FromStr for BsqAmount {
    type Err = AmountParseError;

    /// Accepts `3000`, `3000.5` and `3000.00`; rejects signs, exponents and
    /// more than two fraction digits.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() {
            return Err(AmountParseError::Empty);
        }
        let (whole, frac) = match s.split_once('.') {
            Some((w, f)) => (w, f),
            None => (s, ""),
        };
        let digits = |part: &str| part.bytes().all(|b| b.is_ascii_digit());
        if whole.is_empty() || !digits(whole) || !digits(frac) || frac.len() > 2 {
            return Err(AmountParseError::Malformed(s.to_string()));
        }
        if s.ends_with('.') {
            return Err(AmountParseError::Malformed(s.to_string()));
        }
        let overflow = || AmountParseError::Overflow(s.to_string());
        let whole: u64 = whole.parse().map_err(|_| overflow())?;
        let frac_centi = match frac.len() {
            0 => 0,
            1 => frac.parse::<u64>().unwrap() * 10,
            _ => frac.parse::<u64>().unwrap(),
        };
        whole
            .checked_mul(CENTI_PER_BSQ)
            .and_then(|c| c.checked_add(frac_centi))
            .map(BsqAmount)
            .ok_or_else(overflow)
    }
}

impl Add for BsqAmount {
    type Output = BsqAmount;

    /// Panics on overflow; corpus totals are validated in `u128` first.
    fn add(self, rhs: BsqAmount) -> BsqAmount {
        self.checked_add(rhs).expect("BSQ amount overflow")
    }
}

impl AddAssign for BsqAmount {
    fn add_assign(&mut self, rhs: BsqAmount) {
        *self = *self + rhs;
    }
}

impl Sum for BsqAmount {
    fn sum<I: Iterator<Item = BsqAmount>>(iter: I) -> BsqAmount {
        iter.fold(BsqAmount::ZERO, Add::add)
    }
}

impl<'a> Sum<&'a BsqAmount> for BsqAmount {
    fn sum<I: Iterator<Item = &'a BsqAmount>>(iter: I) -> BsqAmount {
        iter.copied().sum()
    }
}

impl fmt::Display for SatAmount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}
