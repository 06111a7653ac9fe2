//! Exact rational scores.
//!
//! Every score the judge computes is an exact rational so that normalized
//! optimization scores can be recomputed any number of times without drift.
//! At interfaces a score is shown as a decimal with six fractional digits.
//! The JSON encoding uses that decimal when it is exact and falls back to the
//! `p/q` fraction otherwise, so decoding always restores the original value.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, Div, Mul, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

const DECIMAL_DIGITS: u32 = 6;

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Score(BigRational);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid score literal `{0}`")]
pub struct ParseScoreError(pub String);

impl Score {
    pub fn zero() -> Self {
        Score(BigRational::zero())
    }

    pub fn from_int(value: i64) -> Self {
        Score(BigRational::from_integer(BigInt::from(value)))
    }

    /// `numer / denom`; panics when `denom` is zero.
    pub fn ratio(numer: i64, denom: i64) -> Self {
        Score(BigRational::new(BigInt::from(numer), BigInt::from(denom)))
    }

    pub fn from_rational(value: BigRational) -> Self {
        Score(value)
    }

    pub fn as_rational(&self) -> &BigRational {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn min(self, other: Score) -> Score {
        std::cmp::min(self, other)
    }

    pub fn checked_div(&self, other: &Score) -> Option<Score> {
        if other.is_zero() {
            None
        } else {
            Some(Score(&self.0 / &other.0))
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    /// True when the six-digit decimal rendering is exact.
    pub fn is_decimal_exact(&self) -> bool {
        let scale = BigInt::from(10u32).pow(DECIMAL_DIGITS);
        (scale % self.0.denom()).is_zero()
    }

    /// Decimal rendering with exactly six fractional digits, rounding half
    /// away from zero.
    pub fn to_decimal(&self) -> String {
        let scale = BigInt::from(10u32).pow(DECIMAL_DIGITS);
        let scaled = self.0.abs() * BigRational::from_integer(scale.clone());
        let rounded = (scaled + BigRational::new(BigInt::one(), BigInt::from(2))).floor();
        let units = rounded.to_integer();
        let (int_part, frac_part) = units.div_rem(&scale);
        let sign = if self.0.is_negative() && !units.is_zero() {
            "-"
        } else {
            ""
        };
        format!(
            "{sign}{int_part}.{frac:0>width$}",
            frac = frac_part.to_string(),
            width = DECIMAL_DIGITS as usize
        )
    }

    fn to_wire(&self) -> String {
        if self.is_decimal_exact() {
            self.to_decimal()
        } else {
            format!("{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Display for Score {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_decimal())
    }
}

impl fmt::Debug for Score {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Score({})", self.to_wire())
    }
}

impl FromStr for Score {
    type Err = ParseScoreError;

    /// Accepts integers, decimals (`-12.5`) and fractions (`7/3`).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseScoreError(s.to_string());
        let text = s.trim();
        if text.is_empty() {
            return Err(err());
        }
        if let Some((numer, denom)) = text.split_once('/') {
            let numer: BigInt = numer.trim().parse().map_err(|_| err())?;
            let denom: BigInt = denom.trim().parse().map_err(|_| err())?;
            if denom.is_zero() {
                return Err(err());
            }
            return Ok(Score(BigRational::new(numer, denom)));
        }
        let (negative, body) = match text.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, text.strip_prefix('+').unwrap_or(text)),
        };
        let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(err());
        }
        if !int_part.bytes().all(|b| b.is_ascii_digit())
            || !frac_part.bytes().all(|b| b.is_ascii_digit())
        {
            return Err(err());
        }
        let digits = format!("{int_part}{frac_part}");
        let numer: BigInt = if digits.is_empty() {
            BigInt::zero()
        } else {
            digits.parse().map_err(|_| err())?
        };
        let denom = BigInt::from(10u32).pow(frac_part.len() as u32);
        let value = BigRational::new(numer, denom);
        Ok(Score(if negative { -value } else { value }))
    }
}

impl Serialize for Score {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_wire())
    }
}

impl<'de> Deserialize<'de> for Score {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Wire {
            Text(String),
            Int(i64),
        }
        match Wire::deserialize(deserializer)? {
            Wire::Text(text) => text.parse().map_err(serde::de::Error::custom),
            Wire::Int(value) => Ok(Score::from_int(value)),
        }
    }
}

impl From<u64> for Score {
    fn from(value: u64) -> Self {
        Score(BigRational::from_integer(BigInt::from(value)))
    }
}

impl From<i64> for Score {
    fn from(value: i64) -> Self {
        Score::from_int(value)
    }
}

impl Add for Score {
    type Output = Score;
    fn add(self, rhs: Score) -> Score {
        Score(self.0 + rhs.0)
    }
}

impl<'a> Add<&'a Score> for Score {
    type Output = Score;
    fn add(self, rhs: &'a Score) -> Score {
        Score(self.0 + &rhs.0)
    }
}

impl Sub for Score {
    type Output = Score;
    fn sub(self, rhs: Score) -> Score {
        Score(self.0 - rhs.0)
    }
}

impl Mul for Score {
    type Output = Score;
    fn mul(self, rhs: Score) -> Score {
        Score(self.0 * rhs.0)
    }
}

impl<'a> Mul<&'a Score> for &'a Score {
    type Output = Score;
    fn mul(self, rhs: &'a Score) -> Score {
        Score(&self.0 * &rhs.0)
    }
}

/// Panics on division by zero; use [`Score::checked_div`] when the divisor
/// is not known to be non-zero.
impl Div for Score {
    type Output = Score;
    fn div(self, rhs: Score) -> Score {
        Score(self.0 / rhs.0)
    }
}

impl Sum for Score {
    fn sum<I: Iterator<Item = Score>>(iter: I) -> Score {
        iter.fold(Score::zero(), |acc, s| acc + s)
    }
}

impl<'a> Sum<&'a Score> for Score {
    fn sum<I: Iterator<Item = &'a Score>>(iter: I) -> Score {
        iter.fold(Score::zero(), |acc, s| acc + s)
    }
}

impl PartialEq<i64> for Score {
    fn eq(&self, other: &i64) -> bool {
        self.0 == BigRational::from_integer(BigInt::from(*other))
    }
}

impl PartialOrd<i64> for Score {
    fn partial_cmp(&self, other: &i64) -> Option<Ordering> {
        self.0
            .partial_cmp(&BigRational::from_integer(BigInt::from(*other)))
    }
}
