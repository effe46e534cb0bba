//! Exact rational helpers and the mutation-rate newtype.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parse `"p/q"`, an integer, or a finite decimal such as `"2.5"` into an
/// exact rational.
pub fn parse_rational(text: &str) -> Result<BigRational> {
    let text = text.trim();
    let bad = || Error::Parse(format!("not a rational number: {text:?}"));
    if text.is_empty() {
        return Err(bad());
    }
    if let Some((num, den)) = text.split_once('/') {
        let num = BigInt::from_str(num.trim()).map_err(|_| bad())?;
        let den = BigInt::from_str(den.trim()).map_err(|_| bad())?;
        if den.is_zero() {
            return Err(Error::Parse(format!("zero denominator in {text:?}")));
        }
        return Ok(BigRational::new(num, den));
    }
    if let Some((int_part, frac_part)) = text.split_once('.') {
        if frac_part.is_empty() || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let negative = int_part.starts_with('-');
        let int_digits = int_part.trim_start_matches(['-', '+']);
        if !int_digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let digits = format!("{int_digits}{frac_part}");
        let mut num = BigInt::from_str(&digits).map_err(|_| bad())?;
        if negative {
            num = -num;
        }
        let den = num_traits::pow(BigInt::from(10u32), frac_part.len());
        return Ok(BigRational::new(num, den));
    }
    BigInt::from_str(text)
        .map(BigRational::from_integer)
        .map_err(|_| bad())
}

/// `"p/q"`, or `"p"` when the denominator is one.
pub fn format_rational(value: &BigRational) -> String {
    if value.denom().is_one() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

/// Nearest double. Handles operands far outside the `f64` range of the
/// numerator and denominator taken separately.
pub fn rational_to_f64(value: &BigRational) -> f64 {
    if let Some(x) = value.to_f64() {
        if x.is_finite() {
            return x;
        }
    }
    let num_bits = value.numer().bits() as i64;
    let den_bits = value.denom().bits() as i64;
    let shift = num_bits - den_bits;
    let scale = BigRational::from_integer(num_traits::pow(
        BigInt::from(2u32),
        shift.unsigned_abs() as usize,
    ));
    let scaled = if shift >= 0 {
        value / &scale
    } else {
        value * &scale
    };
    scaled.to_f64().unwrap_or(f64::NAN) * 2f64.powi(shift as i32)
}

/// Exact rational for a finite double.
pub fn rational_from_f64(value: f64) -> Result<BigRational> {
    BigRational::from_float(value).ok_or_else(|| Error::InvalidParameter {
        name: "value",
        reason: format!("{value} is not finite"),
    })
}

pub fn decimal_string(value: f64) -> String {
    format!("{value:e}")
}

/// Scaled mutation rate θ > 0, held exactly.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct MutationRate(BigRational);

impl MutationRate {
    pub fn new(value: BigRational) -> Result<Self> {
        if !value.is_positive() {
            return Err(Error::InvalidParameter {
                name: "theta",
                reason: format!("must be positive, got {}", format_rational(&value)),
            });
        }
        Ok(Self(value))
    }

    pub fn from_ratio(numer: i64, denom: i64) -> Result<Self> {
        if denom == 0 {
            return Err(Error::Parse("zero denominator".into()));
        }
        Self::new(BigRational::new(numer.into(), denom.into()))
    }

    pub fn integer(value: i64) -> Result<Self> {
        Self::from_ratio(value, 1)
    }

    pub fn value(&self) -> &BigRational {
        &self.0
    }

    pub fn to_f64(&self) -> f64 {
        rational_to_f64(&self.0)
    }

    pub fn ln(&self) -> f64 {
        ln_rational(&self.0)
    }
}

impl FromStr for MutationRate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::new(parse_rational(s)?)
    }
}

impl TryFrom<String> for MutationRate {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<MutationRate> for String {
    fn from(rate: MutationRate) -> String {
        format_rational(&rate.0)
    }
}

impl fmt::Display for MutationRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_rational(&self.0))
    }
}

/// Natural log of a positive rational, computed from numerator and
/// denominator separately so huge operands do not overflow.
pub fn ln_rational(value: &BigRational) -> f64 {
    ln_bigint(value.numer()) - ln_bigint(value.denom())
}

fn ln_bigint(value: &BigInt) -> f64 {
    let bits = value.bits();
    if bits < 1000 {
        return value.to_f64().map(f64::ln).unwrap_or(f64::NAN);
    }
    let shift = bits - 64;
    let top = (value >> shift).to_f64().unwrap_or(f64::NAN);
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// Serde adapter writing rationals as `"p/q"` strings.
pub mod rational_string {
    use num_rational::BigRational;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &BigRational, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&super::format_rational(value))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        deserializer: D,
    ) -> Result<BigRational, D::Error> {
        let text = String::deserialize(deserializer)?;
        super::parse_rational(&text).map_err(serde::de::Error::custom)
    }
}

pub(crate) fn factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}
