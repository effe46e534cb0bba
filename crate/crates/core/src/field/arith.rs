use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Sub};

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::{InverseTemperature, Number};
use crate::error::{Error, Result};
use crate::exact::{ln_rational, rational_to_f64};

/// Number system a field computation runs in.
pub trait Arith:
    Clone
    + Debug
    + PartialOrd
    + Zero
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
{
    const NAME: &'static str;

    fn from_rational(value: &BigRational) -> Self;

    /// `weight^{-β}` for a positive exact weight.
    fn energy_factor(weight: &BigRational, beta: InverseTemperature) -> Result<Self>;

    fn abs(self) -> Self;

    fn to_f64(&self) -> f64;

    fn to_number(&self) -> Number;
}

impl Arith for BigRational {
    const NAME: &'static str = "exact";

    fn from_rational(value: &BigRational) -> Self {
        value.clone()
    }

    fn energy_factor(weight: &BigRational, beta: InverseTemperature) -> Result<Self> {
        let exponent = beta.integral().ok_or_else(|| Error::InvalidParameter {
            name: "beta",
            reason: format!(
                "exact arithmetic needs an integral beta, got {}",
                beta.value()
            ),
        })?;
        if exponent == 0 {
            return Ok(BigRational::one());
        }
        Ok(num_traits::Pow::pow(weight, -exponent))
    }

    fn abs(self) -> Self {
        Signed::abs(&self)
    }

    fn to_f64(&self) -> f64 {
        rational_to_f64(self)
    }

    fn to_number(&self) -> Number {
        Number::exact(self)
    }
}

impl Arith for f64 {
    const NAME: &'static str = "real";

    fn from_rational(value: &BigRational) -> Self {
        rational_to_f64(value)
    }

    fn energy_factor(weight: &BigRational, beta: InverseTemperature) -> Result<Self> {
        if beta.value() == 0.0 {
            return Ok(1.0);
        }
        Ok((-beta.value() * ln_rational(weight)).exp())
    }

    fn abs(self) -> Self {
        f64::abs(self)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn to_number(&self) -> Number {
        Number::real(*self)
    }
}
