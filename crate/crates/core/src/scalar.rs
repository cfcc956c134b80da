//! Scalar abstraction for the floating-point kernels.
//!
//! The energy kernels, the limit shape and the quadrature routines are written
//! once against [`Real`] and instantiated for `f32` and `f64`. Slopes can be
//! supplied as exact rationals and are converted at the integration boundary.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_rational::Rational64;
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

use crate::error::{Error, Result};

pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Sum + Send + Sync + 'static
{
    /// Lossy constant conversion; every literal used by the kernels is representable.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal fits the scalar type")
    }

    #[inline]
    fn from_int(i: i64) -> Self {
        Self::from_i64(i).expect("integer fits the scalar type")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// A slope in `[-1, 1]`, kept as an exact rational when it was given as one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Slope {
    Exact(Rational64),
    Float(f64),
}

impl Slope {
    /// Parses `"1/3"`, `"-0.25"` or `"1"`; decimals with at most 12 fractional
    /// digits are kept exact.
    pub fn parse(text: &str) -> Result<Self> {
        let t = text.trim();
        let bad = || Error::Validation(format!("cannot parse slope {text:?}"));
        let slope = if let Some((num, den)) = t.split_once('/') {
            let num: i64 = num.trim().parse().map_err(|_| bad())?;
            let den: i64 = den.trim().parse().map_err(|_| bad())?;
            if den == 0 {
                return Err(bad());
            }
            Slope::Exact(Rational64::new(num, den))
        } else if let Ok(i) = t.parse::<i64>() {
            Slope::Exact(Rational64::from_integer(i))
        } else {
            let value: f64 = t.parse().map_err(|_| bad())?;
            match decimal_to_ratio(t) {
                Some(r) => Slope::Exact(r),
                None => Slope::Float(value),
            }
        };
        let v = slope.value::<f64>();
        if !v.is_finite() || v.abs() > 1.0 {
            return Err(Error::Validation(format!("slope {text} outside [-1, 1]")));
        }
        Ok(slope)
    }

    pub fn value<T: Real>(&self) -> T {
        match *self {
            Slope::Exact(r) => T::from_int(*r.numer()) / T::from_int(*r.denom()),
            Slope::Float(x) => T::lit(x),
        }
    }

    pub fn negated(&self) -> Self {
        match *self {
            Slope::Exact(r) => Slope::Exact(-r),
            Slope::Float(x) => Slope::Float(-x),
        }
    }
}

impl From<f64> for Slope {
    fn from(x: f64) -> Self {
        Slope::Float(x)
    }
}

fn decimal_to_ratio(t: &str) -> Option<Rational64> {
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let (int_part, frac_part) = body.split_once('.')?;
    if frac_part.len() > 12 || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let int_val: i64 = if int_part.is_empty() { 0 } else { int_part.parse().ok()? };
    let frac_val: i64 = if frac_part.is_empty() { 0 } else { frac_part.parse().ok()? };
    let den = 10i64.checked_pow(frac_part.len() as u32)?;
    let num = int_val.checked_mul(den)?.checked_add(frac_val)?;
    Some(Rational64::new(if neg { -num } else { num }, den))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_rationals_and_decimals() {
        assert_eq!(Slope::parse("1/2").unwrap(), Slope::Exact(Rational64::new(1, 2)));
        assert_eq!(Slope::parse("-0.25").unwrap(), Slope::Exact(Rational64::new(-1, 4)));
        assert_eq!(Slope::parse("1").unwrap().value::<f64>(), 1.0);
        assert_eq!(Slope::parse("0.3").unwrap().value::<f64>(), 0.3);
        assert!(Slope::parse("3/2").is_err());
        assert!(Slope::parse("abc").is_err());
        assert!(Slope::parse("1/0").is_err());
    }

    #[test]
    fn negation_is_exact() {
        let s = Slope::parse("2/3").unwrap();
        assert_eq!(s.negated().value::<f64>(), -s.value::<f64>());
    }
}
