//! Scalar fields: exact rationals backed by big integers, or binary64 floats.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

pub type Rational = BigRational;

/// Relative threshold under which a float coefficient counts as zero.
pub const FLOAT_ZERO_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Rational,
    Float,
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Field::Rational => f.write_str("rational"),
            Field::Float => f.write_str("float"),
        }
    }
}

/// Field contract shared by the series and table code.
///
/// Mixing fields is impossible by construction: every container is generic
/// over a single `S`.
pub trait Scalar:
    Clone
    + fmt::Debug
    + fmt::Display
    + PartialEq
    + Send
    + Sync
    + 'static
    + Zero
    + One
    + Neg<Output = Self>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
{
    const FIELD: Field;

    fn from_rational(r: &Rational) -> Self;
    /// `None` for the exact field: floats never enter it silently.
    fn from_f64(x: f64) -> Option<Self>;
    fn from_i64(n: i64) -> Self;
    fn to_f64(&self) -> f64;
    /// Square root inside the field, if it exists (`+` branch).
    fn sqrt_exact(&self) -> Option<Self>;
    /// Exact zero test for rationals, relative test against `scale` for floats.
    fn is_negligible(&self, scale: f64) -> bool;
    fn sign(&self) -> i8;
}

impl Scalar for Rational {
    const FIELD: Field = Field::Rational;

    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }
    fn from_f64(_: f64) -> Option<Self> {
        None
    }
    fn from_i64(n: i64) -> Self {
        Rational::from_integer(BigInt::from(n))
    }
    fn to_f64(&self) -> f64 {
        rational_to_f64(self)
    }
    fn sqrt_exact(&self) -> Option<Self> {
        if self.is_negative() {
            return None;
        }
        let n = self.numer().sqrt();
        let d = self.denom().sqrt();
        if &(&n * &n) == self.numer() && &(&d * &d) == self.denom() {
            Some(Rational::new(n, d))
        } else {
            None
        }
    }
    fn is_negligible(&self, _scale: f64) -> bool {
        self.is_zero()
    }
    fn sign(&self) -> i8 {
        if self.is_zero() {
            0
        } else if self.is_positive() {
            1
        } else {
            -1
        }
    }
}

impl Scalar for f64 {
    const FIELD: Field = Field::Float;

    fn from_rational(r: &Rational) -> Self {
        rational_to_f64(r)
    }
    fn from_f64(x: f64) -> Option<Self> {
        Some(x)
    }
    fn from_i64(n: i64) -> Self {
        n as f64
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn sqrt_exact(&self) -> Option<Self> {
        if *self > 0.0 {
            Some(self.sqrt())
        } else {
            None
        }
    }
    fn is_negligible(&self, scale: f64) -> bool {
        self.abs() <= FLOAT_ZERO_TOL * scale.max(f64::MIN_POSITIVE)
    }
    fn sign(&self) -> i8 {
        if *self > 0.0 {
            1
        } else if *self < 0.0 {
            -1
        } else {
            0
        }
    }
}

/// Correctly handles numerators and denominators far outside the f64 range.
pub fn rational_to_f64(r: &Rational) -> f64 {
    if let (Some(n), Some(d)) = (r.numer().to_f64(), r.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && d != 0.0 {
            return n / d;
        }
    }
    let nb = r.numer().bits() as i64;
    let db = r.denom().bits() as i64;
    // Keep ~60 significant bits of each part before dividing.
    let ns = (nb - 60).max(0);
    let ds = (db - 60).max(0);
    let n = (r.numer() >> ns as usize).to_f64().unwrap_or(0.0);
    let d = (r.denom() >> ds as usize).to_f64().unwrap_or(1.0);
    let e = (ns - ds) as i32;
    (n / d) * 2f64.powi(e)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RationalParseError {
    #[error("empty value")]
    Empty,
    #[error("decimal value {0:?} is not an exact rational")]
    Decimal(String),
    #[error("cannot parse {0:?} as a rational")]
    Malformed(String),
    #[error("zero denominator in {0:?}")]
    ZeroDenominator(String),
}

/// Parses `p/q` or `p`. Decimal notation is rejected on purpose.
pub fn parse_rational(s: &str) -> Result<Rational, RationalParseError> {
    let s = s.trim();
    if s.is_empty() {
        return Err(RationalParseError::Empty);
    }
    if s.contains('.') || s.contains('e') || s.contains('E') {
        return Err(RationalParseError::Decimal(s.to_string()));
    }
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n: BigInt = n
        .parse()
        .map_err(|_| RationalParseError::Malformed(s.to_string()))?;
    let d: BigInt = d
        .parse()
        .map_err(|_| RationalParseError::Malformed(s.to_string()))?;
    if d.is_zero() {
        return Err(RationalParseError::ZeroDenominator(s.to_string()));
    }
    Ok(Rational::new(n, d))
}

/// Always `n/d`, reduced, with a positive denominator.
pub fn format_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Shortest text that parses back to the same f64.
pub fn format_f64(x: f64) -> String {
    format!("{x:?}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format() {
        assert_eq!(parse_rational("1/4").unwrap(), rat(1, 4));
        assert_eq!(parse_rational(" -6/8 ").unwrap(), rat(-3, 4));
        assert_eq!(parse_rational("3").unwrap(), int(3));
        assert!(matches!(parse_rational("0.25"), Err(RationalParseError::Decimal(_))));
        assert!(matches!(parse_rational("1/0"), Err(RationalParseError::ZeroDenominator(_))));
        assert_eq!(format_rational(&rat(2, -4)), "-1/2");
    }

    #[test]
    fn exact_sqrt() {
        assert_eq!(rat(9, 16).sqrt_exact(), Some(rat(3, 4)));
        assert_eq!(int(2).sqrt_exact(), None);
        assert_eq!(rat(-1, 4).sqrt_exact(), None);
    }

    #[test]
    fn huge_rational_to_float() {
        let big = Rational::new(BigInt::from(3) << 2000usize, BigInt::from(1) << 2000usize);
        assert_eq!(rational_to_f64(&big), 3.0);
        let tiny = Rational::new(BigInt::from(1), BigInt::from(1) << 1100usize);
        assert_eq!(rational_to_f64(&tiny), 0.0);
        let x = Rational::new(BigInt::from(7) << 1500usize, BigInt::from(2) << 1499usize);
        assert!((rational_to_f64(&x) - 7.0).abs() < 1e-15);
    }
}
