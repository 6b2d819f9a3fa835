//! Numeric backends for probabilities and beliefs.
//!
//! Everything that touches model probabilities, beliefs or vertex weights is
//! generic over [`Scalar`]. Two backends exist: arbitrary-precision rationals
//! ([`Rational`]), which make belief updates and triangulations bit-exact, and
//! `f64`, which is what large benchmark runs use.

use std::fmt;
use std::hash::Hash;
use std::ops::{Add, Div, Mul, Sub};
use std::str::FromStr;

use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};

pub type Rational = BigRational;

/// Float beliefs are canonicalised on this grid before interning.
pub const FLOAT_KEY_SCALE: f64 = 1e9;

/// Tolerance for row sums in float mode.
pub const FLOAT_ROW_TOLERANCE: f64 = 1e-12;

/// Observation probabilities below this are pruned in float mode.
pub const FLOAT_PRUNE_THRESHOLD: f64 = 1e-14;

pub trait Scalar:
    Clone
    + fmt::Debug
    + fmt::Display
    + PartialEq
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
{
    /// Hashable identity used for belief interning.
    type Key: Clone + Eq + Hash + Ord + fmt::Debug + Send + Sync;

    /// True for the rational backend.
    const EXACT: bool;
    const NAME: &'static str;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_ratio(num: i64, den: i64) -> Self;
    fn from_int(n: i64) -> Self {
        Self::from_ratio(n, 1)
    }
    /// Exact conversion for rationals (binary expansion of the float).
    fn from_f64(x: f64) -> Self;
    fn to_f64(&self) -> f64;
    /// Accepts `n/d`, integers and plain or scientific decimals.
    fn parse(text: &str) -> Option<Self>;
    /// Text form that [`Scalar::parse`] reads back to the same value.
    fn render(&self) -> String;
    fn floor(&self) -> Self;
    fn is_zero(&self) -> bool;
    fn key(&self) -> Self::Key;
    /// Row-sum acceptance: exact equality or the float tolerance.
    fn is_one_within_tolerance(&self) -> bool;
    /// Mass that should be dropped from a distribution.
    fn is_negligible(&self) -> bool;
    /// Float mode snaps values within 1e-9 of an integer onto it.
    fn snap_integer(&self) -> Self;

    fn is_positive(&self) -> bool {
        *self > Self::zero()
    }

    fn min_of(a: Self, b: Self) -> Self {
        if b < a {
            b
        } else {
            a
        }
    }

    fn max_of(a: Self, b: Self) -> Self {
        if b > a {
            b
        } else {
            a
        }
    }
}

impl Scalar for Rational {
    type Key = Rational;
    const EXACT: bool = true;
    const NAME: &'static str = "exact";

    fn zero() -> Self {
        Zero::zero()
    }

    fn one() -> Self {
        One::one()
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn from_f64(x: f64) -> Self {
        BigRational::from_float(x).expect("finite float")
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or_else(|| {
            if self.is_negative() {
                f64::NEG_INFINITY
            } else {
                f64::INFINITY
            }
        })
    }

    fn parse(text: &str) -> Option<Self> {
        let text = text.trim();
        if text.contains('/') {
            let value = BigRational::from_str(text).ok()?;
            return Some(value);
        }
        parse_decimal(text)
    }

    fn render(&self) -> String {
        if self.is_integer() {
            self.numer().to_string()
        } else {
            format!("{}/{}", self.numer(), self.denom())
        }
    }

    fn floor(&self) -> Self {
        BigRational::floor(self)
    }

    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }

    fn key(&self) -> Self::Key {
        self.clone()
    }

    fn is_one_within_tolerance(&self) -> bool {
        One::is_one(self)
    }

    fn is_negligible(&self) -> bool {
        Zero::is_zero(self)
    }

    fn snap_integer(&self) -> Self {
        self.clone()
    }
}

/// Exact decimal parsing: `-12.5e-3` becomes `-1/80`.
fn parse_decimal(text: &str) -> Option<Rational> {
    let (mantissa, exponent) = match text.find(['e', 'E']) {
        Some(pos) => (&text[..pos], text[pos + 1..].parse::<i32>().ok()?),
        None => (text, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = match digits.find('.') {
        Some(pos) => (&digits[..pos], &digits[pos + 1..]),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part
        .chars()
        .chain(frac_part.chars())
        .all(|c| c.is_ascii_digit())
    {
        return None;
    }
    let all_digits = format!("{int_part}{frac_part}");
    let numer = BigInt::from_str(if all_digits.is_empty() {
        "0"
    } else {
        &all_digits
    })
    .ok()?;
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let mut value = if scale >= 0 {
        BigRational::from_integer(numer * num::pow(ten, scale as usize))
    } else {
        BigRational::new(numer, num::pow(ten, (-scale) as usize))
    };
    if negative {
        value = -value;
    }
    Some(value)
}

impl Scalar for f64 {
    type Key = i64;
    const EXACT: bool = false;
    const NAME: &'static str = "float";

    fn zero() -> Self {
        0.0
    }

    fn one() -> Self {
        1.0
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn from_f64(x: f64) -> Self {
        x
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn parse(text: &str) -> Option<Self> {
        let text = text.trim();
        if let Some((n, d)) = text.split_once('/') {
            let n: f64 = n.trim().parse().ok()?;
            let d: f64 = d.trim().parse().ok()?;
            if d == 0.0 {
                return None;
            }
            return Some(n / d);
        }
        let value: f64 = text.parse().ok()?;
        value.is_finite().then_some(value)
    }

    fn render(&self) -> String {
        format!("{self}")
    }

    fn floor(&self) -> Self {
        f64::floor(*self)
    }

    fn is_zero(&self) -> bool {
        *self == 0.0
    }

    fn key(&self) -> Self::Key {
        (self * FLOAT_KEY_SCALE).round() as i64
    }

    fn is_one_within_tolerance(&self) -> bool {
        (self - 1.0).abs() <= FLOAT_ROW_TOLERANCE
    }

    fn is_negligible(&self) -> bool {
        self.abs() < FLOAT_PRUNE_THRESHOLD
    }

    fn snap_integer(&self) -> Self {
        let rounded = self.round();
        if (self - rounded).abs() < 1.0 / FLOAT_KEY_SCALE {
            rounded
        } else {
            *self
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    #[test]
    fn rational_parse_forms() {
        assert_eq!(Rational::parse("3/5"), Some(q(3, 5)));
        assert_eq!(Rational::parse("0.25"), Some(q(1, 4)));
        assert_eq!(Rational::parse("1"), Some(q(1, 1)));
        assert_eq!(Rational::parse(".5"), Some(q(1, 2)));
        assert_eq!(Rational::parse("-12.5e-3"), Some(q(-1, 80)));
        assert_eq!(Rational::parse("1e2"), Some(q(100, 1)));
        assert_eq!(Rational::parse("abc"), None);
        assert_eq!(Rational::parse("."), None);
    }

    #[test]
    fn render_parses_back() {
        for value in [q(14, 27), q(0, 1), q(7, 1)] {
            assert_eq!(Rational::parse(&value.render()), Some(value));
        }
        for value in [0.1_f64, 1.0 / 3.0, 1e-20, 0.75] {
            assert_eq!(f64::parse(&value.render()), Some(value));
        }
    }

    #[test]
    fn float_parse_fraction() {
        assert_eq!(f64::parse("1/4"), Some(0.25));
        assert_eq!(f64::parse("1/0"), None);
    }

    #[test]
    fn float_snap() {
        assert_eq!((2.0 - 1e-12).snap_integer(), 2.0);
        assert_eq!(2.3_f64.snap_integer(), 2.3);
    }
}
