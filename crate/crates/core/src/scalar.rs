//! Numeric scalars: `f64` for optimisation, `BigRational` where the
//! quantities are exact polynomials in the inputs.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Ordered field used for decorations, curve weights and map parameters.
pub trait Scalar:
    Clone
    + Debug
    + PartialOrd
    + PartialEq
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
    + 'static
{
    /// True for exact arithmetic.
    const EXACT: bool;

    fn from_f64(x: f64) -> Self;
    fn to_f64(&self) -> f64;

    fn from_ratio(p: i64, q: i64) -> Self;

    fn from_rational(r: &BigRational) -> Self;

    fn abs(&self) -> Self {
        if *self < Self::zero() {
            -self.clone()
        } else {
            self.clone()
        }
    }

    /// Comparison slack: zero for exact scalars.
    fn slack(&self) -> Self;

    /// Equality up to [`Scalar::slack`].
    fn near(&self, other: &Self) -> bool {
        let d = (self.clone() - other.clone()).abs();
        let scale = if self.abs() > other.abs() { self.abs() } else { other.abs() };
        let scale = if scale < Self::one() { Self::one() } else { scale };
        d <= scale.slack()
    }

    fn is_positive(&self) -> bool {
        *self > Self::zero()
    }

    fn max_of(a: Self, b: Self) -> Self {
        if b > a {
            b
        } else {
            a
        }
    }

    fn min_of(a: Self, b: Self) -> Self {
        if b < a {
            b
        } else {
            a
        }
    }

    /// Serialisation form: plain number for floats, `"p/q"` for rationals.
    fn to_json(&self) -> serde_json::Value;
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_f64(x: f64) -> Self {
        x
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn from_ratio(p: i64, q: i64) -> Self {
        p as f64 / q as f64
    }

    fn from_rational(r: &BigRational) -> Self {
        Scalar::to_f64(r)
    }

    fn abs(&self) -> Self {
        f64::abs(*self)
    }

    fn slack(&self) -> Self {
        1e-9 * f64::abs(*self)
    }

    fn to_json(&self) -> serde_json::Value {
        // drop the sign of negative zero
        serde_json::Number::from_f64(*self + 0.0)
            .map(serde_json::Value::Number)
            .unwrap_or_else(|| serde_json::Value::String(format!("{self}")))
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn from_f64(x: f64) -> Self {
        BigRational::from_float(x).unwrap_or_else(BigRational::zero)
    }

    fn to_f64(&self) -> f64 {
        // Numerator and denominator may overflow f64 separately.
        match (self.numer().to_f64(), self.denom().to_f64()) {
            (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
            _ => {
                let shift = self.denom().bits().max(self.numer().bits()) as i64 - 900;
                let shift = shift.max(0) as usize;
                let n = (self.numer() >> shift).to_f64().unwrap_or(0.0);
                let d = (self.denom() >> shift).to_f64().unwrap_or(1.0);
                n / d
            }
        }
    }

    fn from_ratio(p: i64, q: i64) -> Self {
        BigRational::new(BigInt::from(p), BigInt::from(q))
    }

    fn from_rational(r: &BigRational) -> Self {
        r.clone()
    }

    fn abs(&self) -> Self {
        Signed::abs(self)
    }

    fn slack(&self) -> Self {
        BigRational::zero()
    }

    fn to_json(&self) -> serde_json::Value {
        serde_json::Value::String(format_rational(self))
    }
}

/// `"p/q"` text form; integers print without a denominator.
pub fn format_rational(x: &BigRational) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Parses `"p/q"`, `"p"`, or a decimal literal into an exact rational.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().ok()?;
        let q: BigInt = q.trim().parse().ok()?;
        if q.is_zero() {
            return None;
        }
        return Some(BigRational::new(p, q));
    }
    if let Ok(n) = s.parse::<BigInt>() {
        return Some(BigRational::from_integer(n));
    }
    decimal_rational(s)
}

fn decimal_rational(s: &str) -> Option<BigRational> {
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (neg, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => (true, m),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int, frac) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    let digits = format!("{int}{frac}");
    let mut n: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().ok()? };
    if neg {
        n = -n;
    }
    let scale = exp - frac.len() as i32;
    let ten = BigInt::from(10);
    let r = if scale >= 0 {
        BigRational::from_integer(n * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(n, num_traits::pow(ten, (-scale) as usize))
    };
    Some(r)
}

/// Reads a JSON number or `"p/q"` string into any scalar.
pub fn scalar_from_json<T: Scalar>(v: &serde_json::Value) -> Option<T> {
    match v {
        serde_json::Value::Number(n) => {
            if T::EXACT {
                // Use the literal text so decimals stay exact.
                parse_rational(&n.to_string()).map(|r| rational_to::<T>(&r))
            } else {
                n.as_f64().map(T::from_f64)
            }
        }
        serde_json::Value::String(s) => {
            if s == "inf" || s == "Infinity" {
                return Some(T::from_f64(f64::INFINITY));
            }
            parse_rational(s).map(|r| rational_to::<T>(&r))
        }
        _ => None,
    }
}

/// Converts an exact rational into `T` (exactly when `T` is exact).
pub fn rational_to<T: Scalar>(r: &BigRational) -> T {
    T::from_rational(r)
}

/// Relative difference `|a - b| / max(1, |a|, |b|)`.
pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / 1f64.max(a.abs()).max(b.abs())
}
