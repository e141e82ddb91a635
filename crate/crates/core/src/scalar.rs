//! Numeric tower: every quantity in the crate is generic over [`Scalar`],
//! with an exact-rational instance for verification work and a 64-bit float
//! instance for sampling work.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Exact arbitrary-precision rational.
pub type Rational = BigRational;

/// Number type usable as resource values, rule values, and efficiency ratios.
///
/// The two instances are [`Rational`] (exact; `EXACT = true`) and `f64`.
/// Arithmetic is by value; games here are desk-scale and clarity wins.
pub trait Scalar:
    Num + Signed + Clone + PartialOrd + fmt::Debug + fmt::Display + Send + Sync + 'static
{
    /// Whether arithmetic is exact, i.e. equality comparisons carry proof weight.
    const EXACT: bool;

    fn from_u32(value: u32) -> Self;

    /// `numer / denom`. `denom` must be nonzero.
    fn from_ratio(numer: i64, denom: i64) -> Self;

    fn to_f64(&self) -> f64;

    /// Adopts a finite float exactly (every finite float is rational).
    fn from_f64_lossless(value: f64) -> Self;

    /// Parses `"p/q"`, a plain decimal such as `"0.25"`, or an integer.
    fn parse_number(text: &str) -> Result<Self>;

    /// Round-trippable text form. Rationals render as an exact decimal when
    /// one exists and `"p/q"` otherwise; floats render with the shortest
    /// representation that parses back identically.
    fn render(&self) -> String;

    /// The prefix sum `sum_{t=1}^{terms} 1/t!`. The float instance uses
    /// compensated summation since this feeds the Pareto rule's closed form.
    fn recip_factorial_sum(terms: u32) -> Self;
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_u32(value: u32) -> Self {
        value as f64
    }

    fn from_ratio(numer: i64, denom: i64) -> Self {
        debug_assert!(denom != 0);
        numer as f64 / denom as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn from_f64_lossless(value: f64) -> Self {
        value
    }

    fn parse_number(text: &str) -> Result<Self> {
        let text = text.trim();
        if let Some((p, q)) = text.split_once('/') {
            let p: f64 = p
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad numerator in {text:?}")))?;
            let q: f64 = q
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad denominator in {text:?}")))?;
            if q == 0.0 {
                return Err(Error::Parse(format!("zero denominator in {text:?}")));
            }
            return Ok(p / q);
        }
        let value: f64 = text
            .parse()
            .map_err(|_| Error::Parse(format!("not a number: {text:?}")))?;
        if !value.is_finite() {
            return Err(Error::Parse(format!("non-finite number: {text:?}")));
        }
        Ok(value)
    }

    fn render(&self) -> String {
        format!("{self}")
    }

    fn recip_factorial_sum(terms: u32) -> Self {
        // Kahan summation of 1/1! + 1/2! + ... + 1/terms!.
        let mut sum = 0.0f64;
        let mut compensation = 0.0f64;
        let mut term = 1.0f64;
        for t in 1..=terms {
            term /= t as f64;
            let y = term - compensation;
            let fresh = sum + y;
            compensation = (fresh - sum) - y;
            sum = fresh;
        }
        sum
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn from_u32(value: u32) -> Self {
        Rational::from_integer(BigInt::from(value))
    }

    fn from_ratio(numer: i64, denom: i64) -> Self {
        debug_assert!(denom != 0);
        Rational::new(BigInt::from(numer), BigInt::from(denom))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn from_f64_lossless(value: f64) -> Self {
        Rational::from_float(value).expect("finite float")
    }

    fn parse_number(text: &str) -> Result<Self> {
        let text = text.trim();
        if let Some((p, q)) = text.split_once('/') {
            let p: BigInt = p
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad numerator in {text:?}")))?;
            let q: BigInt = q
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad denominator in {text:?}")))?;
            if q.is_zero() {
                return Err(Error::Parse(format!("zero denominator in {text:?}")));
            }
            return Ok(Rational::new(p, q));
        }
        parse_decimal(text)
    }

    fn render(&self) -> String {
        match exact_decimal(self) {
            Some(decimal) => decimal,
            None => format!("{self}"),
        }
    }

    fn recip_factorial_sum(terms: u32) -> Self {
        let mut sum = Rational::zero();
        let mut term = Rational::one();
        for t in 1..=terms {
            term /= Rational::from_u32(t);
            sum += term.clone();
        }
        sum
    }
}

/// Parses a plain decimal or integer literal into an exact rational.
fn parse_decimal(text: &str) -> Result<Rational> {
    let (sign, digits) = match text.strip_prefix('-') {
        Some(rest) => (-1, rest),
        None => (1, text.strip_prefix('+').unwrap_or(text)),
    };
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((i, f)) => (i, f),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(Error::Parse(format!("not a number: {text:?}")));
    }
    let all_digits = |s: &str| s.chars().all(|c| c.is_ascii_digit());
    if !all_digits(int_part) || !all_digits(frac_part) {
        return Err(Error::Parse(format!("not a number: {text:?}")));
    }
    let joined = format!("{int_part}{frac_part}");
    let numer: BigInt = if joined.is_empty() {
        BigInt::zero()
    } else {
        joined
            .parse()
            .map_err(|_| Error::Parse(format!("not a number: {text:?}")))?
    };
    let denom = BigInt::from(10u32).pow(frac_part.len() as u32);
    Ok(Rational::new(BigInt::from(sign) * numer, denom))
}

/// Exact decimal expansion when the reduced denominator is of the form
/// 2^a * 5^b; `None` otherwise.
fn exact_decimal(value: &Rational) -> Option<String> {
    let mut denom = value.denom().clone();
    if denom.is_one() {
        return Some(value.numer().to_string());
    }
    let mut twos = 0u32;
    let mut fives = 0u32;
    let two = BigInt::from(2u32);
    let five = BigInt::from(5u32);
    while (&denom % &two).is_zero() {
        denom /= &two;
        twos += 1;
    }
    while (&denom % &five).is_zero() {
        denom /= &five;
        fives += 1;
    }
    if !denom.is_one() {
        return None;
    }
    let places = twos.max(fives);
    let scaled = (value.numer() * BigInt::from(10u32).pow(places)) / value.denom();
    let negative = scaled.is_negative();
    let mut digits = scaled.abs().to_string();
    let places = places as usize;
    if digits.len() <= places {
        digits = format!("{}{}", "0".repeat(places - digits.len() + 1), digits);
    }
    let split = digits.len() - places;
    let mut out = String::new();
    if negative {
        out.push('-');
    }
    out.push_str(&digits[..split]);
    out.push('.');
    out.push_str(&digits[split..]);
    Some(out)
}

/// `n!` in the requested number type.
pub fn factorial<S: Scalar>(n: u32) -> S {
    (1..=n).fold(S::one(), |acc, i| acc * S::from_u32(i))
}

/// The exact rational carried by an `f64` (every finite float is rational).
pub fn rational_from_f64(value: f64) -> Result<Rational> {
    Rational::from_float(value)
        .ok_or_else(|| Error::InvalidInput(format!("non-finite float {value}")))
}
