//! Exact arithmetic helpers.
//!
//! Rational inputs (probabilities, conductances) are parsed from decimal or
//! `a/b` strings. The hot loops of the exact engines never touch
//! [`BigRational`]: they accumulate integer numerators over a denominator
//! that is fixed up front, first in `u128` and, on overflow, in [`BigUint`].

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Parses `"3"`, `"-0.25"`, `"1/3"` or `"1.5e-2"` into an exact rational.
pub fn parse_rational(text: &str) -> Result<BigRational> {
    let s = text.trim();
    let bad = || Error::InvalidNumber(text.to_string());
    if let Some((num, den)) = s.split_once('/') {
        let num = parse_rational(num)?;
        let den = parse_rational(den)?;
        if den.is_zero() {
            return Err(bad());
        }
        return Ok(num / den);
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => {
            let exp: i64 = s[pos + 1..].parse().map_err(|_| bad())?;
            (&s[..pos], exp)
        }
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    let all_digits = format!("{int_part}{frac_part}");
    let numer: BigInt = all_digits.parse().map_err(|_| bad())?;
    let scale = exponent - frac_part.len() as i64;
    if scale.unsigned_abs() > 4096 {
        return Err(bad());
    }
    let ten = BigInt::from(10u32);
    let mut value = if scale >= 0 {
        BigRational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(numer, num_traits::pow(ten, (-scale) as usize))
    };
    if negative {
        value = -value;
    }
    Ok(value)
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    if let (Some(n), Some(d)) = (r.numer().to_f64(), r.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && d != 0.0 {
            return n / d;
        }
    }
    // Very large numerator/denominator: scale down both by the same power of two.
    let shift = r.numer().bits().max(r.denom().bits()).saturating_sub(1000);
    let n = (r.numer() >> shift as usize).to_f64().unwrap_or(f64::NAN);
    let d = (r.denom() >> shift as usize).to_f64().unwrap_or(f64::NAN);
    n / d
}

pub fn ratio(num: impl Into<BigInt>, den: impl Into<BigInt>) -> BigRational {
    BigRational::new(num.into(), den.into())
}

/// A number carried as a float, optionally with its exact rational value.
#[derive(Clone, Debug, PartialEq)]
pub struct Value {
    pub float: f64,
    pub exact: Option<BigRational>,
}

impl Value {
    pub fn float(float: f64) -> Self {
        Value { float, exact: None }
    }

    pub fn exact(exact: BigRational) -> Self {
        Value {
            float: rational_to_f64(&exact),
            exact: Some(exact),
        }
    }

    pub fn numer_denom(&self) -> Option<(String, String)> {
        self.exact
            .as_ref()
            .map(|r| (r.numer().to_string(), r.denom().to_string()))
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.exact {
            Some(r) => write!(f, "{r}"),
            None => write!(f, "{}", self.float),
        }
    }
}

/// Percolation parameter. Parsed from text it keeps its exact rational value.
#[derive(Clone, Debug, PartialEq)]
pub struct Probability(Value);

impl Probability {
    /// Strictly inside (0, 1).
    pub fn open_unit(value: Value) -> Result<Self> {
        if !(value.float > 0.0 && value.float < 1.0) {
            return Err(Error::InvalidProbability(value.to_string()));
        }
        Ok(Probability(value))
    }

    /// Anywhere in [0, 1].
    pub fn closed_unit(value: Value) -> Result<Self> {
        if !(0.0..=1.0).contains(&value.float) {
            return Err(Error::InvalidProbability(value.to_string()));
        }
        Ok(Probability(value))
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::open_unit(Value::exact(parse_rational(text)?))
    }

    pub fn from_f64(p: f64) -> Result<Self> {
        Self::open_unit(Value::float(p))
    }

    /// `1/m`, the parameter matched to an `m`-state lamp.
    pub fn reciprocal(m: u32) -> Self {
        Probability(Value::exact(ratio(1, m)))
    }

    pub fn value(&self) -> f64 {
        self.0.float
    }

    pub fn exact(&self) -> Option<&BigRational> {
        self.0.exact.as_ref()
    }

    pub fn as_value(&self) -> &Value {
        &self.0
    }
}

impl fmt::Display for Probability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl Serialize for Probability {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.value())
    }
}

/// Float or exact arithmetic for the return-probability engines.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Arithmetic {
    #[default]
    Float,
    Rational,
}

/// Semiring used by the exact and float engines. Integer implementations
/// report overflow by returning `None`.
pub trait Accumulator: Clone + Send + Sync + Sized {
    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    /// `self += a * b`
    fn add_product(&mut self, a: &Self, b: &Self) -> Option<()>;
    fn add(&mut self, a: &Self) -> Option<()>;
    fn mul(&self, b: &Self) -> Option<Self>;
}

impl Accumulator for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn add_product(&mut self, a: &Self, b: &Self) -> Option<()> {
        *self += a * b;
        Some(())
    }
    fn add(&mut self, a: &Self) -> Option<()> {
        *self += a;
        Some(())
    }
    fn mul(&self, b: &Self) -> Option<Self> {
        Some(self * b)
    }
}

impl Accumulator for u128 {
    fn zero() -> Self {
        0
    }
    fn one() -> Self {
        1
    }
    fn is_zero(&self) -> bool {
        *self == 0
    }
    fn add_product(&mut self, a: &Self, b: &Self) -> Option<()> {
        *self = self.checked_add(a.checked_mul(*b)?)?;
        Some(())
    }
    fn add(&mut self, a: &Self) -> Option<()> {
        *self = self.checked_add(*a)?;
        Some(())
    }
    fn mul(&self, b: &Self) -> Option<Self> {
        self.checked_mul(*b)
    }
}

impl Accumulator for BigUint {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn add_product(&mut self, a: &Self, b: &Self) -> Option<()> {
        if !Zero::is_zero(a) && !Zero::is_zero(b) {
            *self += a * b;
        }
        Some(())
    }
    fn add(&mut self, a: &Self) -> Option<()> {
        *self += a;
        Some(())
    }
    fn mul(&self, b: &Self) -> Option<Self> {
        Some(self * b)
    }
}

/// Converts integer weights to `u128` if they all fit.
pub(crate) fn narrow(values: &[Vec<BigUint>]) -> Option<Vec<Vec<u128>>> {
    values
        .iter()
        .map(|row| row.iter().map(|v| v.to_u128()).collect::<Option<Vec<_>>>())
        .collect()
}

/// Runs an integer computation in `u128` and reruns it in [`BigUint`] when
/// the fast path overflows.
pub(crate) fn with_integer_fallback<F, G>(weights: &[Vec<BigUint>], fast: F, slow: G) -> Result<BigUint>
where
    F: FnOnce(&[Vec<u128>]) -> Result<Option<u128>>,
    G: FnOnce(&[Vec<BigUint>]) -> Result<Option<BigUint>>,
{
    if let Some(small) = narrow(weights) {
        if let Some(v) = fast(&small)? {
            return Ok(BigUint::from(v));
        }
    }
    slow(weights)?.ok_or_else(|| Error::InvalidArgument("arbitrary-precision overflow".into()))
}

pub(crate) fn biguint_ratio(num: BigUint, den: BigUint) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}
