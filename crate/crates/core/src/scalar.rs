//! Exact scalars.
//!
//! All model parameters are held as big rationals. Decimal text (`0.15`,
//! `1e-3`), fractions (`1/3`) and integers parse exactly; a binary `f64` is
//! converted through its shortest round-trip decimal, so `0.2` becomes `1/5`.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

pub type Rational = BigRational;

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn from_biguint(v: &BigUint) -> Rational {
    Rational::from_integer(BigInt::from(v.clone()))
}

pub fn parse_rational(text: &str) -> Result<Rational, Error> {
    let s = text.trim();
    let bad = || Error::BadNumber(text.to_string());
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((n, d)) = s.split_once('/') {
        let n = parse_rational(n)?;
        let d = parse_rational(d)?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(n / d);
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(pos) => (&s[..pos], s[pos + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (whole, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if whole.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if !whole.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let all = format!("{whole}{frac}");
    let numer = BigInt::from_str(if all.is_empty() { "0" } else { &all }).map_err(|_| bad())?;
    let scale = exp - frac.len() as i32;
    let ten = Rational::from_integer(BigInt::from(10));
    let mut value = Rational::from_integer(numer) * ten.pow(scale);
    if neg {
        value = -value;
    }
    Ok(value)
}

/// Exact rational with the decimal value `format!("{v}")` prints.
pub fn from_f64(v: f64) -> Result<Rational, Error> {
    if !v.is_finite() {
        return Err(Error::BadNumber(v.to_string()));
    }
    parse_rational(&format!("{v:e}"))
}

pub fn to_f64(v: &Rational) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}

pub fn pow(base: &Rational, exp: i32) -> Rational {
    if exp == 0 {
        return Rational::one();
    }
    base.pow(exp)
}

pub fn abs(v: &Rational) -> Rational {
    v.abs()
}

/// Serialises a rational as its exact `p/q` text.
pub fn ser_rational<S: Serializer>(v: &Rational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

pub fn ser_rationals<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|r| r.to_string()))
}

/// Rational parameter that (de)serialises as a string like `"3/8"` and
/// accepts plain TOML/JSON numbers on input.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Exact(pub Rational);

impl Exact {
    pub fn value(&self) -> &Rational {
        &self.0
    }
}

impl From<Rational> for Exact {
    fn from(v: Rational) -> Self {
        Exact(v)
    }
}

impl fmt::Display for Exact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for Exact {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_rational(s).map(Exact)
    }
}

impl Serialize for Exact {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0.to_string())
    }
}

impl<'de> Deserialize<'de> for Exact {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Float(f64),
            Text(String),
        }
        let raw = Raw::deserialize(d)?;
        let parsed = match raw {
            Raw::Int(i) => Ok(int(i)),
            Raw::Float(f) => from_f64(f),
            Raw::Text(t) => parse_rational(&t),
        };
        parsed.map(Exact).map_err(serde::de::Error::custom)
    }
}
