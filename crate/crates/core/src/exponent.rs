//! Exact exponents: rationals extended by `∞`.
//!
//! Integrability and extension exponents cross every API boundary in this
//! form. Floating point is only introduced at the quadrature stage.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Exponent {
    Finite(BigRational),
    Infinite,
}

pub fn rat(numer: i64, denom: i64) -> BigRational {
    BigRational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn int(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

impl Exponent {
    pub fn ratio(numer: i64, denom: i64) -> Self {
        Exponent::Finite(rat(numer, denom))
    }

    pub fn integer(v: i64) -> Self {
        Exponent::Finite(int(v))
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Exponent::Infinite)
    }

    pub fn finite(&self) -> Option<&BigRational> {
        match self {
            Exponent::Finite(r) => Some(r),
            Exponent::Infinite => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Exponent::Finite(r) => r.to_f64().unwrap_or(f64::NAN),
            Exponent::Infinite => f64::INFINITY,
        }
    }

    /// Strictly greater than one (`∞` counts).
    pub fn exceeds_one(&self) -> bool {
        match self {
            Exponent::Finite(r) => r > &BigRational::one(),
            Exponent::Infinite => true,
        }
    }

    /// Exact conversion of a finite `f64` (every binary float is a rational).
    pub fn from_f64(v: f64) -> Result<Self> {
        if v.is_infinite() && v > 0.0 {
            return Ok(Exponent::Infinite);
        }
        BigRational::from_float(v)
            .map(Exponent::Finite)
            .ok_or_else(|| Error::Parse(format!("not a representable exponent: {v}")))
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Infinite => write!(f, "inf"),
            Exponent::Finite(r) => write_rational(f, r),
        }
    }
}

fn write_rational(f: &mut fmt::Formatter<'_>, r: &BigRational) -> fmt::Result {
    if r.is_integer() {
        write!(f, "{}", r.numer())
    } else {
        write!(f, "{}/{}", r.numer(), r.denom())
    }
}

/// Formats a rational the same way [`Exponent`] does.
pub fn format_rational(r: &BigRational) -> String {
    Exponent::Finite(r.clone()).to_string()
}

impl FromStr for Exponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let lower = t.to_ascii_lowercase();
        if matches!(lower.as_str(), "inf" | "infinity" | "∞" | "+inf") {
            return Ok(Exponent::Infinite);
        }
        parse_rational(t).map(Exponent::Finite)
    }
}

/// Parses `"7/3"`, `"-2"` or a plain decimal like `"1.25"` into an exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let t = s.trim();
    let bad = || Error::Parse(format!("not a rational: {s:?}"));
    if let Some((n, d)) = t.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(Error::Parse(format!("zero denominator in {s:?}")));
        }
        return Ok(BigRational::new(n, d));
    }
    let (mantissa, exp10) = match t.find(['e', 'E']) {
        Some(i) => (&t[..i], t[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (t, 0),
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
    let numer: BigInt = format!("{whole}{frac}").parse().map_err(|_| bad())?;
    let scale = exp10 - frac.len() as i32;
    let ten = BigInt::from(10);
    let mut r = BigRational::from_integer(numer);
    if scale >= 0 {
        r *= BigRational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        r /= BigRational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Ok(if neg { -r } else { r })
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Int(i64),
            Float(f64),
        }
        match Raw::deserialize(d)? {
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
            Raw::Int(i) => Ok(Exponent::integer(i)),
            Raw::Float(v) => Exponent::from_f64(v).map_err(serde::de::Error::custom),
        }
    }
}

/// Conjugate-style helper `2x/(x-1)`, with `x = ∞` mapped to 2.
pub fn two_x_over_x_minus_one(x: &Exponent) -> Exponent {
    match x {
        Exponent::Infinite => Exponent::integer(2),
        Exponent::Finite(r) => {
            let den = r - BigRational::one();
            if den.is_zero() {
                Exponent::Infinite
            } else {
                Exponent::Finite(int(2) * r / den)
            }
        }
    }
}

/// `2x/(x+1)`, with `x = ∞` mapped to 2.
pub fn two_x_over_x_plus_one(x: &Exponent) -> Exponent {
    match x {
        Exponent::Infinite => Exponent::integer(2),
        Exponent::Finite(r) => Exponent::Finite(int(2) * r / (r + BigRational::one())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_decimals_and_infinity() {
        assert_eq!("7/3".parse::<Exponent>().unwrap(), Exponent::ratio(7, 3));
        assert_eq!("1.5".parse::<Exponent>().unwrap(), Exponent::ratio(3, 2));
        assert_eq!("-0.25".parse::<Exponent>().unwrap(), Exponent::ratio(-1, 4));
        assert_eq!("2e1".parse::<Exponent>().unwrap(), Exponent::integer(20));
        assert_eq!("inf".parse::<Exponent>().unwrap(), Exponent::Infinite);
        assert_eq!("∞".parse::<Exponent>().unwrap(), Exponent::Infinite);
        assert!("abc".parse::<Exponent>().is_err());
        assert!("1/0".parse::<Exponent>().is_err());
        assert!(".".parse::<Exponent>().is_err());
    }

    #[test]
    fn display_is_canonical() {
        assert_eq!(Exponent::ratio(6, 4).to_string(), "3/2");
        assert_eq!(Exponent::ratio(6, 3).to_string(), "2");
        assert_eq!(Exponent::Infinite.to_string(), "inf");
    }

    #[test]
    fn serde_uses_strings_and_accepts_numbers() {
        let j = serde_json::to_string(&Exponent::ratio(8, 5)).unwrap();
        assert_eq!(j, "\"8/5\"");
        let back: Exponent = serde_json::from_str(&j).unwrap();
        assert_eq!(back, Exponent::ratio(8, 5));
        let from_num: Exponent = serde_json::from_str("3").unwrap();
        assert_eq!(from_num, Exponent::integer(3));
        let from_float: Exponent = serde_json::from_str("1.5").unwrap();
        assert_eq!(from_float, Exponent::ratio(3, 2));
    }

    #[test]
    fn conjugate_helpers_handle_infinity() {
        assert_eq!(two_x_over_x_minus_one(&Exponent::Infinite), Exponent::integer(2));
        assert_eq!(two_x_over_x_plus_one(&Exponent::integer(3)), Exponent::ratio(3, 2));
        assert_eq!(two_x_over_x_minus_one(&Exponent::integer(3)), Exponent::integer(3));
    }
}
