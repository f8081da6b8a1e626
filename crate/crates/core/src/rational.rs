//! Exact rational numbers and their text form.
//!
//! Every mass and function value in the engine is a [`Rational`]. The only
//! accepted text forms are `"a/b"` and `"a"`; decimal literals are rejected so
//! that a model file can never smuggle in a rounded value.

use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

pub use num_rational::BigRational as Rational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseRationalError {
    #[error("empty rational literal")]
    Empty,
    #[error("decimal literal `{0}` rejected; write it as a/b")]
    Decimal(String),
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
    #[error("malformed rational literal `{0}`")]
    Malformed(String),
}

fn parse_int(part: &str, whole: &str, allow_sign: bool) -> Result<BigInt, ParseRationalError> {
    let digits = if allow_sign {
        part.strip_prefix('-').or_else(|| part.strip_prefix('+')).unwrap_or(part)
    } else {
        part
    };
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(ParseRationalError::Malformed(whole.to_string()));
    }
    BigInt::from_str(part).map_err(|_| ParseRationalError::Malformed(whole.to_string()))
}

/// Parses `"a/b"` or `"a"` into a reduced rational.
pub fn parse_rational(text: &str) -> Result<Rational, ParseRationalError> {
    let s = text.trim();
    if s.is_empty() {
        return Err(ParseRationalError::Empty);
    }
    if s.contains(['.', 'e', 'E']) {
        return Err(ParseRationalError::Decimal(s.to_string()));
    }
    match s.split_once('/') {
        None => Ok(Rational::from_integer(parse_int(s, s, true)?)),
        Some((num, den)) => {
            let num = parse_int(num.trim(), s, true)?;
            let den = parse_int(den.trim(), s, false)?;
            if den.is_zero() {
                return Err(ParseRationalError::ZeroDenominator(s.to_string()));
            }
            Ok(Rational::new(num, den))
        }
    }
}

/// Canonical text form: `"a/b"` in lowest terms, or `"a"` for integers.
pub fn format_rational(r: &Rational) -> String {
    r.to_string()
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn is_nonneg(r: &Rational) -> bool {
    !r.is_negative()
}

pub fn is_positive(r: &Rational) -> bool {
    r.is_positive()
}

pub fn one() -> Rational {
    Rational::one()
}

pub fn zero() -> Rational {
    Rational::zero()
}

/// Serde adapters writing rationals as strings.
pub mod serde_str {
    use serde::{de, Deserialize, Deserializer, Serializer};

    use super::{format_rational, parse_rational, Rational};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let text = String::deserialize(d)?;
        parse_rational(&text).map_err(de::Error::custom)
    }

    pub mod vec {
        use serde::ser::SerializeSeq;
        use serde::{de, Deserialize, Deserializer, Serializer};

        use super::super::{format_rational, parse_rational, Rational};

        pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
            let mut seq = s.serialize_seq(Some(v.len()))?;
            for r in v {
                seq.serialize_element(&format_rational(r))?;
            }
            seq.end()
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
            let texts = Vec::<String>::deserialize(d)?;
            texts
                .iter()
                .map(|t| parse_rational(t).map_err(de::Error::custom))
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_integers() {
        assert_eq!(parse_rational("2/6").unwrap(), ratio(1, 3));
        assert_eq!(parse_rational("-4/9").unwrap(), ratio(-4, 9));
        assert_eq!(parse_rational(" 7 ").unwrap(), int(7));
        assert_eq!(parse_rational("0").unwrap(), zero());
    }

    #[test]
    fn rejects_decimals_and_garbage() {
        assert!(matches!(parse_rational("0.5"), Err(ParseRationalError::Decimal(_))));
        assert!(matches!(parse_rational("1e3"), Err(ParseRationalError::Decimal(_))));
        assert!(matches!(parse_rational("1/0"), Err(ParseRationalError::ZeroDenominator(_))));
        assert!(matches!(parse_rational("1/-2"), Err(ParseRationalError::Malformed(_))));
        assert!(matches!(parse_rational("x"), Err(ParseRationalError::Malformed(_))));
        assert!(matches!(parse_rational(""), Err(ParseRationalError::Empty)));
    }

    #[test]
    fn formats_in_lowest_terms() {
        assert_eq!(format_rational(&ratio(2, 6)), "1/3");
        assert_eq!(format_rational(&ratio(6, 3)), "2");
        assert_eq!(format_rational(&ratio(-2, 3)), "-2/3");
    }
}
