//! Exact rational numbers and their textual form.
//!
//! Every cost, reward, probability and payment is a [`Rational`]. The text
//! format is `p/q` or a bare integer; the denominator must be a positive
//! integer without a sign.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = num_rational::BigRational;

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn frac(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn zero() -> Rational {
    Rational::zero()
}

pub fn one() -> Rational {
    Rational::one()
}

fn parse_digits(s: &str, literal: &str) -> Result<BigInt> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return Err(Error::BadRational {
            literal: literal.to_string(),
            reason: "expected decimal digits".into(),
        });
    }
    Ok(s.parse::<BigInt>().expect("digits parse"))
}

/// Parses `"p/q"`, `"-p/q"` or an integer literal.
pub fn parse(literal: &str) -> Result<Rational> {
    let text = literal.trim();
    let (negative, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    let (num, den) = match body.split_once('/') {
        Some((n, d)) => (parse_digits(n, literal)?, parse_digits(d, literal)?),
        None => (parse_digits(body, literal)?, BigInt::one()),
    };
    if den.is_zero() {
        return Err(Error::BadRational {
            literal: literal.to_string(),
            reason: "zero denominator".into(),
        });
    }
    let num = if negative { -num } else { num };
    Ok(Rational::new(num, den))
}

/// Canonical text: lowest terms, `p` when the denominator is one.
pub fn format(value: &Rational) -> String {
    if value.denom().is_one() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

/// Decimal approximation for human-readable tables only.
pub fn approx(value: &Rational) -> f64 {
    let n = value.numer().to_f64().unwrap_or(f64::NAN);
    let d = value.denom().to_f64().unwrap_or(f64::NAN);
    if n.is_finite() && d.is_finite() {
        n / d
    } else {
        // Very large components: scale down before dividing.
        let bits = value.numer().bits().max(value.denom().bits()) as i64 - 60;
        let shift = bits.max(0) as usize;
        let n = (value.numer() >> shift).to_f64().unwrap_or(0.0);
        let d = (value.denom() >> shift).to_f64().unwrap_or(1.0);
        if value.is_negative() && n > 0.0 {
            -n / d
        } else {
            n / d
        }
    }
}

pub fn sum<'a>(values: impl IntoIterator<Item = &'a Rational>) -> Rational {
    values.into_iter().fold(zero(), |acc, v| acc + v)
}

pub fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).fold(zero(), |acc, (x, y)| acc + x * y)
}

pub fn max<'a>(values: impl IntoIterator<Item = &'a Rational>) -> Option<Rational> {
    values.into_iter().max().cloned()
}

/// Serde adapters storing rationals as canonical strings.
pub mod serde_str {
    use serde::{de, Deserialize, Deserializer, Serializer};

    use super::Rational;

    pub fn serialize<S: Serializer>(value: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::format(value))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let text = String::deserialize(d)?;
        super::parse(&text).map_err(de::Error::custom)
    }

    pub mod option {
        use serde::{Deserialize, Deserializer, Serializer};

        use super::super::Rational;

        pub fn serialize<S: Serializer>(value: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
            match value {
                Some(v) => s.serialize_some(&super::super::format(v)),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rational>, D::Error> {
            let text = Option::<String>::deserialize(d)?;
            text.map(|t| super::super::parse(&t).map_err(serde::de::Error::custom))
                .transpose()
        }
    }

    pub mod vec {
        use serde::ser::SerializeSeq;
        use serde::{Deserialize, Deserializer, Serializer};

        use super::super::Rational;

        pub fn serialize<S: Serializer>(values: &[Rational], s: S) -> Result<S::Ok, S::Error> {
            let mut seq = s.serialize_seq(Some(values.len()))?;
            for v in values {
                seq.serialize_element(&super::super::format(v))?;
            }
            seq.end()
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
            Vec::<String>::deserialize(d)?
                .iter()
                .map(|t| super::super::parse(t).map_err(serde::de::Error::custom))
                .collect()
        }
    }
}
