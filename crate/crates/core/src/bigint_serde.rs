//! Decimal JSON rendering for arbitrary-precision integers.
//!
//! Integers are written as bare JSON numbers of any length (serde_json's
//! `arbitrary_precision` feature); on input both numbers and decimal strings
//! are accepted.

use std::str::FromStr;

use num_bigint::BigInt;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub fn serialize<S: Serializer>(n: &BigInt, s: S) -> Result<S::Ok, S::Error> {
    let number = serde_json::Number::from_str(&n.to_string()).map_err(serde::ser::Error::custom)?;
    number.serialize(s)
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigInt, D::Error> {
    match serde_json::Value::deserialize(d)? {
        serde_json::Value::Number(n) => parse(&n.to_string()).map_err(D::Error::custom),
        serde_json::Value::String(s) => parse(&s).map_err(D::Error::custom),
        other => Err(D::Error::custom(format!("expected an integer, got {other}"))),
    }
}

pub fn parse(s: &str) -> Result<BigInt, String> {
    let t = s.trim();
    let digits = t.strip_prefix('-').unwrap_or(t);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(format!("not a decimal integer: {s:?}"));
    }
    BigInt::from_str(t).map_err(|e| e.to_string())
}

pub mod vec {
    use super::*;
    use serde::ser::SerializeSeq;

    pub fn serialize<S: Serializer>(v: &[BigInt], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for n in v {
            let number =
                serde_json::Number::from_str(&n.to_string()).map_err(serde::ser::Error::custom)?;
            seq.serialize_element(&number)?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigInt>, D::Error> {
        let values = Vec::<serde_json::Value>::deserialize(d)?;
        values
            .into_iter()
            .map(|v| match v {
                serde_json::Value::Number(n) => parse(&n.to_string()),
                serde_json::Value::String(s) => parse(&s),
                other => Err(format!("expected an integer, got {other}")),
            })
            .collect::<Result<_, _>>()
            .map_err(D::Error::custom)
    }
}

pub mod option {
    use super::*;

    pub fn serialize<S: Serializer>(v: &Option<BigInt>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(n) => super::serialize(n, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<BigInt>, D::Error> {
        match Option::<serde_json::Value>::deserialize(d)? {
            None | Some(serde_json::Value::Null) => Ok(None),
            Some(serde_json::Value::Number(n)) => parse(&n.to_string()).map(Some).map_err(D::Error::custom),
            Some(serde_json::Value::String(s)) => parse(&s).map(Some).map_err(D::Error::custom),
            Some(other) => Err(D::Error::custom(format!("expected an integer, got {other}"))),
        }
    }
}
