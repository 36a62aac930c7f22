//! Serde helpers for norm indices, which may be infinite.
//!
//! Finite values are written as JSON numbers, `∞` as the string `"inf"`.

use serde::{de, Deserialize, Deserializer, Serializer};

pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_infinite() {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*v)
    }
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }
    match Repr::deserialize(d)? {
        Repr::Num(v) => Ok(v),
        Repr::Str(s) => parse(&s).ok_or_else(|| de::Error::custom(format!("bad norm index {s:?}"))),
    }
}

/// Parses `"inf"`, `"infinity"` or a decimal number.
pub fn parse(s: &str) -> Option<f64> {
    match s.trim().to_ascii_lowercase().as_str() {
        "inf" | "infinity" | "∞" => Some(f64::INFINITY),
        t => t.parse().ok(),
    }
}

/// Formats a norm index the way [`parse`] reads it.
pub fn format(v: f64) -> String {
    if v.is_infinite() {
        "inf".to_string()
    } else {
        format!("{v}")
    }
}
