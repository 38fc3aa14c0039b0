//! JSON helpers for values that may be infinite.
//!
//! JSON has no infinity literal; relaxation times of non-decaying modes are
//! written as the string `"inf"`. On input, `"inf"`, `"infinity"`, `"+inf"`
//! (any case) and `null` all read as `+∞`.

use serde::de::{self, Deserializer, Visitor};
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaybeInf(pub f64);

impl Serialize for MaybeInf {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let x = self.0;
        if x.is_nan() {
            s.serialize_none()
        } else if x == f64::INFINITY {
            s.serialize_str("inf")
        } else if x == f64::NEG_INFINITY {
            s.serialize_str("-inf")
        } else {
            s.serialize_f64(x)
        }
    }
}

struct MaybeInfVisitor;

impl<'de> Visitor<'de> for MaybeInfVisitor {
    type Value = MaybeInf;

    fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("a number, \"inf\", or null")
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> Result<MaybeInf, E> {
        Ok(MaybeInf(v))
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<MaybeInf, E> {
        Ok(MaybeInf(v as f64))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<MaybeInf, E> {
        Ok(MaybeInf(v as f64))
    }

    fn visit_unit<E: de::Error>(self) -> Result<MaybeInf, E> {
        Ok(MaybeInf(f64::INFINITY))
    }

    fn visit_none<E: de::Error>(self) -> Result<MaybeInf, E> {
        Ok(MaybeInf(f64::INFINITY))
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<MaybeInf, E> {
        parse_time(v).map(MaybeInf).ok_or_else(|| E::custom(format!("not a number: {v:?}")))
    }
}

impl<'de> Deserialize<'de> for MaybeInf {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        d.deserialize_any(MaybeInfVisitor)
    }
}

/// Parses a number, accepting the spellings of `+∞` listed above.
pub fn parse_time(text: &str) -> Option<f64> {
    let t = text.trim();
    match t.to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" | "+infinity" => Some(f64::INFINITY),
        "-inf" | "-infinity" => Some(f64::NEG_INFINITY),
        _ => t.parse::<f64>().ok().filter(|x| !x.is_nan()),
    }
}

/// `serialize_with` adapter for `Vec<f64>` fields.
pub fn vec_maybe_inf<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for &x in v {
        seq.serialize_element(&MaybeInf(x))?;
    }
    seq.end()
}

/// `deserialize_with` adapter for `Vec<f64>` fields.
pub fn de_vec_maybe_inf<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
    Ok(Vec::<MaybeInf>::deserialize(d)?.into_iter().map(|m| m.0).collect())
}

/// `serialize_with` adapter for a single `f64`.
pub fn maybe_inf<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    MaybeInf(*v).serialize(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infinite_times_round_trip() {
        let v = vec![1.0, f64::INFINITY, 0.25];
        let mut out = Vec::new();
        vec_maybe_inf(&v, &mut serde_json::Serializer::new(&mut out)).unwrap();
        assert_eq!(String::from_utf8(out.clone()).unwrap(), r#"[1.0,"inf",0.25]"#);
        let back = de_vec_maybe_inf(&mut serde_json::Deserializer::from_slice(&out)).unwrap();
        assert_eq!(back, v);
        let nulls = de_vec_maybe_inf(&mut serde_json::Deserializer::from_str("[null, 2, \"Infinity\"]")).unwrap();
        assert_eq!(nulls, vec![f64::INFINITY, 2.0, f64::INFINITY]);
        assert!(parse_time("abc").is_none());
        assert!(parse_time("NaN").is_none());
    }
}
