//! Extended reals in JSON: finite numbers as numbers, `+inf` as `"inf"`.

use serde::de::{self, Deserializer, Visitor};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ext(pub f64);

impl Serialize for Ext {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        if self.0 == f64::INFINITY {
            serializer.serialize_str("inf")
        } else if self.0.is_finite() {
            serializer.serialize_f64(self.0)
        } else if self.0 == f64::NEG_INFINITY {
            serializer.serialize_str("-inf")
        } else {
            serializer.serialize_str("nan")
        }
    }
}

struct ExtVisitor;

impl<'de> Visitor<'de> for ExtVisitor {
    type Value = Ext;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("a number or the string \"inf\"")
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> Result<Ext, E> {
        Ok(Ext(v))
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<Ext, E> {
        Ok(Ext(v as f64))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<Ext, E> {
        Ok(Ext(v as f64))
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<Ext, E> {
        match v {
            "inf" | "+inf" | "Infinity" => Ok(Ext(f64::INFINITY)),
            // kept so that validation can name the offending entry
            "-inf" => Ok(Ext(f64::NEG_INFINITY)),
            "nan" => Ok(Ext(f64::NAN)),
            other => Err(E::invalid_value(de::Unexpected::Str(other), &self)),
        }
    }
}

impl<'de> Deserialize<'de> for Ext {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Ext, D::Error> {
        deserializer.deserialize_any(ExtVisitor)
    }
}

pub mod vec {
    use super::Ext;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|&x| Ext(x)).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Ok(Vec::<Ext>::deserialize(d)?.into_iter().map(|e| e.0).collect())
    }
}

pub mod table {
    use super::Ext;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[Vec<f64>], s: S) -> Result<S::Ok, S::Error> {
        v.iter()
            .map(|r| r.iter().map(|&x| Ext(x)).collect::<Vec<_>>())
            .collect::<Vec<_>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<f64>>, D::Error> {
        Ok(Vec::<Vec<Ext>>::deserialize(d)?
            .into_iter()
            .map(|r| r.into_iter().map(|e| e.0).collect())
            .collect())
    }
}

pub mod opt {
    use super::Ext;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        v.map(Ext).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        Ok(Option::<Ext>::deserialize(d)?.map(|e| e.0))
    }
}

pub mod scalar {
    use super::Ext;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        Ext(*v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Ext::deserialize(d)?.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infinity_is_a_string() {
        assert_eq!(serde_json::to_string(&Ext(f64::INFINITY)).unwrap(), "\"inf\"");
        assert_eq!(serde_json::to_string(&Ext(0.1)).unwrap(), "0.1");
        let back: Vec<Ext> = serde_json::from_str("[1, 2.5, \"inf\"]").unwrap();
        assert_eq!(back, vec![Ext(1.0), Ext(2.5), Ext(f64::INFINITY)]);
    }

    #[test]
    fn shortest_round_trip() {
        for x in [0.1 + 0.2, 1.0 / 3.0, 1e-300, 12345.678901234567] {
            let s = serde_json::to_string(&Ext(x)).unwrap();
            let y: Ext = serde_json::from_str(&s).unwrap();
            assert_eq!(y.0.to_bits(), x.to_bits());
        }
    }

    #[test]
    fn unknown_string_rejected() {
        assert!(serde_json::from_str::<Ext>("\"infinite\"").is_err());
    }
}
