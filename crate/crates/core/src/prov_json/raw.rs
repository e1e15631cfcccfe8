//! A JSON tree that keeps repeated object keys, so the parser can report
//! duplicate record ids and attribute keys instead of silently dropping them.

use std::fmt;

use serde::de::{self, Deserialize, Deserializer, MapAccess, SeqAccess, Visitor};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum RawJson {
    Null,
    Bool(bool),
    Number(serde_json::Number),
    String(String),
    Array(Vec<RawJson>),
    Object(Vec<(String, RawJson)>),
}

impl RawJson {
    /// Convert to a `serde_json::Value` with recursively sorted keys; the last repeated key wins.
    pub(crate) fn into_canonical_value(self) -> serde_json::Value {
        use serde_json::Value;
        match self {
            RawJson::Null => Value::Null,
            RawJson::Bool(b) => Value::Bool(b),
            RawJson::Number(n) => Value::Number(n),
            RawJson::String(s) => Value::String(s),
            RawJson::Array(items) => {
                Value::Array(items.into_iter().map(RawJson::into_canonical_value).collect())
            }
            RawJson::Object(fields) => {
                let mut sorted = std::collections::BTreeMap::new();
                for (k, v) in fields {
                    sorted.insert(k, v.into_canonical_value());
                }
                Value::Object(sorted.into_iter().collect())
            }
        }
    }

    pub(crate) fn type_name(&self) -> &'static str {
        match self {
            RawJson::Null => "null",
            RawJson::Bool(_) => "boolean",
            RawJson::Number(_) => "number",
            RawJson::String(_) => "string",
            RawJson::Array(_) => "array",
            RawJson::Object(_) => "object",
        }
    }
}

impl<'de> Deserialize<'de> for RawJson {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        deserializer.deserialize_any(RawVisitor)
    }
}

struct RawVisitor;

impl<'de> Visitor<'de> for RawVisitor {
    type Value = RawJson;

    fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("any JSON value")
    }

    fn visit_unit<E>(self) -> Result<RawJson, E> {
        Ok(RawJson::Null)
    }

    fn visit_bool<E>(self, v: bool) -> Result<RawJson, E> {
        Ok(RawJson::Bool(v))
    }

    fn visit_i64<E>(self, v: i64) -> Result<RawJson, E> {
        Ok(RawJson::Number(v.into()))
    }

    fn visit_u64<E>(self, v: u64) -> Result<RawJson, E> {
        Ok(RawJson::Number(v.into()))
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> Result<RawJson, E> {
        serde_json::Number::from_f64(v)
            .map(RawJson::Number)
            .ok_or_else(|| E::custom("non-finite number"))
    }

    fn visit_str<E>(self, v: &str) -> Result<RawJson, E> {
        Ok(RawJson::String(v.to_owned()))
    }

    fn visit_string<E>(self, v: String) -> Result<RawJson, E> {
        Ok(RawJson::String(v))
    }

    fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<RawJson, A::Error> {
        let mut items = Vec::new();
        while let Some(item) = seq.next_element()? {
            items.push(item);
        }
        Ok(RawJson::Array(items))
    }

    fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<RawJson, A::Error> {
        let mut fields = Vec::new();
        while let Some((k, v)) = map.next_entry::<String, RawJson>()? {
            fields.push((k, v));
        }
        Ok(RawJson::Object(fields))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keeps_repeated_keys() {
        let raw: RawJson = serde_json::from_str(r#"{"a": 1, "a": 2}"#).unwrap();
        let RawJson::Object(fields) = raw else { panic!() };
        assert_eq!(fields.len(), 2);
    }
}
