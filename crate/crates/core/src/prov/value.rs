use std::fmt;

use crate::error::{Error, Result};

use super::QualifiedName;

/// Datatype tag carried by every serialized attribute value.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Datatype {
    String,
    Long,
    Double,
    Boolean,
    DateTime,
    /// `prov:QUALIFIED_NAME`, used for values such as `prov:type = prov:Collection`.
    QualifiedName,
    /// A tag this crate does not model; the value is kept as text.
    Other(String),
}

impl Datatype {
    pub fn tag(&self) -> &str {
        match self {
            Datatype::String => "xsd:string",
            Datatype::Long => "xsd:long",
            Datatype::Double => "xsd:double",
            Datatype::Boolean => "xsd:boolean",
            Datatype::DateTime => "xsd:dateTime",
            Datatype::QualifiedName => "prov:QUALIFIED_NAME",
            Datatype::Other(tag) => tag,
        }
    }

    pub fn from_tag(tag: &str) -> Self {
        match tag {
            "xsd:string" => Datatype::String,
            "xsd:long" => Datatype::Long,
            "xsd:double" => Datatype::Double,
            "xsd:boolean" => Datatype::Boolean,
            "xsd:dateTime" => Datatype::DateTime,
            "prov:QUALIFIED_NAME" => Datatype::QualifiedName,
            other => Datatype::Other(other.to_owned()),
        }
    }
}

#[derive(Debug, Clone)]
pub enum Value {
    String(String),
    Long(i64),
    Double(f64),
    Bool(bool),
}

// Doubles compare by bit pattern so that NaN payloads and signed zeros survive
// structural comparison.
impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Value::String(a), Value::String(b)) => a == b,
            (Value::Long(a), Value::Long(b)) => a == b,
            (Value::Double(a), Value::Double(b)) => a.to_bits() == b.to_bits(),
            (Value::Bool(a), Value::Bool(b)) => a == b,
            _ => false,
        }
    }
}

impl Value {
    fn inferred_datatype(&self) -> Datatype {
        match self {
            Value::String(_) => Datatype::String,
            Value::Long(_) => Datatype::Long,
            Value::Double(_) => Datatype::Double,
            Value::Bool(_) => Datatype::Boolean,
        }
    }
}

/// A typed attribute value.
///
/// The explicit datatype is only stored when it differs from the one implied by
/// the variant, so two values that serialize identically are always equal.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributeValue {
    value: Value,
    datatype: Option<Datatype>,
}

impl AttributeValue {
    pub fn new(value: Value) -> Self {
        Self {
            value,
            datatype: None,
        }
    }

    /// Attach an explicit datatype. Non-string variants only accept their own tag.
    pub fn typed(value: Value, datatype: Datatype) -> Result<Self> {
        let inferred = value.inferred_datatype();
        if datatype == inferred {
            return Ok(Self::new(value));
        }
        match (&value, &datatype) {
            (Value::String(_), Datatype::DateTime | Datatype::QualifiedName | Datatype::Other(_)) => {
                Ok(Self {
                    value,
                    datatype: Some(datatype),
                })
            }
            _ => Err(Error::invalid(format!(
                "datatype {} does not apply to a {} value",
                datatype.tag(),
                inferred.tag()
            ))),
        }
    }

    pub fn string(s: impl Into<String>) -> Self {
        Self::new(Value::String(s.into()))
    }

    pub fn long(v: i64) -> Self {
        Self::new(Value::Long(v))
    }

    pub fn double(v: f64) -> Self {
        Self::new(Value::Double(v))
    }

    pub fn boolean(v: bool) -> Self {
        Self::new(Value::Bool(v))
    }

    pub fn datetime(ms: crate::clock::EpochMillis) -> Self {
        Self {
            value: Value::String(crate::clock::format_datetime(ms)),
            datatype: Some(Datatype::DateTime),
        }
    }

    pub fn qualified_name(name: &QualifiedName) -> Self {
        Self {
            value: Value::String(name.to_string()),
            datatype: Some(Datatype::QualifiedName),
        }
    }

    pub fn value(&self) -> &Value {
        &self.value
    }

    pub fn datatype(&self) -> Datatype {
        self.datatype
            .clone()
            .unwrap_or_else(|| self.value.inferred_datatype())
    }

    /// The `"$"` text of the serialized form.
    pub fn lexical(&self) -> String {
        match &self.value {
            Value::String(s) => s.clone(),
            Value::Long(v) => v.to_string(),
            Value::Double(v) => format_double(*v),
            Value::Bool(v) => v.to_string(),
        }
    }

    /// Inverse of [`lexical`](Self::lexical) for a given tag. Unknown tags keep the text.
    pub fn from_lexical(text: &str, datatype: Datatype) -> Result<Self> {
        let bad = || Error::invalid(format!("`{text}` is not a valid {}", datatype.tag()));
        let value = match datatype {
            Datatype::Long => Value::Long(text.parse().map_err(|_| bad())?),
            Datatype::Double => Value::Double(parse_double(text).ok_or_else(bad)?),
            Datatype::Boolean => Value::Bool(match text {
                "true" | "1" => true,
                "false" | "0" => false,
                _ => return Err(bad()),
            }),
            Datatype::QualifiedName => {
                QualifiedName::parse(text).map_err(|_| bad())?;
                Value::String(text.to_owned())
            }
            _ => Value::String(text.to_owned()),
        };
        Self::typed(value, datatype)
    }

    pub fn as_str(&self) -> Option<&str> {
        match &self.value {
            Value::String(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_i64(&self) -> Option<i64> {
        match self.value {
            Value::Long(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self.value {
            Value::Double(v) => Some(v),
            Value::Long(v) => Some(v as f64),
            _ => None,
        }
    }

    /// The referenced name when this is a `prov:QUALIFIED_NAME` value.
    pub fn as_qualified_name(&self) -> Option<QualifiedName> {
        match (&self.value, &self.datatype) {
            (Value::String(s), Some(Datatype::QualifiedName)) => QualifiedName::parse(s).ok(),
            _ => None,
        }
    }
}

impl fmt::Display for AttributeValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.lexical())
    }
}

impl From<&str> for AttributeValue {
    fn from(s: &str) -> Self {
        Self::string(s)
    }
}

impl From<String> for AttributeValue {
    fn from(s: String) -> Self {
        Self::string(s)
    }
}

impl From<i64> for AttributeValue {
    fn from(v: i64) -> Self {
        Self::long(v)
    }
}

impl From<i32> for AttributeValue {
    fn from(v: i32) -> Self {
        Self::long(v.into())
    }
}

impl From<u32> for AttributeValue {
    fn from(v: u32) -> Self {
        Self::long(v.into())
    }
}

impl From<f64> for AttributeValue {
    fn from(v: f64) -> Self {
        Self::double(v)
    }
}

impl From<bool> for AttributeValue {
    fn from(v: bool) -> Self {
        Self::boolean(v)
    }
}

/// Shortest round-trip decimal form; non-finite values use the xsd spellings.
pub fn format_double(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_owned()
    } else if v == f64::INFINITY {
        "INF".to_owned()
    } else if v == f64::NEG_INFINITY {
        "-INF".to_owned()
    } else {
        format!("{v:?}")
    }
}

pub fn parse_double(text: &str) -> Option<f64> {
    match text {
        "NaN" => Some(f64::NAN),
        "INF" | "+INF" => Some(f64::INFINITY),
        "-INF" => Some(f64::NEG_INFINITY),
        // Rust accepts "inf"/"infinity"/"nan" spellings that xsd does not.
        t if t.bytes().any(|b| b.is_ascii_alphabetic() && b != b'e' && b != b'E') => None,
        t => t.parse().ok(),
    }
}
