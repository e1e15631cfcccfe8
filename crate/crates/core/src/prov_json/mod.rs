//! Canonical PROV-JSON encoding.
//!
//! Output layout is fixed: top-level sections in the order `prefix`, `entity`,
//! `activity`, `agent`, `used`, `wasGeneratedBy`, `wasAssociatedWith`,
//! `wasDerivedFrom`, `hadMember` (empty sections omitted, `prefix` always
//! present), ids sorted within each section, every attribute value written as
//! `{"$": text, "type": tag}`, 2-space indentation and a trailing newline.
//! Sections this crate does not model are re-emitted after the known ones
//! with recursively sorted keys.

mod raw;
mod validate;

use serde_json::{Map, Value as Json};

use crate::clock::parse_datetime;
use crate::error::{Error, Result};
use crate::prov::{
    AttributeValue, Attributes, Datatype, ProvDocument, ProvRecord, QualifiedName, RecordKind,
    Relation, RelationKind,
};
use raw::RawJson;

pub use validate::{validate, Issue, IssueCode, ValidationReport};

const START_TIME: &str = "prov:startTime";
const END_TIME: &str = "prov:endTime";

/// Serialize a document that passes [`validate`] with no errors.
pub fn serialize(doc: &ProvDocument) -> Result<Vec<u8>> {
    let report = validate(doc);
    if !report.is_valid() {
        return Err(Error::InvalidDocument(report));
    }
    Ok(render(doc).into_bytes())
}

pub fn serialize_to_string(doc: &ProvDocument) -> Result<String> {
    serialize(doc).map(|b| String::from_utf8(b).expect("serializer emits UTF-8"))
}

fn typed(value: &AttributeValue) -> Json {
    let mut obj = Map::new();
    obj.insert("$".into(), Json::String(value.lexical()));
    obj.insert("type".into(), Json::String(value.datatype().tag().to_owned()));
    Json::Object(obj)
}

fn put_attributes(obj: &mut Map<String, Json>, attrs: &Attributes) {
    for (key, value) in attrs {
        obj.insert(key.to_string(), typed(value));
    }
}

fn render(doc: &ProvDocument) -> String {
    let mut top = Map::new();
    top.insert(
        "prefix".into(),
        Json::Object(
            doc.prefixes()
                .iter()
                .map(|(p, iri)| (p.clone(), Json::String(iri.clone())))
                .collect(),
        ),
    );

    let records = doc.sorted_records();
    for kind in RecordKind::ALL {
        let mut section = Map::new();
        for record in records.iter().filter(|r| r.kind == kind) {
            let mut obj = Map::new();
            if let Some(t) = record.start_time {
                obj.insert(START_TIME.into(), typed(&AttributeValue::datetime(t)));
            }
            if let Some(t) = record.end_time {
                obj.insert(END_TIME.into(), typed(&AttributeValue::datetime(t)));
            }
            put_attributes(&mut obj, &record.attributes);
            section.insert(record.id.to_string(), Json::Object(obj));
        }
        if !section.is_empty() {
            top.insert(kind.section().into(), Json::Object(section));
        }
    }

    let relations = doc.sorted_relations();
    for kind in RelationKind::ALL {
        let (subject_key, object_key) = kind.endpoint_keys();
        let mut section = Map::new();
        for rel in relations.iter().filter(|r| r.kind == kind) {
            let mut obj = Map::new();
            obj.insert(subject_key.into(), Json::String(rel.subject.to_string()));
            obj.insert(object_key.into(), Json::String(rel.object.to_string()));
            put_attributes(&mut obj, &rel.attributes);
            section.insert(rel.id.to_string(), Json::Object(obj));
        }
        if !section.is_empty() {
            top.insert(kind.section().into(), Json::Object(section));
        }
    }

    for (name, value) in doc.extra_sections() {
        top.insert(name.clone(), value.clone());
    }

    let mut text = serde_json::to_string_pretty(&Json::Object(top)).expect("in-memory JSON");
    text.push('\n');
    text
}

/// Parse PROV-JSON, discarding warnings (they are still logged).
pub fn parse(bytes: &[u8]) -> Result<ProvDocument> {
    let (doc, warnings) = parse_with_warnings(bytes)?;
    for w in warnings {
        log::warn!("{w}");
    }
    Ok(doc)
}

/// `serialize(parse(x))` for valid input.
pub fn canonicalize(bytes: &[u8]) -> Result<Vec<u8>> {
    serialize(&parse(bytes)?)
}

fn shape_error(message: impl Into<String>) -> Error {
    Error::Parse {
        offset: None,
        message: message.into(),
    }
}

fn byte_offset(input: &[u8], line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let mut offset = 0;
    for (i, l) in input.split(|&b| b == b'\n').enumerate() {
        if i + 1 == line {
            return (offset + column.saturating_sub(1)).min(input.len());
        }
        offset += l.len() + 1;
    }
    input.len()
}

/// Parse PROV-JSON and return non-fatal findings (unknown datatype tags) alongside.
pub fn parse_with_warnings(bytes: &[u8]) -> Result<(ProvDocument, Vec<Issue>)> {
    let raw: RawJson = serde_json::from_slice(bytes).map_err(|e| Error::Parse {
        offset: Some(byte_offset(bytes, e.line(), e.column())),
        message: e.to_string(),
    })?;
    let RawJson::Object(sections) = raw else {
        return Err(shape_error(format!(
            "top level must be an object, found {}",
            raw.type_name()
        )));
    };

    let mut parser = Parser {
        doc: ProvDocument::empty(),
        warnings: Vec::new(),
    };
    for (name, body) in sections {
        parser.section(&name, body)?;
    }
    Ok((parser.doc, parser.warnings))
}

struct Parser {
    doc: ProvDocument,
    warnings: Vec<Issue>,
}

fn object(section: &str, value: RawJson) -> Result<Vec<(String, RawJson)>> {
    match value {
        RawJson::Object(fields) => Ok(fields),
        other => Err(shape_error(format!(
            "`{section}` must be an object, found {}",
            other.type_name()
        ))),
    }
}

fn name(text: &str) -> Result<QualifiedName> {
    QualifiedName::parse(text).map_err(|e| shape_error(e.to_string()))
}

impl Parser {
    fn section(&mut self, section: &str, body: RawJson) -> Result<()> {
        if section == "prefix" {
            for (prefix, iri) in object(section, body)? {
                let RawJson::String(iri) = iri else {
                    return Err(shape_error(format!("IRI of prefix `{prefix}` must be a string")));
                };
                if self.doc.prefixes().contains_key(&prefix)
                    && !matches!(prefix.as_str(), "prov" | "xsd")
                {
                    return Err(shape_error(format!("prefix `{prefix}` declared twice")));
                }
                self.doc
                    .add_prefix(&prefix, &iri)
                    .map_err(|e| shape_error(e.to_string()))?;
            }
            return Ok(());
        }
        if let Some(kind) = RecordKind::ALL.into_iter().find(|k| k.section() == section) {
            for (id, body) in object(section, body)? {
                let record = self.record(kind, &id, body)?;
                self.doc.add_record(record)?;
            }
            return Ok(());
        }
        if let Some(kind) = RelationKind::ALL.into_iter().find(|k| k.section() == section) {
            for (id, body) in object(section, body)? {
                let relation = self.relation(kind, &id, body)?;
                self.doc.add_relation(relation)?;
            }
            return Ok(());
        }
        self.doc
            .set_extra_section(section.to_owned(), body.into_canonical_value());
        Ok(())
    }

    fn record(&mut self, kind: RecordKind, id: &str, body: RawJson) -> Result<ProvRecord> {
        let mut record = ProvRecord::new(kind, name(id)?);
        for (key, value) in object(id, body)? {
            if kind == RecordKind::Activity && (key == START_TIME || key == END_TIME) {
                let text = match &value {
                    RawJson::String(s) => s.clone(),
                    _ => self.value(id, value)?.lexical(),
                };
                let ms = parse_datetime(&text)
                    .ok_or_else(|| shape_error(format!("`{id}`: bad {key} `{text}`")))?;
                if key == START_TIME {
                    record.start_time = Some(ms);
                } else {
                    record.end_time = Some(ms);
                }
                continue;
            }
            let value = self.value(id, value)?;
            record.attributes.push((name(&key)?, value));
        }
        Ok(record)
    }

    fn relation(&mut self, kind: RelationKind, id: &str, body: RawJson) -> Result<Relation> {
        let (subject_key, object_key) = kind.endpoint_keys();
        let mut subject = None;
        let mut object_ = None;
        let mut attributes = Vec::new();
        for (key, value) in object(id, body)? {
            if key == subject_key || key == object_key {
                let RawJson::String(text) = value else {
                    return Err(shape_error(format!("`{id}`: `{key}` must be a string")));
                };
                let slot = if key == subject_key { &mut subject } else { &mut object_ };
                *slot = Some(name(&text)?);
                continue;
            }
            let value = self.value(id, value)?;
            attributes.push((name(&key)?, value));
        }
        let missing = |k: &str| shape_error(format!("{kind} `{id}` lacks `{k}`"));
        Ok(Relation {
            kind,
            id: name(id)?,
            subject: subject.ok_or_else(|| missing(subject_key))?,
            object: object_.ok_or_else(|| missing(object_key))?,
            attributes,
        })
    }

    fn value(&mut self, owner: &str, value: RawJson) -> Result<AttributeValue> {
        let bad = |what: &str| shape_error(format!("`{owner}`: unsupported attribute value ({what})"));
        match value {
            RawJson::String(s) => Ok(AttributeValue::string(s)),
            RawJson::Bool(b) => Ok(AttributeValue::boolean(b)),
            RawJson::Number(n) => Ok(match n.as_i64() {
                Some(v) => AttributeValue::long(v),
                None => AttributeValue::double(n.as_f64().ok_or_else(|| bad("number"))?),
            }),
            RawJson::Object(fields) => {
                let mut text = None;
                let mut tag = None;
                for (k, v) in fields {
                    match (k.as_str(), v) {
                        ("$", RawJson::String(s)) => text = Some(s),
                        ("$", RawJson::Number(n)) => text = Some(n.to_string()),
                        ("$", RawJson::Bool(b)) => text = Some(b.to_string()),
                        ("type", RawJson::String(s)) => tag = Some(s),
                        ("lang", RawJson::String(_)) => {}
                        _ => return Err(bad("unexpected field in typed value")),
                    }
                }
                let text = text.ok_or_else(|| bad("missing `$`"))?;
                let datatype = tag.map_or(Datatype::String, |t| Datatype::from_tag(&t));
                if let Datatype::Other(tag) = &datatype {
                    self.warnings.push(Issue {
                        code: IssueCode::UnknownDatatype,
                        message: format!("unknown datatype `{tag}`; value kept as text"),
                        id: Some(owner.to_owned()),
                    });
                }
                AttributeValue::from_lexical(&text, datatype)
                    .map_err(|e| shape_error(format!("`{owner}`: {e}")))
            }
            other => Err(bad(other.type_name())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qn(s: &str) -> QualifiedName {
        QualifiedName::parse(s).unwrap()
    }

    fn triangle() -> ProvDocument {
        let mut doc = ProvDocument::new("www.example.org").unwrap();
        doc.add_record(ProvRecord::agent(qn("user:alice"))).unwrap();
        doc.add_record(
            ProvRecord::activity(qn("user:train"))
                .with_times(Some(0), Some(1500))
                .with_attribute(qn("user:lr"), 0.01),
        )
        .unwrap();
        doc.add_record(ProvRecord::entity(qn("user:model")).with_attribute(qn("prov:label"), "m"))
            .unwrap();
        doc.add_relation(Relation::new(
            RelationKind::WasAssociatedWith,
            qn("user:assoc"),
            qn("user:train"),
            qn("user:alice"),
        ))
        .unwrap();
        doc.add_relation(Relation::new(
            RelationKind::WasGeneratedBy,
            qn("user:gen"),
            qn("user:model"),
            qn("user:train"),
        ))
        .unwrap();
        doc
    }

    #[test]
    fn empty_document_has_only_prefix_section() {
        let text = serialize_to_string(&ProvDocument::new("urn:a").unwrap()).unwrap();
        assert_eq!(
            text,
            "{\n  \"prefix\": {\n    \"prov\": \"http://www.w3.org/ns/prov#\",\n    \"user\": \"urn:a\",\n    \"xsd\": \"http://www.w3.org/2001/XMLSchema#\"\n  }\n}\n"
        );
    }

    #[test]
    fn identity_namespace_round_trips() {
        let doc = ProvDocument::new("urn:x:y").unwrap();
        let bytes = serialize(&doc).unwrap();
        assert_eq!(parse(&bytes).unwrap(), doc);
        assert_eq!(canonicalize(&bytes).unwrap(), bytes);
    }

    #[test]
    fn triangle_layout() {
        let text = serialize_to_string(&triangle()).unwrap();
        let expected = r#"{
  "prefix": {
    "prov": "http://www.w3.org/ns/prov#",
    "user": "www.example.org",
    "xsd": "http://www.w3.org/2001/XMLSchema#"
  },
  "entity": {
    "user:model": {
      "prov:label": {
        "$": "m",
        "type": "xsd:string"
      }
    }
  },
  "activity": {
    "user:train": {
      "prov:startTime": {
        "$": "1970-01-01T00:00:00.000Z",
        "type": "xsd:dateTime"
      },
      "prov:endTime": {
        "$": "1970-01-01T00:00:01.500Z",
        "type": "xsd:dateTime"
      },
      "user:lr": {
        "$": "0.01",
        "type": "xsd:double"
      }
    }
  },
  "agent": {
    "user:alice": {}
  },
  "wasGeneratedBy": {
    "user:gen": {
      "prov:entity": "user:model",
      "prov:activity": "user:train"
    }
  },
  "wasAssociatedWith": {
    "user:assoc": {
      "prov:activity": "user:train",
      "prov:agent": "user:alice"
    }
  }
}
"#;
        assert_eq!(text, expected);
        assert_eq!(parse(text.as_bytes()).unwrap(), triangle());
    }

    #[test]
    fn refuses_invalid_documents() {
        let mut doc = ProvDocument::new("urn:a").unwrap();
        doc.add_relation(Relation::new(
            RelationKind::Used,
            qn("user:u"),
            qn("user:a"),
            qn("user:e"),
        ))
        .unwrap();
        match serialize(&doc) {
            Err(Error::InvalidDocument(report)) => assert_eq!(report.errors.len(), 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_json_reports_offset() {
        let err = parse(b"{\n  \"prefix\": {,}\n}").unwrap_err();
        match err {
            Error::Parse { offset: Some(o), .. } => assert_eq!(o, 15),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_entity_is_a_parse_error() {
        let input = br#"{"entity": {"ex:a": {}, "ex:a": {}}}"#;
        assert!(matches!(parse(input), Err(Error::DuplicateRecord { .. })));
    }

    #[test]
    fn dangling_reference_parses_then_fails_validation() {
        let input = br#"{"prefix": {"ex": "urn:ex"},
            "activity": {"ex:run": {}},
            "used": {"ex:u": {"prov:activity": "ex:run", "prov:entity": "ex:ds"}}}"#;
        let doc = parse(input).unwrap();
        let report = validate(&doc);
        assert_eq!(report.errors.len(), 1);
        assert_eq!(report.errors[0].code, IssueCode::DanglingReference);
    }

    #[test]
    fn unknown_datatype_warns_and_survives() {
        let input = br#"{"prefix": {"ex": "urn:ex"},
            "entity": {"ex:a": {"ex:v": {"$": "12", "type": "xsd:int"}}}}"#;
        let (doc, warnings) = parse_with_warnings(input).unwrap();
        assert_eq!(warnings.len(), 1);
        assert_eq!(warnings[0].code, IssueCode::UnknownDatatype);
        let value = doc.records()[0].attributes[0].1.clone();
        assert_eq!(value.as_str(), Some("12"));
        let out = serialize_to_string(&doc).unwrap();
        assert!(out.contains("\"type\": \"xsd:int\""));
    }

    #[test]
    fn bare_literals_and_unknown_sections_are_canonicalized() {
        let input = br#"{"bundle": {"z": 1, "a": [true]},
            "prefix": {"ex": "urn:ex"},
            "entity": {"ex:a": {"ex:n": 3, "ex:x": 0.5, "ex:s": "t", "ex:b": false}}}"#;
        let doc = parse(input).unwrap();
        let rec = &doc.records()[0];
        assert_eq!(rec.attributes[0].1, AttributeValue::long(3));
        assert_eq!(rec.attributes[1].1, AttributeValue::double(0.5));
        let out = serialize_to_string(&doc).unwrap();
        assert!(out.ends_with("  \"bundle\": {\n    \"a\": [\n      true\n    ],\n    \"z\": 1\n  }\n}\n"));
        assert_eq!(canonicalize(out.as_bytes()).unwrap(), out.as_bytes());
    }

    #[test]
    fn bare_activity_times_accepted() {
        let input = br#"{"prefix": {"ex": "urn:ex"},
            "activity": {"ex:a": {"prov:startTime": "2024-01-01T00:00:00Z"}}}"#;
        let doc = parse(input).unwrap();
        assert_eq!(doc.records()[0].start_time, Some(1_704_067_200_000));
    }

    #[test]
    fn not_an_object() {
        assert!(matches!(parse(b"[1,2]"), Err(Error::Parse { offset: None, .. })));
        assert!(matches!(parse(b"hello"), Err(Error::Parse { offset: Some(_), .. })));
    }
}
