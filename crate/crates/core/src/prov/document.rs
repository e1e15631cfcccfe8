use std::collections::{BTreeMap, HashSet};
use std::fmt;

use crate::clock::EpochMillis;
use crate::error::{Error, Result};

use super::{AttributeValue, QualifiedName};

pub const PROV_PREFIX: &str = "prov";
pub const PROV_IRI: &str = "http://www.w3.org/ns/prov#";
pub const XSD_PREFIX: &str = "xsd";
pub const XSD_IRI: &str = "http://www.w3.org/2001/XMLSchema#";
/// Prefix bound to the caller's namespace by [`ProvDocument::new`].
pub const DEFAULT_PREFIX: &str = "user";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RecordKind {
    Entity,
    Activity,
    Agent,
}

impl RecordKind {
    pub const ALL: [RecordKind; 3] = [RecordKind::Entity, RecordKind::Activity, RecordKind::Agent];

    /// Section name in PROV-JSON.
    pub fn section(self) -> &'static str {
        match self {
            RecordKind::Entity => "entity",
            RecordKind::Activity => "activity",
            RecordKind::Agent => "agent",
        }
    }
}

impl fmt::Display for RecordKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.section())
    }
}

pub type Attributes = Vec<(QualifiedName, AttributeValue)>;

#[derive(Debug, Clone, PartialEq)]
pub struct ProvRecord {
    pub id: QualifiedName,
    pub kind: RecordKind,
    /// Ordered; keys are expected to be unique (the validator reports repeats).
    pub attributes: Attributes,
    /// Activities only.
    pub start_time: Option<EpochMillis>,
    pub end_time: Option<EpochMillis>,
}

impl ProvRecord {
    pub fn new(kind: RecordKind, id: QualifiedName) -> Self {
        Self {
            id,
            kind,
            attributes: Vec::new(),
            start_time: None,
            end_time: None,
        }
    }

    pub fn entity(id: QualifiedName) -> Self {
        Self::new(RecordKind::Entity, id)
    }

    pub fn activity(id: QualifiedName) -> Self {
        Self::new(RecordKind::Activity, id)
    }

    pub fn agent(id: QualifiedName) -> Self {
        Self::new(RecordKind::Agent, id)
    }

    pub fn with_attribute(mut self, key: QualifiedName, value: impl Into<AttributeValue>) -> Self {
        self.attributes.push((key, value.into()));
        self
    }

    pub fn with_times(mut self, start: Option<EpochMillis>, end: Option<EpochMillis>) -> Self {
        self.start_time = start;
        self.end_time = end;
        self
    }

    pub fn attribute(&self, key: &QualifiedName) -> Option<&AttributeValue> {
        self.attributes.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RelationKind {
    Used,
    WasGeneratedBy,
    WasAssociatedWith,
    WasDerivedFrom,
    HadMember,
}

impl RelationKind {
    pub const ALL: [RelationKind; 5] = [
        RelationKind::Used,
        RelationKind::WasGeneratedBy,
        RelationKind::WasAssociatedWith,
        RelationKind::WasDerivedFrom,
        RelationKind::HadMember,
    ];

    pub fn section(self) -> &'static str {
        match self {
            RelationKind::Used => "used",
            RelationKind::WasGeneratedBy => "wasGeneratedBy",
            RelationKind::WasAssociatedWith => "wasAssociatedWith",
            RelationKind::WasDerivedFrom => "wasDerivedFrom",
            RelationKind::HadMember => "hadMember",
        }
    }

    /// Required record kinds of (subject, object).
    pub fn endpoint_kinds(self) -> (RecordKind, RecordKind) {
        use RecordKind::*;
        match self {
            RelationKind::Used => (Activity, Entity),
            RelationKind::WasGeneratedBy => (Entity, Activity),
            RelationKind::WasAssociatedWith => (Activity, Agent),
            RelationKind::WasDerivedFrom => (Entity, Entity),
            RelationKind::HadMember => (Entity, Entity),
        }
    }

    /// PROV-JSON property names holding (subject, object).
    pub fn endpoint_keys(self) -> (&'static str, &'static str) {
        match self {
            RelationKind::Used => ("prov:activity", "prov:entity"),
            RelationKind::WasGeneratedBy => ("prov:entity", "prov:activity"),
            RelationKind::WasAssociatedWith => ("prov:activity", "prov:agent"),
            RelationKind::WasDerivedFrom => ("prov:generatedEntity", "prov:usedEntity"),
            RelationKind::HadMember => ("prov:collection", "prov:entity"),
        }
    }
}

impl fmt::Display for RelationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.section())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Relation {
    pub kind: RelationKind,
    pub id: QualifiedName,
    pub subject: QualifiedName,
    pub object: QualifiedName,
    pub attributes: Attributes,
}

impl Relation {
    pub fn new(
        kind: RelationKind,
        id: QualifiedName,
        subject: QualifiedName,
        object: QualifiedName,
    ) -> Self {
        Self {
            kind,
            id,
            subject,
            object,
            attributes: Vec::new(),
        }
    }

    pub fn with_attribute(mut self, key: QualifiedName, value: impl Into<AttributeValue>) -> Self {
        self.attributes.push((key, value.into()));
        self
    }
}

/// A PROV document: namespace bindings, records, relations.
///
/// Records and relations iterate in insertion order. Equality is structural:
/// two documents are equal when they bind the same prefixes and contain the
/// same records and relations, regardless of insertion order.
#[derive(Debug, Clone, Default)]
pub struct ProvDocument {
    prefixes: BTreeMap<String, String>,
    records: Vec<ProvRecord>,
    relations: Vec<Relation>,
    /// Top-level sections this crate does not model, kept for re-emission.
    extra: BTreeMap<String, serde_json::Value>,
    record_index: HashSet<(RecordKind, QualifiedName)>,
    relation_index: HashSet<(RelationKind, QualifiedName)>,
}

impl ProvDocument {
    /// A document with `namespace` bound to [`DEFAULT_PREFIX`] plus the `prov` and `xsd` bindings.
    pub fn new(namespace: &str) -> Result<Self> {
        if namespace.is_empty() {
            return Err(Error::invalid("namespace IRI must not be empty"));
        }
        let mut doc = Self::empty();
        doc.prefixes.insert(DEFAULT_PREFIX.into(), namespace.into());
        Ok(doc)
    }

    /// Only the reserved `prov`/`xsd` bindings.
    pub fn empty() -> Self {
        let mut doc = Self::default();
        doc.prefixes.insert(PROV_PREFIX.into(), PROV_IRI.into());
        doc.prefixes.insert(XSD_PREFIX.into(), XSD_IRI.into());
        doc
    }

    pub fn add_prefix(&mut self, prefix: &str, iri: &str) -> Result<()> {
        if !super::name::is_valid_prefix(prefix) {
            return Err(Error::invalid(format!("invalid namespace prefix `{prefix}`")));
        }
        if iri.is_empty() {
            return Err(Error::invalid(format!("empty IRI for prefix `{prefix}`")));
        }
        match self.prefixes.get(prefix) {
            Some(existing) if existing != iri => Err(Error::invalid(format!(
                "prefix `{prefix}` already bound to `{existing}`"
            ))),
            _ => {
                self.prefixes.insert(prefix.into(), iri.into());
                Ok(())
            }
        }
    }

    pub fn prefixes(&self) -> &BTreeMap<String, String> {
        &self.prefixes
    }

    pub fn namespace(&self, prefix: &str) -> Option<&str> {
        self.prefixes.get(prefix).map(String::as_str)
    }

    /// Whether `prefix` is usable in this document (reserved prefixes always are).
    pub fn is_declared(&self, prefix: &str) -> bool {
        prefix == PROV_PREFIX || prefix == XSD_PREFIX || self.prefixes.contains_key(prefix)
    }

    pub fn records(&self) -> &[ProvRecord] {
        &self.records
    }

    pub fn relations(&self) -> &[Relation] {
        &self.relations
    }

    pub fn records_of(&self, kind: RecordKind) -> impl Iterator<Item = &ProvRecord> {
        self.records.iter().filter(move |r| r.kind == kind)
    }

    pub fn relations_of(&self, kind: RelationKind) -> impl Iterator<Item = &Relation> {
        self.relations.iter().filter(move |r| r.kind == kind)
    }

    pub fn contains(&self, kind: RecordKind, id: &QualifiedName) -> bool {
        self.record_index.contains(&(kind, id.clone()))
    }

    pub fn record(&self, kind: RecordKind, id: &QualifiedName) -> Option<&ProvRecord> {
        if !self.contains(kind, id) {
            return None;
        }
        self.records.iter().find(|r| r.kind == kind && &r.id == id)
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty() && self.relations.is_empty()
    }

    pub fn add_record(&mut self, record: ProvRecord) -> Result<()> {
        if record.kind != RecordKind::Activity
            && (record.start_time.is_some() || record.end_time.is_some())
        {
            return Err(Error::invalid(format!(
                "{} `{}` cannot carry start/end times",
                record.kind, record.id
            )));
        }
        if let (Some(start), Some(end)) = (record.start_time, record.end_time) {
            if end < start {
                return Err(Error::invalid(format!(
                    "activity `{}` ends before it starts",
                    record.id
                )));
            }
        }
        if record.kind == RecordKind::Activity
            && record
                .attributes
                .iter()
                .any(|(k, _)| matches!(k.as_str(), "prov:startTime" | "prov:endTime"))
        {
            return Err(Error::invalid(
                "activity times belong in start_time/end_time, not attributes",
            ));
        }
        let key = (record.kind, record.id.clone());
        if self.record_index.contains(&key) {
            return Err(Error::DuplicateRecord {
                kind: record.kind.section(),
                id: record.id.to_string(),
            });
        }
        self.record_index.insert(key);
        self.records.push(record);
        Ok(())
    }

    /// Endpoints may be undeclared (the validator flags that later), but an
    /// endpoint already declared only under another kind is rejected here.
    pub fn add_relation(&mut self, relation: Relation) -> Result<()> {
        let (subject_kind, object_kind) = relation.kind.endpoint_kinds();
        for (id, kind) in [(&relation.subject, subject_kind), (&relation.object, object_kind)] {
            if let Some(found) = self.declared_kind_mismatch(id, kind) {
                return Err(Error::invalid(format!(
                    "{} endpoint `{id}` is declared as {found}, expected {kind}",
                    relation.kind
                )));
            }
        }
        let (subject_key, object_key) = relation.kind.endpoint_keys();
        if let Some((k, _)) = relation
            .attributes
            .iter()
            .find(|(k, _)| k.as_str() == subject_key || k.as_str() == object_key)
        {
            return Err(Error::invalid(format!(
                "attribute `{k}` collides with a {} endpoint",
                relation.kind
            )));
        }
        let key = (relation.kind, relation.id.clone());
        if self.relation_index.contains(&key) {
            return Err(Error::DuplicateRecord {
                kind: relation.kind.section(),
                id: relation.id.to_string(),
            });
        }
        self.relation_index.insert(key);
        self.relations.push(relation);
        Ok(())
    }

    /// `Some(other_kind)` when `id` is declared, but not as `expected`.
    pub(crate) fn declared_kind_mismatch(
        &self,
        id: &QualifiedName,
        expected: RecordKind,
    ) -> Option<RecordKind> {
        if self.contains(expected, id) {
            return None;
        }
        RecordKind::ALL
            .into_iter()
            .find(|&k| k != expected && self.contains(k, id))
    }

    pub fn extra_sections(&self) -> &BTreeMap<String, serde_json::Value> {
        &self.extra
    }

    pub(crate) fn set_extra_section(&mut self, name: String, value: serde_json::Value) {
        self.extra.insert(name, value);
    }

    pub(crate) fn sorted_records(&self) -> Vec<&ProvRecord> {
        let mut out: Vec<_> = self.records.iter().collect();
        out.sort_by(|a, b| (a.kind, &a.id).cmp(&(b.kind, &b.id)));
        out
    }

    pub(crate) fn sorted_relations(&self) -> Vec<&Relation> {
        let mut out: Vec<_> = self.relations.iter().collect();
        out.sort_by(|a, b| (a.kind, &a.id).cmp(&(b.kind, &b.id)));
        out
    }
}

impl PartialEq for ProvDocument {
    fn eq(&self, other: &Self) -> bool {
        self.prefixes == other.prefixes
            && self.extra == other.extra
            && self.sorted_records() == other.sorted_records()
            && self.sorted_relations() == other.sorted_relations()
    }
}
