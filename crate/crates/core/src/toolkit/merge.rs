//! Combine per-rank documents under one `prov:Collection`.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::graph::vocab;
use crate::prov::{
    AttributeValue, Datatype, ProvDocument, ProvRecord, QualifiedName, RecordKind, Relation,
    RelationKind, DEFAULT_PREFIX,
};
use crate::prov_json;

/// Rewrites qualified names of one input whose prefixes were renamed.
struct Renamer {
    renamed: BTreeMap<String, String>,
}

impl Renamer {
    fn name(&self, q: &QualifiedName) -> QualifiedName {
        match self.renamed.get(q.prefix()) {
            Some(p) => q.with_prefix(p).expect("renamed prefix is valid"),
            None => q.clone(),
        }
    }

    fn value(&self, v: &AttributeValue) -> AttributeValue {
        match (v.datatype(), v.as_qualified_name()) {
            (Datatype::QualifiedName, Some(q)) => AttributeValue::qualified_name(&self.name(&q)),
            _ => v.clone(),
        }
    }

    fn attributes(&self, attrs: &[(QualifiedName, AttributeValue)]) -> Vec<(QualifiedName, AttributeValue)> {
        attrs.iter().map(|(k, v)| (self.name(k), self.value(v))).collect()
    }
}

/// Prefix an input bound to the run vocabulary, whatever it is called there.
fn vocab_prefix(doc: &ProvDocument) -> Option<&str> {
    doc.prefixes()
        .iter()
        .find(|(_, iri)| iri.as_str() == vocab::IRI)
        .map(|(p, _)| p.as_str())
}

fn is_summary(record: &ProvRecord, environment_type: &QualifiedName, prov_type: &QualifiedName) -> bool {
    record.kind == RecordKind::Entity
        && record
            .attribute(prov_type)
            .and_then(AttributeValue::as_qualified_name)
            .is_some_and(|t| &t == environment_type)
}

/// The run-summary entity of a single-run document: the entity typed
/// `prov4ml:Environment`, which also carries experiment name and run id.
pub fn summary_entity(doc: &ProvDocument) -> Result<&ProvRecord> {
    let Some(vocab_prefix) = vocab_prefix(doc) else {
        return Err(Error::invalid("document declares no run vocabulary"));
    };
    let environment_type = QualifiedName::new(vocab_prefix, vocab::TYPE_ENVIRONMENT)?;
    let prov_type = QualifiedName::new("prov", "type")?;
    let mut found = doc
        .records_of(RecordKind::Entity)
        .filter(|r| is_summary(r, &environment_type, &prov_type));
    match (found.next(), found.next()) {
        (Some(r), None) => Ok(r),
        (None, _) => Err(Error::invalid("document has no run summary entity")),
        (Some(_), Some(_)) => Err(Error::invalid(
            "document has more than one run summary entity; merge the original rank files instead",
        )),
    }
}

fn default_collection_id(doc: &ProvDocument, summary: &ProvRecord) -> Result<String> {
    let prefix = vocab_prefix(doc).unwrap_or(vocab::PREFIX);
    let attr = |local: &str| QualifiedName::new(prefix, local).ok().and_then(|k| summary.attribute(&k).cloned());
    let experiment = attr("experiment").and_then(|v| v.as_str().map(str::to_owned));
    let run_id = attr("run_id").and_then(|v| v.as_i64());
    match (experiment, run_id) {
        (Some(e), Some(id)) => Ok(format!("{e}_run{id}_collection")),
        _ => Err(Error::invalid(
            "run summary lacks experiment/run_id; pass an explicit collection id",
        )),
    }
}

fn collection_name(doc: &ProvDocument, raw: &str) -> Result<QualifiedName> {
    if let Some((prefix, _)) = raw.split_once(':') {
        if doc.is_declared(prefix) {
            return QualifiedName::parse(raw);
        }
    }
    QualifiedName::new(DEFAULT_PREFIX, raw)
}

/// Merge parsed documents. `inputs` pairs each document with a label used in
/// error messages (normally its path).
///
/// Records and relations are copied unchanged except when an input binds an
/// already-used prefix to a different IRI: that prefix is renamed to
/// `<prefix>_r<k>` (k = input index) throughout the input.
pub fn merge_documents(inputs: &[(String, ProvDocument)], collection_id: Option<&str>) -> Result<ProvDocument> {
    let Some((_, first)) = inputs.first() else {
        return Err(Error::invalid("merge needs at least one input"));
    };
    let mut out = ProvDocument::empty();
    let mut members = Vec::with_capacity(inputs.len());
    let mut origin: BTreeMap<(RecordKind, QualifiedName), usize> = BTreeMap::new();

    for (k, (label, doc)) in inputs.iter().enumerate() {
        let report = prov_json::validate(doc);
        if !report.is_valid() {
            return Err(Error::invalid(format!("{label} does not validate:\n{report}")));
        }
        let mut renamer = Renamer { renamed: BTreeMap::new() };
        for (prefix, iri) in doc.prefixes() {
            match out.namespace(prefix) {
                Some(existing) if existing == iri => {}
                None => out.add_prefix(prefix, iri)?,
                Some(_) => {
                    let mut fresh = format!("{prefix}_r{k}");
                    while out.namespace(&fresh).is_some_and(|i| i != iri) {
                        fresh.push('_');
                    }
                    if out.namespace(&fresh).is_none() {
                        out.add_prefix(&fresh, iri)?;
                    }
                    renamer.renamed.insert(prefix.clone(), fresh);
                }
            }
        }

        let summary = summary_entity(doc).map_err(|e| match e {
            Error::InvalidArgument(m) => Error::invalid(format!("{label}: {m}")),
            other => other,
        })?;
        members.push(renamer.name(&summary.id));

        for record in doc.records() {
            let id = renamer.name(&record.id);
            if let Some(j) = origin.insert((record.kind, id.clone()), k) {
                return Err(Error::invalid(format!(
                    "{} `{id}` appears in both {} and {label}",
                    record.kind, inputs[j].0
                )));
            }
            let mut copy = ProvRecord::new(record.kind, id);
            copy.attributes = renamer.attributes(&record.attributes);
            copy.start_time = record.start_time;
            copy.end_time = record.end_time;
            out.add_record(copy)?;
        }
        for rel in doc.relations() {
            let mut copy = Relation::new(
                rel.kind,
                renamer.name(&rel.id),
                renamer.name(&rel.subject),
                renamer.name(&rel.object),
            );
            copy.attributes = renamer.attributes(&rel.attributes);
            out.add_relation(copy).map_err(|e| Error::invalid(format!("{label}: {e}")))?;
        }
    }

    let raw_id = match collection_id {
        Some(id) => id.to_owned(),
        None => default_collection_id(first, summary_entity(first)?)?,
    };
    if out.namespace(DEFAULT_PREFIX).is_none() {
        // Only reachable when no input used the default prefix.
        out.add_prefix(DEFAULT_PREFIX, "urn:provtrack:merged#")?;
    }
    let collection = collection_name(&out, &raw_id)?;
    if RecordKind::ALL.iter().any(|&k| out.contains(k, &collection)) {
        return Err(Error::invalid(format!(
            "collection id `{collection}` already names a record in the inputs"
        )));
    }
    let prov_collection = QualifiedName::new("prov", "Collection")?;
    let mut record = ProvRecord::entity(collection.clone())
        .with_attribute(QualifiedName::new("prov", "type")?, AttributeValue::qualified_name(&prov_collection));
    if let Some(p) = vocab_prefix(&out) {
        record = record.with_attribute(QualifiedName::new(p, "member_count")?, members.len() as i64);
    }
    out.add_record(record)?;
    for (k, member) in members.into_iter().enumerate() {
        let id = QualifiedName::parse(&format!("{collection}.member.{k}"))?;
        out.add_relation(Relation::new(RelationKind::HadMember, id, collection.clone(), member))?;
    }

    let report = prov_json::validate(&out);
    if !report.is_valid() {
        return Err(Error::InvalidDocument(report));
    }
    Ok(out)
}
