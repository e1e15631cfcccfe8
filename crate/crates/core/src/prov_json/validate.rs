use std::collections::HashSet;
use std::fmt;

use crate::prov::{ProvDocument, QualifiedName, RecordKind, RelationKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IssueCode {
    DanglingReference,
    UndeclaredPrefix,
    KindMismatch,
    DuplicateAttribute,
    DuplicateRecord,
    InvalidTimeRange,
    EmptyDocument,
    ActivityWithoutAssociation,
    UnknownDatatype,
}

impl IssueCode {
    pub fn as_str(self) -> &'static str {
        match self {
            IssueCode::DanglingReference => "dangling-reference",
            IssueCode::UndeclaredPrefix => "undeclared-prefix",
            IssueCode::KindMismatch => "kind-mismatch",
            IssueCode::DuplicateAttribute => "duplicate-attribute",
            IssueCode::DuplicateRecord => "duplicate-record",
            IssueCode::InvalidTimeRange => "invalid-time-range",
            IssueCode::EmptyDocument => "empty-document",
            IssueCode::ActivityWithoutAssociation => "activity-without-association",
            IssueCode::UnknownDatatype => "unknown-datatype",
        }
    }
}

impl fmt::Display for IssueCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Issue {
    pub code: IssueCode,
    pub message: String,
    pub id: Option<String>,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.id {
            Some(id) => write!(f, "{} [{}]: {}", self.code, id, self.message),
            None => write!(f, "{}: {}", self.code, self.message),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub errors: Vec<Issue>,
    pub warnings: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.errors.is_empty()
    }

    fn error(&mut self, code: IssueCode, id: impl ToString, message: String) {
        self.errors.push(Issue {
            code,
            message,
            id: Some(id.to_string()),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.errors {
            writeln!(f, "error: {e}")?;
        }
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        write!(
            f,
            "{} error(s), {} warning(s)",
            self.errors.len(),
            self.warnings.len()
        )
    }
}

/// Structural checks. Never fails; problems are collected in the report.
pub fn validate(doc: &ProvDocument) -> ValidationReport {
    let mut report = ValidationReport::default();

    let check_prefix = |report: &mut ValidationReport, owner: &QualifiedName, name: &QualifiedName| {
        if !doc.is_declared(name.prefix()) {
            report.error(
                IssueCode::UndeclaredPrefix,
                owner,
                format!("prefix `{}` of `{name}` is not declared", name.prefix()),
            );
        }
    };
    let check_attributes = |report: &mut ValidationReport,
                            owner: &QualifiedName,
                            attrs: &[(QualifiedName, crate::prov::AttributeValue)]| {
        let mut seen = HashSet::new();
        for (key, value) in attrs {
            check_prefix(report, owner, key);
            if let Some(target) = value.as_qualified_name() {
                check_prefix(report, owner, &target);
            }
            if !seen.insert(key) {
                report.error(
                    IssueCode::DuplicateAttribute,
                    owner,
                    format!("attribute `{key}` appears more than once"),
                );
            }
        }
    };

    let mut seen_records = HashSet::new();
    for record in doc.records() {
        check_prefix(&mut report, &record.id, &record.id);
        check_attributes(&mut report, &record.id, &record.attributes);
        if !seen_records.insert((record.kind, &record.id)) {
            report.error(
                IssueCode::DuplicateRecord,
                &record.id,
                format!("{} declared more than once", record.kind),
            );
        }
        if let (Some(start), Some(end)) = (record.start_time, record.end_time) {
            if end < start {
                report.error(
                    IssueCode::InvalidTimeRange,
                    &record.id,
                    "endTime precedes startTime".into(),
                );
            }
        }
    }

    let mut seen_relations = HashSet::new();
    for rel in doc.relations() {
        check_prefix(&mut report, &rel.id, &rel.id);
        check_prefix(&mut report, &rel.id, &rel.subject);
        check_prefix(&mut report, &rel.id, &rel.object);
        check_attributes(&mut report, &rel.id, &rel.attributes);
        if !seen_relations.insert((rel.kind, &rel.id)) {
            report.error(
                IssueCode::DuplicateRecord,
                &rel.id,
                format!("{} relation id used more than once", rel.kind),
            );
        }
        let (subject_kind, object_kind) = rel.kind.endpoint_kinds();
        for (endpoint, kind) in [(&rel.subject, subject_kind), (&rel.object, object_kind)] {
            if doc.contains(kind, endpoint) {
                continue;
            }
            match doc.declared_kind_mismatch(endpoint, kind) {
                Some(found) => report.error(
                    IssueCode::KindMismatch,
                    &rel.id,
                    format!("{} expects {kind} `{endpoint}`, found {found}", rel.kind),
                ),
                None => report.error(
                    IssueCode::DanglingReference,
                    &rel.id,
                    format!("{} refers to undeclared {kind} `{endpoint}`", rel.kind),
                ),
            }
        }
    }

    if doc.is_empty() {
        report.warnings.push(Issue {
            code: IssueCode::EmptyDocument,
            message: "document has no records or relations".into(),
            id: None,
        });
    }
    let associated: HashSet<&QualifiedName> = doc
        .relations_of(RelationKind::WasAssociatedWith)
        .map(|r| &r.subject)
        .collect();
    for activity in doc.records_of(RecordKind::Activity) {
        if !associated.contains(&activity.id) {
            report.warnings.push(Issue {
                code: IssueCode::ActivityWithoutAssociation,
                message: "activity has no wasAssociatedWith agent".into(),
                id: Some(activity.id.to_string()),
            });
        }
    }
    report
}
