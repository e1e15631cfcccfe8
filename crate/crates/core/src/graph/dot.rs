use std::fmt::Write;

use crate::prov::{ProvDocument, QualifiedName, RecordKind};

fn node_name(kind: RecordKind, id: &QualifiedName) -> String {
    format!("{}:{}", kind_label(kind), id)
}

fn kind_label(kind: RecordKind) -> &'static str {
    match kind {
        RecordKind::Entity => "entity",
        RecordKind::Activity => "activity",
        RecordKind::Agent => "agent",
    }
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

/// Render a document as a Graphviz digraph.
///
/// One node per record, one edge per relation, both sorted by id so equal
/// documents give identical text. Node names are qualified by kind because
/// PROV allows an entity and an activity to share an identifier.
pub fn to_dot(doc: &ProvDocument) -> String {
    let mut out = String::from("digraph provenance {\n  rankdir=BT;\n  node [fontname=\"Helvetica\", style=filled];\n");
    for r in doc.sorted_records() {
        let (shape, fill) = match r.kind {
            RecordKind::Entity => ("ellipse", "#FFFC87"),
            RecordKind::Activity => ("box", "#9FB1FC"),
            RecordKind::Agent => ("house", "#FED37F"),
        };
        let _ = writeln!(
            out,
            "  {} [label={}, shape={shape}, fillcolor={}];",
            quote(&node_name(r.kind, &r.id)),
            quote(r.id.as_str()),
            quote(fill),
        );
    }
    for rel in doc.sorted_relations() {
        let (from, to) = rel.kind.endpoint_kinds();
        let _ = writeln!(
            out,
            "  {} -> {} [label={}];",
            quote(&node_name(from, &rel.subject)),
            quote(&node_name(to, &rel.object)),
            quote(rel.kind.section()),
        );
    }
    out.push_str("}\n");
    out
}
