// Working with PROV documents directly: build, serialize, parse back and
// validate, then see what the validator says about a broken document.
//
// `cargo run --example prov_document`

use provtrack::prov::{ProvDocument, ProvRecord, QualifiedName, Relation, RelationKind};
use provtrack::prov_json::{self, ValidationReport};

fn qn(text: &str) -> QualifiedName {
    QualifiedName::parse(text).expect("literal names are valid")
}

pub fn run_example() -> provtrack::Result<(String, ValidationReport)> {
    let mut doc = ProvDocument::new("www.example.org")?;
    doc.add_record(ProvRecord::agent(qn("user:alice")))?;
    doc.add_record(
        ProvRecord::activity(qn("user:train"))
            .with_times(Some(1_700_000_000_000), Some(1_700_000_360_000))
            .with_attribute(qn("prov:label"), "training"),
    )?;
    doc.add_record(ProvRecord::entity(qn("user:mnist")))?;
    doc.add_record(ProvRecord::entity(qn("user:model")).with_attribute(qn("prov:label"), "weights"))?;
    doc.add_relation(Relation::new(RelationKind::Used, qn("user:u1"), qn("user:train"), qn("user:mnist")))?;
    doc.add_relation(Relation::new(RelationKind::WasGeneratedBy, qn("user:g1"), qn("user:model"), qn("user:train")))?;
    doc.add_relation(Relation::new(RelationKind::WasAssociatedWith, qn("user:a1"), qn("user:train"), qn("user:alice")))?;

    let text = prov_json::serialize_to_string(&doc)?;
    let parsed = prov_json::parse(text.as_bytes())?;
    assert_eq!(parsed, doc);
    println!("{text}");
    println!("valid document: {}", prov_json::validate(&parsed));

    let broken = text.replace("\"prov:entity\": \"user:mnist\"", "\"prov:entity\": \"user:missing\"");
    let report = prov_json::validate(&prov_json::parse(broken.as_bytes())?);
    println!("after breaking the `used` edge:\n{report}");
    Ok((text, report))
}

#[allow(dead_code)]
fn main() -> provtrack::Result<()> {
    run_example().map(|_| ())
}
