//! In-memory PROV-DM subset: entities, activities, agents and the five
//! relations (`used`, `wasGeneratedBy`, `wasAssociatedWith`,
//! `wasDerivedFrom`, `hadMember`).

mod document;
pub(crate) mod name;
mod value;

pub use document::{
    Attributes, ProvDocument, ProvRecord, RecordKind, Relation, RelationKind, DEFAULT_PREFIX,
    PROV_IRI, PROV_PREFIX, XSD_IRI, XSD_PREFIX,
};
pub use name::QualifiedName;
pub use value::{format_double, parse_double, AttributeValue, Datatype, Value};
