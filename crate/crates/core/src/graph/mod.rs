//! Provenance graph assembly and exports.
//!
//! # Graph mapping
//!
//! | run content                         | PROV element                                  |
//! |-------------------------------------|-----------------------------------------------|
//! | the run                             | activity with start/end time                  |
//! | user namespace                      | agent, `wasAssociatedWith` the run            |
//! | environment snapshot                | entity `used` by the run                      |
//! | each parameter, each dataset        | entity `used` by the run                      |
//! | each metric series (summary only)   | entity `wasGeneratedBy` the run               |
//! | each artifact, model version        | entity `wasGeneratedBy` the run               |
//! | final model                         | entity `wasGeneratedBy` the run               |
//! | consecutive versions of one label   | `wasDerivedFrom` chain, newer → older         |
//! | final model                         | `wasDerivedFrom` the most recent version      |
//!
//! Identifiers live in the user namespace and are prefixed by
//! `<experiment>_<run_id>_rank<rank>` so per-rank documents can be merged
//! without collisions. The environment entity (typed `prov4ml:Environment`)
//! also carries the run identity and is the member a merged collection
//! points at.

mod dot;
mod export;
mod plot;
mod svg;

use crate::logging::ArtifactRecord;
use crate::prov::{
    name::percent_escape, AttributeValue, ProvDocument, ProvRecord, QualifiedName, Relation,
    RelationKind, DEFAULT_PREFIX,
};
use crate::run::RunSnapshot;

pub use dot::to_dot;
pub use export::{export_metric_csv, locate_series, plot_metrics, render_csv};
pub use plot::{render_plot, PlotSeries};
pub use svg::{to_svg, to_svg_with, LayoutTool};

/// Vocabulary for run-specific attributes and types.
pub mod vocab {
    pub const PREFIX: &str = "prov4ml";
    pub const IRI: &str = "urn:provtrack:prov4ml#";

    pub const TYPE_ENVIRONMENT: &str = "Environment";
    pub const TYPE_PARAMETER: &str = "Parameter";
    pub const TYPE_DATASET: &str = "Dataset";
    pub const TYPE_METRIC_SERIES: &str = "MetricSeries";
    pub const TYPE_ARTIFACT: &str = "Artifact";
    pub const TYPE_MODEL_VERSION: &str = "ModelVersion";
    pub const TYPE_MODEL: &str = "Model";
}

fn vocab(local: &str) -> QualifiedName {
    QualifiedName::new(vocab::PREFIX, local).expect("vocabulary names are valid")
}

fn prov(local: &str) -> QualifiedName {
    QualifiedName::new("prov", local).expect("prov names are valid")
}

fn id_part(raw: &str) -> String {
    percent_escape(raw, |b| b.is_ascii_alphanumeric() || matches!(b, b'_' | b'-'))
}

fn saturating_i64(v: u64) -> i64 {
    i64::try_from(v).unwrap_or(i64::MAX)
}

struct Builder {
    doc: ProvDocument,
    tag: String,
    used: usize,
    generated: usize,
    derived: usize,
    run: QualifiedName,
}

impl Builder {
    fn id(&self, parts: &[&str]) -> QualifiedName {
        let mut local = self.tag.clone();
        for p in parts {
            local.push('.');
            local.push_str(p);
        }
        QualifiedName::parse(&format!("{DEFAULT_PREFIX}:{local}")).expect("escaped id is valid")
    }

    fn add(&mut self, record: ProvRecord) {
        self.doc
            .add_record(record)
            .expect("generated ids are unique per kind");
    }

    fn relate(&mut self, kind: RelationKind, subject: &QualifiedName, object: &QualifiedName) {
        let counter = match kind {
            RelationKind::Used => &mut self.used,
            RelationKind::WasGeneratedBy => &mut self.generated,
            _ => &mut self.derived,
        };
        let n = *counter;
        *counter += 1;
        let label = match kind {
            RelationKind::Used => "used",
            RelationKind::WasGeneratedBy => "gen",
            RelationKind::WasAssociatedWith => "assoc",
            RelationKind::WasDerivedFrom => "derive",
            RelationKind::HadMember => "member",
        };
        let id = self.id(&[label, &n.to_string()]);
        self.doc
            .add_relation(Relation::new(kind, id, subject.clone(), object.clone()))
            .expect("generated relations are well-formed");
    }

    fn input(&mut self, record: ProvRecord) {
        let id = record.id.clone();
        self.add(record);
        let run = self.run.clone();
        self.relate(RelationKind::Used, &run, &id);
    }

    fn output(&mut self, record: ProvRecord) {
        let id = record.id.clone();
        self.add(record);
        let run = self.run.clone();
        self.relate(RelationKind::WasGeneratedBy, &id, &run);
    }
}

fn typed_entity(id: QualifiedName, type_local: &str) -> ProvRecord {
    ProvRecord::entity(id).with_attribute(prov("type"), AttributeValue::qualified_name(&vocab(type_local)))
}

fn artifact_attributes(mut record: ProvRecord, artifact: &ArtifactRecord) -> ProvRecord {
    record = record
        .with_attribute(prov("label"), artifact.label.as_str())
        .with_attribute(vocab("path"), artifact.path.as_str());
    if let Some(ctx) = &artifact.context {
        record = record.with_attribute(vocab("context"), ctx.as_str());
    }
    if let Some(step) = artifact.step {
        record = record.with_attribute(vocab("step"), saturating_i64(step));
    }
    record
        .with_attribute(vocab("timestamp"), AttributeValue::datetime(artifact.timestamp))
        .with_attribute(vocab("size_bytes"), saturating_i64(artifact.size_bytes))
        .with_attribute(vocab("content_hash"), artifact.content_hash.as_str())
}

/// Build the provenance document of a run. Pure and deterministic.
pub fn build_provenance(run: &RunSnapshot) -> ProvDocument {
    let mut doc = ProvDocument::new(&run.user_namespace).unwrap_or_else(|_| ProvDocument::empty());
    doc.add_prefix(vocab::PREFIX, vocab::IRI)
        .expect("vocabulary prefix is free");
    let tag = id_part(&format!("{}_{}_rank{}", run.experiment, run.run_id, run.rank));
    let run_id = QualifiedName::parse(&format!("{DEFAULT_PREFIX}:{tag}")).expect("escaped id is valid");
    let mut b = Builder {
        doc,
        tag,
        used: 0,
        generated: 0,
        derived: 0,
        run: run_id.clone(),
    };

    b.add(
        ProvRecord::activity(run_id.clone())
            .with_times(Some(run.started_at), run.ended_at.map(|e| e.max(run.started_at)))
            .with_attribute(prov("label"), run.experiment.as_str())
            .with_attribute(vocab("experiment"), run.experiment.as_str())
            .with_attribute(vocab("run_id"), saturating_i64(run.run_id))
            .with_attribute(vocab("rank"), i64::from(run.rank)),
    );
    let agent = b.id(&["agent"]);
    b.add(
        ProvRecord::agent(agent.clone())
            .with_attribute(prov("label"), run.user_namespace.as_str()),
    );
    let assoc = b.id(&["assoc"]);
    b.doc
        .add_relation(Relation::new(RelationKind::WasAssociatedWith, assoc, run_id.clone(), agent))
        .expect("association is well-formed");

    let env = &run.environment;
    let mut env_record = typed_entity(b.id(&["environment"]), vocab::TYPE_ENVIRONMENT)
        .with_attribute(vocab("experiment"), run.experiment.as_str())
        .with_attribute(vocab("run_id"), saturating_i64(run.run_id))
        .with_attribute(vocab("rank"), i64::from(run.rank))
        .with_attribute(vocab("host"), env.process.host_name.as_str())
        .with_attribute(vocab("os"), env.process.os.as_str())
        .with_attribute(vocab("pid"), i64::from(env.process.pid))
        .with_attribute(vocab("command_line"), env.process.command_line.join(" "))
        .with_attribute(vocab("dependencies_probed"), !env.dependencies_unavailable);
    for (name, value) in &env.variables {
        env_record = env_record.with_attribute(vocab(&format!("env_{name}")), value.as_str());
    }
    for (name, version) in &env.dependencies {
        env_record = env_record.with_attribute(vocab(&format!("dep_{name}")), version.as_str());
    }
    b.input(env_record);

    for (key, value) in &run.params {
        b.input(
            typed_entity(b.id(&["param", &id_part(key)]), vocab::TYPE_PARAMETER)
                .with_attribute(prov("label"), key.as_str())
                .with_attribute(vocab("value"), value.clone()),
        );
    }

    for ds in &run.datasets {
        let mut record = typed_entity(b.id(&["dataset", &id_part(&ds.label)]), vocab::TYPE_DATASET)
            .with_attribute(prov("label"), ds.label.as_str());
        for (name, v) in [
            ("num_samples", ds.num_samples),
            ("batch_size", ds.batch_size),
            ("num_batches", ds.num_batches),
        ] {
            if let Some(v) = v {
                record = record.with_attribute(vocab(name), saturating_i64(v));
            }
        }
        if let Some(source) = &ds.source {
            record = record.with_attribute(vocab("source"), source.as_str());
        }
        b.input(record);
    }

    for s in &run.series {
        let id = b.id(&["metric", &id_part(s.context.as_str()), &id_part(&s.key)]);
        b.output(
            typed_entity(id, vocab::TYPE_METRIC_SERIES)
                .with_attribute(prov("label"), s.key.as_str())
                .with_attribute(vocab("context"), s.context.as_str())
                .with_attribute(vocab("count"), saturating_i64(s.count))
                .with_attribute(vocab("min"), s.min)
                .with_attribute(vocab("max"), s.max)
                .with_attribute(vocab("last"), s.last)
                .with_attribute(vocab("series_file"), s.file.as_str()),
        );
    }

    for (i, artifact) in run.artifacts.iter().enumerate() {
        let record = typed_entity(b.id(&["artifact", &i.to_string()]), vocab::TYPE_ARTIFACT);
        b.output(artifact_attributes(record, artifact));
    }

    let mut previous: Vec<(&str, QualifiedName)> = Vec::new();
    let mut latest = None;
    for version in &run.model_versions {
        let id = b.id(&["model_version", &id_part(&version.label), &version.index.to_string()]);
        let record = typed_entity(id.clone(), vocab::TYPE_MODEL_VERSION)
            .with_attribute(vocab("version"), version.index as i64);
        b.output(artifact_attributes(record, &version.artifact));
        match previous.iter_mut().find(|(label, _)| *label == version.label) {
            Some((_, prev)) => {
                let older = std::mem::replace(prev, id.clone());
                b.relate(RelationKind::WasDerivedFrom, &id, &older);
            }
            None => previous.push((&version.label, id.clone())),
        }
        latest = Some(id);
    }

    if let Some(model) = &run.final_model {
        let d = &model.descriptor;
        let mut record = typed_entity(b.id(&["model", &id_part(&model.label)]), vocab::TYPE_MODEL)
            .with_attribute(prov("label"), model.label.as_str())
            .with_attribute(vocab("total_parameters"), saturating_i64(d.total_parameters))
            .with_attribute(vocab("memory_bytes"), saturating_i64(d.memory_bytes));
        if let Some(g) = d.gradient_memory_bytes {
            record = record.with_attribute(vocab("gradient_memory_bytes"), saturating_i64(g));
        }
        record = record.with_attribute(vocab("layer_count"), d.layers.len() as i64);
        for (i, layer) in d.layers.iter().enumerate() {
            record = record.with_attribute(vocab(&format!("layer_{i}")), layer.to_string());
        }
        if let Some(path) = &model.artifact_path {
            record = record.with_attribute(vocab("artifact_path"), path.as_str());
        }
        let id = record.id.clone();
        b.output(record);
        if let Some(last) = latest {
            b.relate(RelationKind::WasDerivedFrom, &id, &last);
        }
    }

    b.doc
}
