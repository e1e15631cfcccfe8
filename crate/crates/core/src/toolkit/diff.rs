//! Comparison of two completed runs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::vocab;
use crate::logging::read_series;
use crate::prov::{AttributeValue, ProvDocument, QualifiedName, RecordKind};
use crate::prov_json;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricSummary {
    pub count: u64,
    pub min: f64,
    pub max: f64,
    pub last: f64,
}

impl MetricSummary {
    fn same(&self, other: &Self) -> bool {
        self.count == other.count
            && self.min.to_bits() == other.min.to_bits()
            && self.max.to_bits() == other.max.to_bits()
            && self.last.to_bits() == other.last.to_bits()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParamValue {
    pub key: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParamChange {
    pub key: String,
    pub left: String,
    pub right: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ParamDiff {
    /// Present only on the right.
    pub added: Vec<ParamValue>,
    /// Present only on the left.
    pub removed: Vec<ParamValue>,
    pub changed: Vec<ParamChange>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricDiff {
    pub key: String,
    pub context: String,
    pub left: Option<MetricSummary>,
    pub right: Option<MetricSummary>,
    /// `right.last - left.last` when both sides have the series.
    pub delta_of_last: Option<f64>,
    /// Index of the first differing sample; only filled by full-series comparison.
    pub first_divergent_sample: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ArtifactDiff {
    pub only_left: Vec<String>,
    pub only_right: Vec<String>,
    pub hash_mismatch: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RunDiff {
    pub params: ParamDiff,
    pub metrics: Vec<MetricDiff>,
    pub artifacts: ArtifactDiff,
}

impl RunDiff {
    pub fn is_empty(&self) -> bool {
        self.params.added.is_empty()
            && self.params.removed.is_empty()
            && self.params.changed.is_empty()
            && self.metrics.is_empty()
            && self.artifacts.only_left.is_empty()
            && self.artifacts.only_right.is_empty()
            && self.artifacts.hash_mismatch.is_empty()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("diff serializes");
        s.push('\n');
        s
    }
}

fn summary_text(s: &Option<MetricSummary>) -> String {
    match s {
        Some(s) => format!("count={} min={} max={} last={}", s.count, s.min, s.max, s.last),
        None => "absent".into(),
    }
}

impl fmt::Display for RunDiff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return writeln!(f, "no differences");
        }
        let p = &self.params;
        if !(p.added.is_empty() && p.removed.is_empty() && p.changed.is_empty()) {
            writeln!(f, "params:")?;
            for v in &p.removed {
                writeln!(f, "  - {} = {}", v.key, v.value)?;
            }
            for v in &p.added {
                writeln!(f, "  + {} = {}", v.key, v.value)?;
            }
            for c in &p.changed {
                writeln!(f, "  ~ {}: {} -> {}", c.key, c.left, c.right)?;
            }
        }
        if !self.metrics.is_empty() {
            writeln!(f, "metrics:")?;
            for m in &self.metrics {
                write!(
                    f,
                    "  ~ {}/{}: {} -> {}",
                    m.context,
                    m.key,
                    summary_text(&m.left),
                    summary_text(&m.right)
                )?;
                if let Some(d) = m.delta_of_last {
                    write!(f, " (delta of last {d})")?;
                }
                if let Some(i) = m.first_divergent_sample {
                    write!(f, " (first divergent sample {i})")?;
                }
                writeln!(f)?;
            }
        }
        let a = &self.artifacts;
        if !(a.only_left.is_empty() && a.only_right.is_empty() && a.hash_mismatch.is_empty()) {
            writeln!(f, "artifacts:")?;
            for path in &a.only_left {
                writeln!(f, "  < {path}")?;
            }
            for path in &a.only_right {
                writeln!(f, "  > {path}")?;
            }
            for path in &a.hash_mismatch {
                writeln!(f, "  ! {path} (content differs)")?;
            }
        }
        Ok(())
    }
}

/// What a diff looks at, pulled out of a run's provenance document.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunView {
    pub params: BTreeMap<String, AttributeValue>,
    /// `(context, key)` → (summary, series file relative to the run dir).
    pub metrics: BTreeMap<(String, String), (MetricSummary, String)>,
    /// Artifact path → content hash.
    pub artifacts: BTreeMap<String, String>,
}

impl RunView {
    pub fn from_document(doc: &ProvDocument) -> Result<Self> {
        let prefix = doc
            .prefixes()
            .iter()
            .find(|(_, iri)| iri.as_str() == vocab::IRI)
            .map(|(p, _)| p.as_str())
            .ok_or_else(|| Error::invalid("document declares no run vocabulary"))?;
        let q = |local: &str| QualifiedName::new(prefix, local).expect("vocabulary names are valid");
        let prov_type = QualifiedName::new("prov", "type")?;
        let label = QualifiedName::new("prov", "label")?;
        let (t_param, t_series, t_artifact, t_version) = (
            q(vocab::TYPE_PARAMETER),
            q(vocab::TYPE_METRIC_SERIES),
            q(vocab::TYPE_ARTIFACT),
            q(vocab::TYPE_MODEL_VERSION),
        );

        let mut view = RunView::default();
        for r in doc.records_of(RecordKind::Entity) {
            let Some(ty) = r.attribute(&prov_type).and_then(AttributeValue::as_qualified_name) else {
                continue;
            };
            let text = |k: &QualifiedName| r.attribute(k).and_then(|v| v.as_str().map(str::to_owned));
            let missing = |what: &str| Error::invalid(format!("entity `{}` lacks {what}", r.id));
            if ty == t_param {
                let key = text(&label).ok_or_else(|| missing("prov:label"))?;
                let value = r.attribute(&q("value")).cloned().ok_or_else(|| missing("a value"))?;
                view.params.insert(key, value);
            } else if ty == t_series {
                let num = |local: &str| r.attribute(&q(local)).and_then(AttributeValue::as_f64);
                let summary = MetricSummary {
                    count: r.attribute(&q("count")).and_then(AttributeValue::as_i64).unwrap_or(0) as u64,
                    min: num("min").unwrap_or(f64::NAN),
                    max: num("max").unwrap_or(f64::NAN),
                    last: num("last").unwrap_or(f64::NAN),
                };
                let key = text(&label).ok_or_else(|| missing("prov:label"))?;
                let context = text(&q("context")).ok_or_else(|| missing("a context"))?;
                let file = text(&q("series_file")).unwrap_or_default();
                view.metrics.insert((context, key), (summary, file));
            } else if ty == t_artifact || ty == t_version {
                let path = text(&q("path")).ok_or_else(|| missing("a path"))?;
                let hash = text(&q("content_hash")).unwrap_or_default();
                view.artifacts.insert(path, hash);
            }
        }
        Ok(view)
    }
}

/// The provenance document a rank wrote into a run directory.
pub fn find_document(run_dir: &Path, rank: u32) -> Result<PathBuf> {
    let suffix = format!("_rank{rank}.json");
    let entries = fs::read_dir(run_dir).map_err(|e| Error::io(run_dir, e))?;
    let mut found: Vec<PathBuf> = entries
        .flatten()
        .map(|e| e.path())
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("provgraph_") && n.ends_with(&suffix))
        })
        .collect();
    found.sort();
    found.into_iter().next().ok_or_else(|| {
        Error::NotFound(format!(
            "{} holds no provenance document for rank {rank}; did the run end?",
            run_dir.display()
        ))
    })
}

pub fn load_run(run_dir: &Path, rank: u32) -> Result<RunView> {
    let path = find_document(run_dir, rank)?;
    let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
    let doc = prov_json::parse(&bytes).map_err(|e| match e {
        Error::Parse { offset, message } => Error::Parse {
            offset,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    })?;
    RunView::from_document(&doc)
}

fn first_divergence(left: &Path, right: &Path) -> Result<Option<u64>> {
    let (l, r) = (read_series(left)?, read_series(right)?);
    let differs = |a: &crate::logging::MetricSample, b: &crate::logging::MetricSample| {
        a.step != b.step || a.timestamp != b.timestamp || a.value.to_bits() != b.value.to_bits()
    };
    if let Some(i) = l.iter().zip(&r).position(|(a, b)| differs(a, b)) {
        return Ok(Some(i as u64));
    }
    Ok((l.len() != r.len()).then(|| l.len().min(r.len()) as u64))
}

/// Compare two runs. `full_series` supplies both run directories when the
/// spilled samples should be compared too, not just the summaries.
pub fn diff_views(left: &RunView, right: &RunView, full_series: Option<(&Path, &Path)>) -> Result<RunDiff> {
    let mut diff = RunDiff::default();

    for (k, v) in &left.params {
        match right.params.get(k) {
            None => diff.params.removed.push(ParamValue { key: k.clone(), value: v.lexical() }),
            Some(w) if w != v => diff.params.changed.push(ParamChange {
                key: k.clone(),
                left: v.lexical(),
                right: w.lexical(),
            }),
            Some(_) => {}
        }
    }
    for (k, v) in &right.params {
        if !left.params.contains_key(k) {
            diff.params.added.push(ParamValue { key: k.clone(), value: v.lexical() });
        }
    }

    let keys: BTreeSet<&(String, String)> = left.metrics.keys().chain(right.metrics.keys()).collect();
    for key in keys {
        let l = left.metrics.get(key);
        let r = right.metrics.get(key);
        let first_divergent_sample = match (full_series, l, r) {
            (Some((ldir, rdir)), Some((_, lf)), Some((_, rf))) => first_divergence(&ldir.join(lf), &rdir.join(rf))?,
            _ => None,
        };
        let same = match (l, r) {
            (Some((a, _)), Some((b, _))) => a.same(b),
            _ => false,
        };
        if same && first_divergent_sample.is_none() {
            continue;
        }
        diff.metrics.push(MetricDiff {
            context: key.0.clone(),
            key: key.1.clone(),
            left: l.map(|x| x.0),
            right: r.map(|x| x.0),
            delta_of_last: l.zip(r).map(|(a, b)| b.0.last - a.0.last),
            first_divergent_sample,
        });
    }

    for (path, hash) in &left.artifacts {
        match right.artifacts.get(path) {
            None => diff.artifacts.only_left.push(path.clone()),
            Some(h) if h != hash => diff.artifacts.hash_mismatch.push(path.clone()),
            Some(_) => {}
        }
    }
    for path in right.artifacts.keys() {
        if !left.artifacts.contains_key(path) {
            diff.artifacts.only_right.push(path.clone());
        }
    }
    Ok(diff)
}

/// Load and compare the rank-`rank` documents of two run directories.
pub fn diff_runs(left: &Path, right: &Path, rank: u32, full_series: bool) -> Result<RunDiff> {
    let l = load_run(left, rank)?;
    let r = load_run(right, rank)?;
    diff_views(&l, &r, full_series.then_some((left, right)))
}
