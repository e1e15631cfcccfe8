//! Logging directives: parameters, stepped metrics, artifacts, datasets,
//! model descriptors, model versions and execution-time labels.

mod series;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::clock::EpochMillis;
use crate::error::{Error, Result};
use crate::prov::AttributeValue;
use crate::run::layout::file_component;
use crate::run::{RunHandle, RunState};

pub use series::{
    parse_line, read_series, series_file_name, MetricSample, MetricSeries, SeriesSummary,
};

/// Phase of the ML process a value belongs to.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Context {
    Training,
    Validation,
    Evaluation,
    Custom(String),
}

impl Context {
    /// Custom label; the three canonical spellings map to their variants.
    pub fn custom(label: impl Into<String>) -> Result<Self> {
        let label = label.into();
        match label.as_str() {
            "" => Err(Error::invalid("context label must not be empty")),
            "training" => Ok(Context::Training),
            "validation" => Ok(Context::Validation),
            "evaluation" => Ok(Context::Evaluation),
            _ => Ok(Context::Custom(label)),
        }
    }

    pub fn as_str(&self) -> &str {
        match self {
            Context::Training => "training",
            Context::Validation => "validation",
            Context::Evaluation => "evaluation",
            Context::Custom(label) => label,
        }
    }
}

impl fmt::Display for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Context {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Context::custom(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArtifactRecord {
    pub label: String,
    /// Location of the stored copy relative to the run directory, `/`-separated.
    pub path: String,
    pub context: Option<Context>,
    pub step: Option<u64>,
    pub timestamp: EpochMillis,
    pub size_bytes: u64,
    /// Lowercase hex SHA-256 of the content.
    pub content_hash: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerInfo {
    pub name: String,
    pub kind: String,
    pub input_shape: Vec<i64>,
    pub output_shape: Vec<i64>,
    pub dtype: String,
}

impl LayerInfo {
    pub fn new(
        name: impl Into<String>,
        kind: impl Into<String>,
        input_shape: impl Into<Vec<i64>>,
        output_shape: impl Into<Vec<i64>>,
        dtype: impl Into<String>,
    ) -> Self {
        Self {
            name: name.into(),
            kind: kind.into(),
            input_shape: input_shape.into(),
            output_shape: output_shape.into(),
            dtype: dtype.into(),
        }
    }
}

impl fmt::Display for LayerInfo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} {:?} -> {:?} {}",
            self.name, self.kind, self.input_shape, self.output_shape, self.dtype
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDescriptor {
    pub total_parameters: u64,
    pub memory_bytes: u64,
    pub gradient_memory_bytes: Option<u64>,
    pub layers: Vec<LayerInfo>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DatasetDescriptor {
    pub label: String,
    pub num_samples: Option<u64>,
    pub batch_size: Option<u64>,
    pub num_batches: Option<u64>,
    pub source: Option<String>,
}

impl DatasetDescriptor {
    pub fn new(label: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            ..Self::default()
        }
    }

    pub fn num_samples(mut self, n: u64) -> Self {
        self.num_samples = Some(n);
        self
    }

    pub fn batch_size(mut self, n: u64) -> Self {
        self.batch_size = Some(n);
        self
    }

    pub fn num_batches(mut self, n: u64) -> Self {
        self.num_batches = Some(n);
        self
    }

    pub fn source(mut self, source: impl Into<String>) -> Self {
        self.source = Some(source.into());
        self
    }
}

/// One checkpoint in a label's version chain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelVersion {
    pub label: String,
    /// Position in this label's chain, starting at 0.
    pub index: usize,
    pub artifact: ArtifactRecord,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FinalModel {
    pub label: String,
    pub descriptor: ModelDescriptor,
    /// Stored descriptor file when logged as an artifact.
    pub artifact_path: Option<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn rel_string(path: &Path) -> String {
    path.components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}

impl RunHandle {
    /// Record a one-time parameter. A key can be logged only once per run.
    pub fn log_param(&self, key: &str, value: impl Into<AttributeValue>) -> Result<()> {
        let mut state = self.active_state()?;
        if key.is_empty() {
            return Err(Error::invalid("parameter key must not be empty"));
        }
        if self.inner.sink {
            return Ok(());
        }
        if state.params.contains_key(key) {
            return Err(Error::DuplicateParam(key.to_owned()));
        }
        state.params.insert(key.to_owned(), value.into());
        Ok(())
    }

    pub fn log_metric(&self, key: &str, value: f64, context: Context, step: u64) -> Result<()> {
        let mut state = self.active_state()?;
        self.append_metric(&mut state, key, value, &context, step)
    }

    pub(crate) fn append_metric(
        &self,
        state: &mut RunState,
        key: &str,
        value: f64,
        context: &Context,
        step: u64,
    ) -> Result<()> {
        if key.is_empty() {
            return Err(Error::invalid("metric key must not be empty"));
        }
        if !value.is_finite() {
            return Err(Error::invalid(format!("metric `{key}` value {value} is not finite")));
        }
        if self.inner.sink {
            return Ok(());
        }
        let sample = MetricSample {
            step,
            timestamp: self.now(),
            value,
        };
        let threshold = self.inner.config.save_after_n_logs;
        let metrics_dir = self.metrics_dir();
        state
            .series
            .entry((key.to_owned(), context.clone()))
            .or_insert_with(|| {
                let path = metrics_dir.join(series_file_name(context, key));
                MetricSeries::new(key, context.clone(), path)
            })
            .push(sample, threshold)
    }

    /// Total samples and spilled samples of a series, if it exists.
    pub fn series_counts(&self, key: &str, context: &Context) -> Option<(u64, u64)> {
        let state = crate::run::lock_state(self);
        state
            .series
            .get(&(key.to_owned(), context.clone()))
            .map(|s| (s.total_count(), s.spilled_count()))
    }

    /// Copy a file into the run's artifact directory and record it.
    pub fn log_artifact(
        &self,
        label: &str,
        path: impl AsRef<Path>,
        context: Option<Context>,
        step: Option<u64>,
        timestamp: Option<EpochMillis>,
    ) -> Result<ArtifactRecord> {
        let mut state = self.active_state()?;
        let source = path.as_ref();
        let bytes = fs::read(source).map_err(|e| Error::io(source, e))?;
        let file_name = source
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| label.to_owned());

        let mut rel = self.inner.artifacts_rel.clone();
        if let Some(ctx) = &context {
            rel.push(file_component(ctx.as_str()));
        }
        let stored_name = match step {
            None => file_name.clone(),
            Some(step) => {
                let p = Path::new(&file_name);
                let stem = p.file_stem().map(|s| s.to_string_lossy()).unwrap_or_default();
                match p.extension() {
                    Some(ext) => format!("{stem}_step{step}.{}", ext.to_string_lossy()),
                    None => format!("{stem}_step{step}"),
                }
            }
        };
        rel.push(file_component(&stored_name));

        let record = ArtifactRecord {
            label: label.to_owned(),
            path: rel_string(&rel),
            context,
            step,
            timestamp: timestamp.unwrap_or_else(|| self.now()),
            size_bytes: bytes.len() as u64,
            content_hash: sha256_hex(&bytes),
        };
        if self.inner.sink {
            return Ok(record);
        }
        self.write_run_file(&rel, &bytes)?;
        state.artifacts.push(record.clone());
        Ok(record)
    }

    fn write_run_file(&self, rel: &Path, bytes: &[u8]) -> Result<PathBuf> {
        let dest = self.inner.run_dir.join(rel);
        if let Some(parent) = dest.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        fs::write(&dest, bytes).map_err(|e| Error::io(&dest, e))?;
        Ok(dest)
    }

    /// Store a checkpoint at `artifacts/<label>/<label>_step<step>`. Successive
    /// versions of one label form a derivation chain in the provenance graph.
    pub fn save_model_version(
        &self,
        label: &str,
        blob: &[u8],
        context: Option<Context>,
        step: u64,
        timestamp: Option<EpochMillis>,
    ) -> Result<ArtifactRecord> {
        let mut state = self.active_state()?;
        if label.is_empty() {
            return Err(Error::invalid("model label must not be empty"));
        }
        let dir = file_component(label);
        let rel = self
            .inner
            .artifacts_rel
            .join(&dir)
            .join(format!("{dir}_step{step}"));
        let record = ArtifactRecord {
            label: label.to_owned(),
            path: rel_string(&rel),
            context,
            step: Some(step),
            timestamp: timestamp.unwrap_or_else(|| self.now()),
            size_bytes: blob.len() as u64,
            content_hash: sha256_hex(blob),
        };
        if self.inner.sink {
            return Ok(record);
        }
        self.write_run_file(&rel, blob)?;
        let index = state.model_versions.iter().filter(|v| v.label == label).count();
        state.model_versions.push(ModelVersion {
            label: label.to_owned(),
            index,
            artifact: record.clone(),
        });
        Ok(record)
    }

    /// Record the run's final model. Only one final model per run.
    pub fn log_model(&self, label: &str, descriptor: ModelDescriptor, log_as_artifact: bool) -> Result<()> {
        let mut state = self.active_state()?;
        if label.is_empty() {
            return Err(Error::invalid("model label must not be empty"));
        }
        if self.inner.sink {
            return Ok(());
        }
        if let Some(existing) = &state.final_model {
            return Err(Error::DuplicateParam(format!(
                "final model already logged as `{}`",
                existing.label
            )));
        }
        let mut artifact_path = None;
        if log_as_artifact {
            let bytes = serde_json::to_vec_pretty(&descriptor).expect("descriptor serializes");
            let rel = self
                .inner
                .artifacts_rel
                .join(format!("{}.json", file_component(label)));
            self.write_run_file(&rel, &bytes)?;
            let record = ArtifactRecord {
                label: label.to_owned(),
                path: rel_string(&rel),
                context: None,
                step: None,
                timestamp: self.now(),
                size_bytes: bytes.len() as u64,
                content_hash: sha256_hex(&bytes),
            };
            artifact_path = Some(record.path.clone());
            state.artifacts.push(record);
        }
        state.final_model = Some(FinalModel {
            label: label.to_owned(),
            descriptor,
            artifact_path,
        });
        Ok(())
    }

    pub fn log_dataset(&self, descriptor: DatasetDescriptor) -> Result<()> {
        let mut state = self.active_state()?;
        if descriptor.label.is_empty() {
            return Err(Error::invalid("dataset label must not be empty"));
        }
        if self.inner.sink {
            return Ok(());
        }
        if state.datasets.contains_key(&descriptor.label) {
            return Err(Error::DuplicateParam(descriptor.label));
        }
        state.datasets.insert(descriptor.label.clone(), descriptor);
        Ok(())
    }

    /// Log seconds elapsed since the run started as a metric named `label`.
    pub fn log_current_execution_time(&self, label: &str, context: Context, step: u64) -> Result<()> {
        let mut state = self.active_state()?;
        let elapsed = (self.now() - self.inner.started_at) as f64 / 1000.0;
        self.append_metric(&mut state, label, elapsed, &context, step)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn context_text_forms() {
        assert_eq!(Context::Training.to_string(), "training");
        assert_eq!("validation".parse::<Context>().unwrap(), Context::Validation);
        assert_eq!(Context::custom("evaluation").unwrap(), Context::Evaluation);
        assert_eq!(
            Context::custom("Training").unwrap(),
            Context::Custom("Training".into())
        );
        assert!(Context::custom("").is_err());
    }

    #[test]
    fn empty_hash() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }

    #[test]
    fn layer_display() {
        let l = LayerInfo::new("fc1", "Linear", [-1, 784], [-1, 128], "float32");
        assert_eq!(l.to_string(), "fc1: Linear [-1, 784] -> [-1, 128] float32");
    }
}
