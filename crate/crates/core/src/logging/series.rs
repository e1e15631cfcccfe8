//! Append-only metric series with spill-to-disk.
//!
//! Spill files hold one sample per line, `step\ttimestamp\tvalue\n`, in log
//! order. A flush appends the whole buffer with a single write so readers
//! never see a partial line.

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::clock::EpochMillis;
use crate::error::{Error, Result};
use crate::prov::{format_double, parse_double};
use crate::run::layout::file_component;

use super::Context;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricSample {
    pub step: u64,
    pub timestamp: EpochMillis,
    pub value: f64,
}

impl MetricSample {
    pub fn to_line(&self) -> String {
        format!("{}\t{}\t{}\n", self.step, self.timestamp, format_double(self.value))
    }
}

/// `<context>_<key>.tsv`, both parts escaped for the file system.
pub fn series_file_name(context: &Context, key: &str) -> String {
    format!(
        "{}_{}.tsv",
        file_component(context.as_str()),
        file_component(key)
    )
}

/// Aggregate view of a series, as recorded in the provenance document.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesSummary {
    pub key: String,
    pub context: Context,
    pub count: u64,
    pub min: f64,
    pub max: f64,
    pub last: f64,
    /// Spill file relative to the run directory, `/`-separated.
    pub file: String,
}

#[derive(Debug)]
pub struct MetricSeries {
    key: String,
    context: Context,
    buffered: Vec<MetricSample>,
    spilled_count: u64,
    spill_path: PathBuf,
    min: f64,
    max: f64,
    last: f64,
}

impl MetricSeries {
    pub fn new(key: impl Into<String>, context: Context, spill_path: PathBuf) -> Self {
        Self {
            key: key.into(),
            context,
            buffered: Vec::new(),
            spilled_count: 0,
            spill_path,
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
            last: f64::NAN,
        }
    }

    pub fn key(&self) -> &str {
        &self.key
    }

    pub fn context(&self) -> &Context {
        &self.context
    }

    pub fn buffered(&self) -> &[MetricSample] {
        &self.buffered
    }

    pub fn spilled_count(&self) -> u64 {
        self.spilled_count
    }

    pub fn total_count(&self) -> u64 {
        self.spilled_count + self.buffered.len() as u64
    }

    pub fn spill_path(&self) -> &Path {
        &self.spill_path
    }

    /// Append a sample; spills the buffer once it holds `threshold` samples.
    pub fn push(&mut self, sample: MetricSample, threshold: usize) -> Result<()> {
        if !sample.value.is_finite() {
            return Err(Error::invalid(format!(
                "metric `{}` value {} is not finite",
                self.key, sample.value
            )));
        }
        self.min = self.min.min(sample.value);
        self.max = self.max.max(sample.value);
        self.last = sample.value;
        self.buffered.push(sample);
        if self.buffered.len() >= threshold {
            self.flush()?;
        }
        Ok(())
    }

    /// Append everything buffered to the spill file (created even when empty).
    pub fn flush(&mut self) -> Result<()> {
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.spill_path)
            .map_err(|e| Error::io(&self.spill_path, e))?;
        if self.buffered.is_empty() {
            return Ok(());
        }
        let chunk: String = self.buffered.iter().map(MetricSample::to_line).collect();
        file.write_all(chunk.as_bytes())
            .map_err(|e| Error::io(&self.spill_path, e))?;
        self.spilled_count += self.buffered.len() as u64;
        self.buffered.clear();
        Ok(())
    }

    pub fn summary(&self, run_dir: &Path) -> SeriesSummary {
        let rel = self.spill_path.strip_prefix(run_dir).unwrap_or(&self.spill_path);
        SeriesSummary {
            key: self.key.clone(),
            context: self.context.clone(),
            count: self.total_count(),
            min: self.min,
            max: self.max,
            last: self.last,
            file: rel
                .components()
                .map(|c| c.as_os_str().to_string_lossy())
                .collect::<Vec<_>>()
                .join("/"),
        }
    }
}

pub fn parse_line(line: &str) -> Option<MetricSample> {
    let mut parts = line.split('\t');
    let sample = MetricSample {
        step: parts.next()?.parse().ok()?,
        timestamp: parts.next()?.parse().ok()?,
        value: parse_double(parts.next()?)?,
    };
    parts.next().is_none().then_some(sample)
}

/// Read back a spill file in log order.
pub fn read_series(path: &Path) -> Result<Vec<MetricSample>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .map(|(i, line)| {
            parse_line(line).ok_or_else(|| Error::Parse {
                offset: None,
                message: format!("{}:{}: malformed sample `{line}`", path.display(), i + 1),
            })
        })
        .collect()
}
