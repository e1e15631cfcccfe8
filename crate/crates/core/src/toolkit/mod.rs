//! Operator commands over the on-disk formats: merge, diff, validate,
//! convert and metric export. [`run_cli`] is the argument-parsing front end
//! used by the `provtrack` binary.
//!
//! Exit codes: 0 success or no findings, 1 findings (validation errors,
//! differences, unknown series), 2 I/O, unreadable input or bad usage, 3 missing
//! external layout tool.

mod cli;
mod diff;
mod merge;

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::graph::{self, LayoutTool};
use crate::logging::Context;
use crate::prov::ProvDocument;
use crate::prov_json::{self, ValidationReport};

pub use cli::run_cli;
pub use diff::{
    diff_runs, diff_views, find_document, load_run, ArtifactDiff, MetricDiff, MetricSummary,
    ParamChange, ParamDiff, ParamValue, RunDiff, RunView,
};
pub use merge::{merge_documents, summary_entity};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FINDINGS: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_TOOL: i32 = 3;

/// Exit code for a failed command.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io { .. } | Error::NotFound(_) => EXIT_IO,
        Error::Parse { offset: Some(_), .. } => EXIT_IO,
        Error::ToolUnavailable(_) => EXIT_TOOL,
        _ => EXIT_FINDINGS,
    }
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn name_file(path: &Path, err: Error) -> Error {
    match err {
        Error::Parse { offset, message } => Error::Parse {
            offset,
            message: format!("{}: {message}", path.display()),
        },
        Error::DuplicateRecord { kind, id } => Error::Parse {
            offset: None,
            message: format!("{}: duplicate {kind} `{id}`", path.display()),
        },
        other => other,
    }
}

fn load_document(path: &Path) -> Result<ProvDocument> {
    prov_json::parse(&read(path)?).map_err(|e| name_file(path, e))
}

/// Merge rank documents into `output`. Without `collection_id` the collection
/// is named `<experiment>_run<id>_collection` after the first input.
pub fn cmd_merge(inputs: &[PathBuf], output: &Path, collection_id: Option<&str>) -> Result<ProvDocument> {
    let mut docs = Vec::with_capacity(inputs.len());
    for path in inputs {
        docs.push((path.display().to_string(), load_document(path)?));
    }
    let merged = merge_documents(&docs, collection_id)?;
    write(output, prov_json::serialize(&merged)?)?;
    Ok(merged)
}

/// Parse and validate one document. Parse-time warnings are folded into the report.
pub fn cmd_validate(path: &Path) -> Result<ValidationReport> {
    let bytes = read(path)?;
    let (doc, parse_warnings) = prov_json::parse_with_warnings(&bytes).map_err(|e| name_file(path, e))?;
    let mut report = prov_json::validate(&doc);
    report.warnings.extend(parse_warnings);
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ConvertFormat {
    Dot,
    Svg,
}

pub fn cmd_convert(path: &Path, to: ConvertFormat, output: &Path, tool: &LayoutTool) -> Result<PathBuf> {
    let doc = load_document(path)?;
    let report = prov_json::validate(&doc);
    if !report.is_valid() {
        return Err(Error::InvalidDocument(report));
    }
    let dot = graph::to_dot(&doc);
    match to {
        ConvertFormat::Dot => write(output, dot)?,
        ConvertFormat::Svg => match graph::to_svg_with(tool, &dot)? {
            Some(svg) => write(output, svg)?,
            None => {
                return Err(Error::ToolUnavailable(
                    "graphviz `dot` not found on PATH; install graphviz or pass --dot <PATH>".into(),
                ))
            }
        },
    }
    Ok(output.to_path_buf())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricsOutput {
    Csv,
    Plot,
}

/// Export series of a run. `contexts` holds either one context for every key
/// or one per key. CSV takes exactly one key.
pub fn cmd_metrics(
    run_dir: &Path,
    keys: &[String],
    contexts: &[Context],
    mode: MetricsOutput,
    output: &Path,
    rank: Option<u32>,
) -> Result<PathBuf> {
    if keys.is_empty() {
        return Err(Error::invalid("at least one --key is required"));
    }
    let series: Vec<(String, Context)> = match contexts {
        [] => keys.iter().map(|k| (k.clone(), Context::Training)).collect(),
        [c] => keys.iter().map(|k| (k.clone(), c.clone())).collect(),
        cs if cs.len() == keys.len() => keys.iter().cloned().zip(cs.iter().cloned()).collect(),
        cs => {
            return Err(Error::invalid(format!(
                "{} contexts given for {} keys; pass one context or one per key",
                cs.len(),
                keys.len()
            )))
        }
    };
    match mode {
        MetricsOutput::Csv => {
            let [(key, context)] = series.as_slice() else {
                return Err(Error::invalid("--csv exports exactly one series"));
            };
            graph::export_metric_csv(run_dir, key, context, rank, output)
        }
        MetricsOutput::Plot => graph::plot_metrics(run_dir, &series, rank, output),
    }
}
