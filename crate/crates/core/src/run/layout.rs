//! On-disk run layout:
//!
//! ```text
//! <save_dir>/<experiment>_<run_id>/
//!     .started_rank<r>                       one marker per rank that started here
//!     provgraph_<experiment>_<run_id>_rank<r>.json (.dot, .svg)
//!     artifacts/[rank<r>/]...
//!     metrics/[rank<r>/]<context>_<key>.tsv
//! ```
//!
//! The `rank<r>/` level only exists when every process collects.

use std::fs;
use std::io::ErrorKind;
use std::path::Path;

use crate::error::{Error, Result};
use crate::prov::name::{is_file_char, percent_escape};

pub(crate) fn file_component(raw: &str) -> String {
    percent_escape(raw, is_file_char)
}

pub fn run_dir_name(experiment: &str, run_id: u64) -> String {
    format!("{}_{run_id}", file_component(experiment))
}

pub fn document_stem(experiment: &str, run_id: u64, rank: u32) -> String {
    format!("provgraph_{}_{run_id}_rank{rank}", file_component(experiment))
}

pub(crate) fn start_marker(rank: u32) -> String {
    format!(".started_rank{rank}")
}

fn has_any_marker(dir: &Path) -> bool {
    fs::read_dir(dir)
        .map(|entries| {
            entries
                .flatten()
                .any(|e| e.file_name().to_string_lossy().starts_with(".started_rank"))
        })
        .unwrap_or(false)
}

/// Next run id for `rank`: one past the highest existing run directory of this
/// experiment that this rank already used, or that carries no rank markers at
/// all. With a single rank this is simply one past the highest directory.
pub fn next_run_id(save_dir: &Path, experiment: &str, rank: u32) -> Result<u64> {
    let entries = match fs::read_dir(save_dir) {
        Ok(entries) => entries,
        Err(e) if e.kind() == ErrorKind::NotFound => return Ok(0),
        Err(e) => return Err(Error::io(save_dir, e)),
    };
    let stem = format!("{}_", file_component(experiment));
    let marker = start_marker(rank);
    let mut next = 0;
    for entry in entries.flatten() {
        let name = entry.file_name().to_string_lossy().into_owned();
        let Some(digits) = name.strip_prefix(&stem) else { continue };
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            continue;
        }
        let Ok(id) = digits.parse::<u64>() else { continue };
        let path = entry.path();
        if !path.is_dir() {
            continue;
        }
        if path.join(&marker).exists() || !has_any_marker(&path) {
            next = next.max(id + 1);
        }
    }
    Ok(next)
}
