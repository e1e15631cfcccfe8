use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{ArgGroup, Parser, Subcommand};

use crate::error::Error;
use crate::graph::LayoutTool;
use crate::logging::Context;

use super::*;

#[derive(Debug, Parser)]
#[command(name = "provtrack", version, about = "Inspect and combine provenance of ML runs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Link per-rank documents under one collection entity.
    Merge {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
        /// Defaults to `<experiment>_run<id>_collection`.
        #[arg(long)]
        collection_id: Option<String>,
    },
    /// Compare parameters, metric summaries and artifacts of two run directories.
    Diff {
        left: PathBuf,
        right: PathBuf,
        /// Print the diff as JSON.
        #[arg(long)]
        json: bool,
        /// Compare every spilled sample, not just summaries.
        #[arg(long)]
        full_series: bool,
        #[arg(long, default_value_t = 0)]
        rank: u32,
    },
    /// Check a PROV-JSON document.
    Validate { path: PathBuf },
    /// Render a PROV-JSON document as DOT or SVG.
    Convert {
        path: PathBuf,
        #[arg(long, value_enum)]
        to: ConvertFormat,
        #[arg(short, long)]
        output: PathBuf,
        /// Layout program to use instead of `dot` from PATH.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Export metric series as CSV or an SVG plot.
    #[command(group(ArgGroup::new("format").required(true).args(["csv", "plot"])))]
    Metrics {
        run_dir: PathBuf,
        #[arg(long = "key", required = true)]
        keys: Vec<String>,
        /// One context for all keys, or one per key.
        #[arg(long = "context")]
        contexts: Vec<String>,
        #[arg(long)]
        csv: bool,
        #[arg(long)]
        plot: bool,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        rank: Option<u32>,
    },
}

/// Parse `args` (program name first) and run the command. Returns the exit code.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                EXIT_IO
            } else {
                let _ = write!(out, "{text}");
                EXIT_OK
            };
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err((e, code)) => {
            let _ = writeln!(err, "provtrack: {e}");
            code
        }
    }
}

type Failure = (Error, i32);

fn fail(e: Error) -> Failure {
    let code = exit_code(&e);
    (e, code)
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<i32, Failure> {
    match command {
        Command::Merge { inputs, output, collection_id } => {
            let doc = cmd_merge(&inputs, &output, collection_id.as_deref()).map_err(fail)?;
            let members = doc.relations_of(crate::prov::RelationKind::HadMember).count();
            let _ = writeln!(out, "merged {} input(s) into {} ({members} member(s))", inputs.len(), output.display());
            Ok(EXIT_OK)
        }
        Command::Diff { left, right, json, full_series, rank } => {
            let diff = diff_runs(&left, &right, rank, full_series).map_err(fail)?;
            if json {
                let _ = write!(out, "{}", diff.to_json());
            } else {
                let _ = write!(out, "{diff}");
            }
            Ok(if diff.is_empty() { EXIT_OK } else { EXIT_FINDINGS })
        }
        Command::Validate { path } => match cmd_validate(&path) {
            Ok(report) => {
                let _ = writeln!(out, "{report}");
                Ok(if report.is_valid() { EXIT_OK } else { EXIT_FINDINGS })
            }
            Err(e) if exit_code(&e) == EXIT_FINDINGS => {
                let _ = writeln!(out, "error: {e}\n1 error(s), 0 warning(s)");
                Ok(EXIT_FINDINGS)
            }
            Err(e) => Err(fail(e)),
        },
        Command::Convert { path, to, output, dot } => {
            let tool = dot.map(LayoutTool::Path).unwrap_or_default();
            match cmd_convert(&path, to, &output, &tool) {
                Ok(p) => {
                    let _ = writeln!(out, "wrote {}", p.display());
                    Ok(EXIT_OK)
                }
                Err(Error::InvalidDocument(report)) => {
                    let _ = writeln!(out, "{report}");
                    Ok(EXIT_FINDINGS)
                }
                Err(e) => Err(fail(e)),
            }
        }
        Command::Metrics { run_dir, keys, contexts, csv, plot: _, output, rank } => {
            let contexts = contexts
                .iter()
                .map(|c| c.parse::<Context>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(fail)?;
            let mode = if csv { MetricsOutput::Csv } else { MetricsOutput::Plot };
            match cmd_metrics(&run_dir, &keys, &contexts, mode, &output, rank) {
                Ok(p) => {
                    let _ = writeln!(out, "wrote {}", p.display());
                    Ok(EXIT_OK)
                }
                Err(e @ Error::NotFound(_)) => Err((e, EXIT_FINDINGS)),
                Err(e) => Err(fail(e)),
            }
        }
    }
}
