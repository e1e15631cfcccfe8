use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::logging::{read_series, series_file_name, Context, MetricSample};
use crate::prov::format_double;

use super::plot::{render_plot, PlotSeries};

/// Find the spill file of a series inside a run directory.
///
/// Single-writer runs keep series directly under `metrics/`; runs that
/// collect every rank use `metrics/rank<r>/`. Without an explicit rank the
/// flat layout is tried first, then rank 0.
pub fn locate_series(run_dir: &Path, key: &str, context: &Context, rank: Option<u32>) -> Result<PathBuf> {
    let file = series_file_name(context, key);
    let metrics = run_dir.join("metrics");
    let candidates = match rank {
        Some(0) | None => vec![metrics.join(&file), metrics.join("rank0").join(&file)],
        Some(r) => vec![metrics.join(format!("rank{r}")).join(&file)],
    };
    candidates.into_iter().find(|p| p.is_file()).ok_or_else(|| {
        Error::NotFound(format!(
            "no series `{key}` in context `{context}` under {}",
            run_dir.display()
        ))
    })
}

/// `step,timestamp,value` CSV with a header line.
pub fn render_csv(samples: &[MetricSample]) -> String {
    let mut out = String::from("step,timestamp,value\n");
    for s in samples {
        out.push_str(&format!("{},{},{}\n", s.step, s.timestamp, format_double(s.value)));
    }
    out
}

/// Write one series as CSV to `output`.
pub fn export_metric_csv(
    run_dir: &Path,
    key: &str,
    context: &Context,
    rank: Option<u32>,
    output: &Path,
) -> Result<PathBuf> {
    let samples = read_series(&locate_series(run_dir, key, context, rank)?)?;
    fs::write(output, render_csv(&samples)).map_err(|e| Error::io(output, e))?;
    Ok(output.to_path_buf())
}

/// Draw the given `(key, context)` series of a run into one SVG chart.
pub fn plot_metrics(
    run_dir: &Path,
    series: &[(String, Context)],
    rank: Option<u32>,
    output: &Path,
) -> Result<PathBuf> {
    if series.is_empty() {
        return Err(Error::invalid("nothing to plot: no series given"));
    }
    let mut plotted = Vec::with_capacity(series.len());
    for (key, context) in series {
        plotted.push(PlotSeries {
            label: format!("{context}/{key}"),
            samples: read_series(&locate_series(run_dir, key, context, rank)?)?,
        });
    }
    fs::write(output, render_plot(&plotted)).map_err(|e| Error::io(output, e))?;
    Ok(output.to_path_buf())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let samples = [
            MetricSample { step: 0, timestamp: 10, value: 1.5 },
            MetricSample { step: 1, timestamp: 20, value: -0.25 },
        ];
        assert_eq!(render_csv(&samples), "step,timestamp,value\n0,10,1.5\n1,20,-0.25\n");
    }

    #[test]
    fn flat_layout_wins_then_rank_zero() {
        let tmp = tempfile::tempdir().unwrap();
        let err = locate_series(tmp.path(), "loss", &Context::Training, None).unwrap_err();
        assert!(matches!(err, Error::NotFound(_)));
        let rank0 = tmp.path().join("metrics/rank0");
        std::fs::create_dir_all(&rank0).unwrap();
        std::fs::write(rank0.join("training_loss.tsv"), "").unwrap();
        assert_eq!(
            locate_series(tmp.path(), "loss", &Context::Training, None).unwrap(),
            rank0.join("training_loss.tsv")
        );
        std::fs::write(tmp.path().join("metrics/training_loss.tsv"), "").unwrap();
        assert_eq!(
            locate_series(tmp.path(), "loss", &Context::Training, Some(0)).unwrap(),
            tmp.path().join("metrics/training_loss.tsv")
        );
        assert!(locate_series(tmp.path(), "loss", &Context::Training, Some(3)).is_err());
    }
}
