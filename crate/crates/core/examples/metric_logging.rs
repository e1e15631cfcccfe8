// Stepped metrics with spill-to-disk, then CSV export of one series.
//
// With `save_after_n_logs = 10`, every tenth sample of a series triggers an
// append to `metrics/<context>_<key>.tsv`; the remainder is written by
// `end_run`.
//
// `cargo run --example metric_logging [OUT_DIR]`

use std::path::{Path, PathBuf};

use provtrack::clock::ManualClock;
use provtrack::graph::export_metric_csv;
use provtrack::{start_run_with, Context, RunConfig, RunHooks};

pub fn run_example(out_dir: &Path) -> provtrack::Result<PathBuf> {
    let clock = ManualClock::shared(1_700_000_000_000);
    let config = RunConfig::new("www.example.org")
        .experiment_name("metric_logging")
        .save_dir(out_dir)
        .save_after_n_logs(10);
    let run = start_run_with(config, RunHooks::deterministic(clock.clone()))?;

    for step in 0..25 {
        clock.advance(100);
        run.log_metric("loss", 2.0 / (1.0 + step as f64), Context::Training, step)?;
        if step % 5 == 4 {
            run.log_metric("accuracy", 0.5 + step as f64 / 50.0, Context::Validation, step / 5)?;
        }
    }
    let (total, spilled) = run.series_counts("loss", &Context::Training).expect("series exists");
    println!("training/loss: {total} samples, {spilled} already on disk");

    run.end_run(false, false)?;
    let csv = out_dir.join("metric_logging_loss.csv");
    export_metric_csv(run.run_dir(), "loss", &Context::Training, None, &csv)?;
    let text = std::fs::read_to_string(&csv).map_err(|e| provtrack::Error::Io {
        path: csv.clone(),
        source: e,
    })?;
    for line in text.lines().take(4) {
        println!("  {line}");
    }
    println!("  ... ({} rows) -> {}", text.lines().count() - 1, csv.display());
    Ok(csv)
}

#[allow(dead_code)]
fn main() -> provtrack::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "prov_examples".into());
    run_example(Path::new(&out)).map(|_| ())
}
