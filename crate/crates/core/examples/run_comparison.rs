// Compare two runs that differ in one hyper-parameter.
//
// `cargo run --example run_comparison [OUT_DIR]`

use std::path::{Path, PathBuf};

use provtrack::clock::ManualClock;
use provtrack::toolkit::{diff_runs, RunDiff};
use provtrack::{start_run_with, Context, RunConfig, RunHooks};

fn training_run(out_dir: &Path, lr: f64) -> provtrack::Result<PathBuf> {
    let clock = ManualClock::shared(1_700_000_000_000);
    let config = RunConfig::new("www.example.org")
        .experiment_name("comparison")
        .save_dir(out_dir);
    let run = start_run_with(config, RunHooks::deterministic(clock.clone()))?;
    run.log_param("learning_rate", lr)?;
    run.log_param("optimizer", "sgd")?;
    let mut loss = 1.0;
    for step in 0..20 {
        clock.advance(100);
        loss *= 1.0 - lr;
        run.log_metric("loss", loss, Context::Training, step)?;
    }
    run.end_run(false, false)?;
    Ok(run.run_dir().to_path_buf())
}

pub fn run_example(out_dir: &Path) -> provtrack::Result<RunDiff> {
    let left = training_run(out_dir, 0.1)?;
    let right = training_run(out_dir, 0.01)?;

    let same = diff_runs(&left, &left, 0, false)?;
    println!("{} vs itself: {same}", left.display());

    let diff = diff_runs(&left, &right, 0, false)?;
    println!("{} vs {}:\n{diff}", left.display(), right.display());
    Ok(diff)
}

#[allow(dead_code)]
fn main() -> provtrack::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "prov_examples".into());
    run_example(Path::new(&out)).map(|_| ())
}
