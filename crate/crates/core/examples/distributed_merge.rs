// Multi-process run: every rank writes its own document, then `merge`
// links them under one collection entity.
//
// Ranks are simulated sequentially here; under a real launcher each process
// calls `start_run` with the same experiment and save directory.
//
// `cargo run --example distributed_merge [OUT_DIR]`

use std::path::{Path, PathBuf};

use provtrack::clock::ManualClock;
use provtrack::prov::RelationKind;
use provtrack::toolkit::cmd_merge;
use provtrack::{start_run_with, Context, RunConfig, RunHooks};

pub const RANKS: u32 = 4;

pub fn run_example(out_dir: &Path) -> provtrack::Result<PathBuf> {
    let mut documents = Vec::new();
    for rank in 0..RANKS {
        let clock = ManualClock::shared(1_700_000_000_000);
        let config = RunConfig::new("www.example.org")
            .experiment_name("distributed")
            .save_dir(out_dir)
            .collect_all_processes(true)
            .rank(rank);
        let run = start_run_with(config, RunHooks::deterministic(clock.clone()))?;
        run.log_param("world_size", i64::from(RANKS))?;
        for step in 0..10 {
            clock.advance(50);
            run.log_metric("loss", 1.0 / (1.0 + step as f64 + f64::from(rank)), Context::Training, step)?;
        }
        let outcome = run.end_run(false, false)?;
        documents.push(outcome.document.expect("every rank collects"));
    }

    let run_dir = documents[0].parent().expect("document lives in the run dir").to_path_buf();
    let merged_path = run_dir.join("provgraph_distributed_merged.json");
    let merged = cmd_merge(&documents, &merged_path, None)?;
    println!(
        "merged {} rank documents: {} records, {} hadMember edges -> {}",
        documents.len(),
        merged.records().len(),
        merged.relations_of(RelationKind::HadMember).count(),
        merged_path.display()
    );
    Ok(merged_path)
}

#[allow(dead_code)]
fn main() -> provtrack::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "prov_examples".into());
    run_example(Path::new(&out)).map(|_| ())
}
