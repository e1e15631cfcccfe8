// Scripted MNIST-style training run: parameters, a dataset, per-batch loss,
// power and system metrics, one checkpoint per epoch and a final model.
//
// `cargo run --example mnist_demo [OUT_DIR]`

use std::path::{Path, PathBuf};

use provtrack::demo::{run_mnist_demo, DemoConfig};
use provtrack::prov::{RecordKind, RelationKind};
use provtrack::{prov_json, RunManager};

pub fn run_example(out_dir: &Path) -> provtrack::Result<PathBuf> {
    let demo = run_mnist_demo(RunManager::global(), &DemoConfig::new(out_dir))?;
    let path = demo.outcome.document.clone().expect("rank 0 writes a document");
    let doc = prov_json::parse(&std::fs::read(&path).map_err(|e| provtrack::Error::Io {
        path: path.clone(),
        source: e,
    })?)?;

    println!("document: {}", path.display());
    for kind in RecordKind::ALL {
        println!("  {kind}: {}", doc.records_of(kind).count());
    }
    for kind in RelationKind::ALL {
        println!("  {}: {}", kind.section(), doc.relations_of(kind).count());
    }
    println!("validation: {}", prov_json::validate(&doc));
    Ok(path)
}

#[allow(dead_code)]
fn main() -> provtrack::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "prov_examples".into());
    run_example(Path::new(&out)).map(|_| ())
}
