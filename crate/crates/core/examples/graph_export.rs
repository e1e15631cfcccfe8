// Exports of a finished run: DOT graph, SVG graph (when Graphviz is
// installed), CSV of one series and a two-series plot with one y-axis each.
//
// `cargo run --example graph_export [OUT_DIR]`

use std::path::{Path, PathBuf};

use provtrack::demo::{run_mnist_demo, DemoConfig};
use provtrack::graph::{plot_metrics, to_svg};
use provtrack::telemetry::CPU_POWER;
use provtrack::{Context, Error, RunManager};

pub struct Exports {
    pub dot: PathBuf,
    pub svg: Option<PathBuf>,
    pub plot: PathBuf,
}

pub fn run_example(out_dir: &Path) -> provtrack::Result<Exports> {
    let mut config = DemoConfig::new(out_dir);
    config.experiment = "graph_export".into();
    let demo = run_mnist_demo(RunManager::global(), &config)?;
    let dot_path = demo.outcome.dot.clone().expect("demo asks for the DOT graph");
    let dot = std::fs::read_to_string(&dot_path).map_err(|e| Error::Io {
        path: dot_path.clone(),
        source: e,
    })?;
    println!("DOT: {} ({} lines)", dot_path.display(), dot.lines().count());

    let svg = match to_svg(&dot)? {
        Some(bytes) => {
            let path = dot_path.with_extension("svg");
            std::fs::write(&path, bytes).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
            println!("SVG: {}", path.display());
            Some(path)
        }
        None => {
            println!("SVG: skipped, graphviz `dot` is not installed");
            None
        }
    };

    let plot = demo.run_dir().join("loss_and_power.svg");
    plot_metrics(
        demo.run_dir(),
        &[
            ("MSE_train".to_string(), Context::Training),
            (CPU_POWER.to_string(), Context::Training),
        ],
        None,
        &plot,
    )?;
    println!("plot: {}", plot.display());
    Ok(Exports {
        dot: dot_path,
        svg,
        plot,
    })
}

#[allow(dead_code)]
fn main() -> provtrack::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "prov_examples".into());
    run_example(Path::new(&out)).map(|_| ())
}
