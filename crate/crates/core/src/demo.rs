//! Scripted MNIST-style training run used by the examples and the golden
//! document test.
//!
//! Nothing here trains a network. The loop logs the same directives a real
//! training script would, with a manual clock, scripted telemetry and a fixed
//! environment, so the resulting document is identical on every machine.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::clock::{EpochMillis, ManualClock};
use crate::error::Result;
use crate::logging::{Context, DatasetDescriptor, LayerInfo, ModelDescriptor};
use crate::run::{ProcessInfo, RunConfig, RunHandle, RunHooks, RunManager, RunOutcome, StaticDependencies};
use crate::telemetry::{PowerStep, ScriptedTelemetry, SystemSample};

/// 2023-11-14T22:13:20Z.
pub const DEMO_START_MS: EpochMillis = 1_700_000_000_000;
pub const BATCH_MS: i64 = 250;
pub const USER_NAMESPACE: &str = "www.example.org";

#[derive(Debug, Clone)]
pub struct DemoConfig {
    pub save_dir: PathBuf,
    pub experiment: String,
    pub epochs: u64,
    pub batches_per_epoch: u64,
    pub save_after_n_logs: usize,
    pub create_graph: bool,
}

impl DemoConfig {
    pub fn new(save_dir: impl Into<PathBuf>) -> Self {
        Self {
            save_dir: save_dir.into(),
            experiment: "mnist_demo".into(),
            epochs: 3,
            batches_per_epoch: 4,
            save_after_n_logs: 100,
            create_graph: true,
        }
    }
}

/// 784 → 128 → 10 fully connected network, float32.
pub fn mnist_model() -> ModelDescriptor {
    let params = 784 * 128 + 128 + 128 * 10 + 10;
    ModelDescriptor {
        total_parameters: params,
        memory_bytes: params * 4,
        gradient_memory_bytes: Some(params * 4),
        layers: vec![
            LayerInfo::new("fc1", "Linear", [-1, 784], [-1, 128], "float32"),
            LayerInfo::new("relu", "ReLU", [-1, 128], [-1, 128], "float32"),
            LayerInfo::new("fc2", "Linear", [-1, 128], [-1, 10], "float32"),
        ],
    }
}

fn system_samples() -> Vec<SystemSample> {
    const GIB: u64 = 1 << 30;
    (0..4)
        .map(|i| SystemSample {
            memory_used_bytes: (4 + i) * GIB,
            memory_total_bytes: 16 * GIB,
            disk_used_bytes: 120 * GIB,
            disk_total_bytes: 512 * GIB,
            gpu_memory_used_bytes: None,
            gpu_utilization_percent: None,
            cpu_utilization_percent: 50.0 + 12.5 * i as f64,
        })
        .collect()
}

/// CPU draw alternating between 40 W and 60 W every second of run time.
fn power_schedule() -> Vec<PowerStep> {
    (0..120)
        .map(|i| PowerStep {
            from_ms: DEMO_START_MS + i * 1000,
            cpu_watts: if i % 2 == 0 { 40.0 } else { 60.0 },
            gpu_watts: None,
            ram_watts: None,
        })
        .collect()
}

/// Hooks for the demo: deterministic, with scripted system and power readings,
/// a fixed environment and a small dependency list.
pub fn demo_hooks(clock: Arc<ManualClock>) -> RunHooks {
    RunHooks::deterministic(clock)
        .telemetry(
            ScriptedTelemetry::new()
                .system_sequence(system_samples())
                .power_schedule(power_schedule()),
        )
        .env_vars([
            ("OMP_NUM_THREADS", "4"),
            ("LANG", "C.UTF-8"),
            ("HOME", "/home/demo"),
        ])
        .process(ProcessInfo {
            host_name: "demo-host".into(),
            os: "linux".into(),
            pid: 4242,
            command_line: vec!["python".into(), "mnist.py".into()],
        })
        .dependencies(StaticDependencies(vec![
            ("numpy".into(), "1.26.4".into()),
            ("torch".into(), "2.1.0".into()),
            ("torchvision".into(), "0.16.0".into()),
        ]))
}

/// Deterministic "loss" for a global step.
pub fn demo_loss(step: u64) -> f64 {
    1.0 / (1.0 + 0.5 * step as f64)
}

pub struct DemoRun {
    pub handle: RunHandle,
    pub outcome: RunOutcome,
    pub clock: Arc<ManualClock>,
}

impl DemoRun {
    pub fn run_dir(&self) -> &Path {
        self.handle.run_dir()
    }
}

/// Run the scripted training loop to completion on `manager`.
pub fn run_mnist_demo(manager: &RunManager, config: &DemoConfig) -> Result<DemoRun> {
    let clock = ManualClock::shared(DEMO_START_MS);
    let run_config = RunConfig::new(USER_NAMESPACE)
        .experiment_name(&config.experiment)
        .save_dir(&config.save_dir)
        .save_after_n_logs(config.save_after_n_logs)
        .rank(0);
    let run = manager.start(run_config, demo_hooks(clock.clone()))?;

    run.log_param("dataset transformation", "ToTensor")?;
    run.log_param("learning_rate", 0.01)?;
    run.log_param("batch_size", 64i64)?;
    run.log_param("epochs", config.epochs as i64)?;
    run.log_dataset(
        DatasetDescriptor::new("train_dataset")
            .num_samples(60_000)
            .batch_size(64)
            .num_batches(938)
            .source("MNIST"),
    )?;

    for epoch in 0..config.epochs {
        for batch in 0..config.batches_per_epoch {
            let step = epoch * config.batches_per_epoch + batch;
            clock.advance(BATCH_MS);
            run.log_metric("MSE_train", demo_loss(step), Context::Training, step)?;
            run.log_carbon_metrics(Context::Training, step)?;
            run.log_system_metrics(Context::Training, step)?;
        }
        let last = (epoch + 1) * config.batches_per_epoch - 1;
        run.log_metric("MSE_val", demo_loss(last) * 1.1, Context::Validation, epoch)?;
        run.log_current_execution_time("epoch_time", Context::Training, epoch)?;
        let weights = format!("mnist_model weights after epoch {epoch}\n");
        run.save_model_version("mnist_model", weights.as_bytes(), Some(Context::Training), last, None)?;
    }

    clock.advance(BATCH_MS);
    run.log_model("mnist_model_final", mnist_model(), true)?;
    let outcome = run.end_run(config.create_graph, false)?;
    Ok(DemoRun {
        handle: run,
        outcome,
        clock,
    })
}
