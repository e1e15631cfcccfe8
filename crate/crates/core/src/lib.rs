//! Provenance tracking for machine-learning runs.
//!
//! A run records parameters, stepped metrics, artifacts, model versions and
//! host telemetry, then writes a PROV-JSON document describing how each
//! output came to be. See the `examples/` directory for end-to-end usage.

pub mod clock;
pub mod demo;
pub mod error;
pub mod ffi;
pub mod graph;
pub mod logging;
pub mod prov;
pub mod prov_json;
pub mod run;
pub mod telemetry;
pub mod toolkit;

pub use error::{Error, Result};
pub use logging::{Context, DatasetDescriptor, LayerInfo, ModelDescriptor};
pub use run::{start_run, start_run_with, RunConfig, RunHandle, RunHooks, RunManager, RunOutcome};
