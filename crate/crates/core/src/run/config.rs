use std::path::PathBuf;

use crate::error::{Error, Result};

pub const DEFAULT_EXPERIMENT: &str = "default";
pub const DEFAULT_SAVE_DIR: &str = "prov";
pub const DEFAULT_SAVE_AFTER_N_LOGS: usize = 100;
/// Keep every metric sample in memory until the run ends.
pub const NEVER_SPILL: usize = usize::MAX;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    pub user_namespace: String,
    pub experiment_name: String,
    pub save_dir: PathBuf,
    /// When false, only rank 0 records anything; other ranks get a no-op handle.
    pub collect_all_processes: bool,
    /// Buffered samples per series before they are appended to the spill file.
    pub save_after_n_logs: usize,
    pub rank: Option<u32>,
}

impl RunConfig {
    pub fn new(user_namespace: impl Into<String>) -> Self {
        Self {
            user_namespace: user_namespace.into(),
            experiment_name: DEFAULT_EXPERIMENT.into(),
            save_dir: PathBuf::from(DEFAULT_SAVE_DIR),
            collect_all_processes: false,
            save_after_n_logs: DEFAULT_SAVE_AFTER_N_LOGS,
            rank: None,
        }
    }

    pub fn experiment_name(mut self, name: impl Into<String>) -> Self {
        self.experiment_name = name.into();
        self
    }

    pub fn save_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.save_dir = dir.into();
        self
    }

    pub fn collect_all_processes(mut self, yes: bool) -> Self {
        self.collect_all_processes = yes;
        self
    }

    pub fn save_after_n_logs(mut self, n: usize) -> Self {
        self.save_after_n_logs = n;
        self
    }

    pub fn rank(mut self, rank: u32) -> Self {
        self.rank = Some(rank);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.user_namespace.is_empty() {
            return Err(Error::invalid("user namespace must not be empty"));
        }
        if self.experiment_name.is_empty() {
            return Err(Error::invalid("experiment name must not be empty"));
        }
        if self.save_after_n_logs == 0 {
            return Err(Error::invalid("save_after_n_logs must be at least 1"));
        }
        Ok(())
    }
}
