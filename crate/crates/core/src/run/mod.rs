//! Run lifecycle: `start_run` → logging → `end_run`.

mod config;
mod environment;
pub mod layout;
mod rank;

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, MutexGuard, OnceLock};

use indexmap::IndexMap;

use crate::clock::{Clock, EpochMillis, SystemClock};
use crate::error::{Error, Result};
use crate::graph::{build_provenance, to_dot, to_svg_with, LayoutTool};
use crate::logging::{
    ArtifactRecord, Context, DatasetDescriptor, FinalModel, MetricSeries, ModelVersion,
    SeriesSummary,
};
use crate::prov::AttributeValue;
use crate::prov_json;
use crate::telemetry::{EnergyAccumulator, HostTelemetry, ScriptedTelemetry, TelemetryProvider};

pub use config::{
    RunConfig, DEFAULT_EXPERIMENT, DEFAULT_SAVE_AFTER_N_LOGS, DEFAULT_SAVE_DIR, NEVER_SPILL,
};
pub use environment::{
    capture_environment, capture_environment_from, DependencyProber, EnvFilter,
    EnvironmentSnapshot, ProcessInfo, StaticDependencies, DEFAULT_ENV_ALLOWLIST, REDACTED,
};
pub use rank::{resolve_rank, ResolvedRank, LAUNCHER_RANK_VARS};

/// Injectable collaborators of a run. `Default` wires the live process.
pub struct RunHooks {
    pub clock: Arc<dyn Clock>,
    pub telemetry: Box<dyn TelemetryProvider>,
    pub dependencies: Option<Box<dyn DependencyProber>>,
    /// `None` reads the process environment.
    pub env_vars: Option<Vec<(String, String)>>,
    /// `None` inspects the current process.
    pub process: Option<ProcessInfo>,
    pub env_filter: EnvFilter,
    pub layout_tool: LayoutTool,
}

impl Default for RunHooks {
    fn default() -> Self {
        Self {
            clock: Arc::new(SystemClock),
            telemetry: Box::new(HostTelemetry::new(".")),
            dependencies: None,
            env_vars: None,
            process: None,
            env_filter: EnvFilter::default(),
            layout_tool: LayoutTool::Auto,
        }
    }
}

impl RunHooks {
    /// Reproducible collaborators: the given clock, an empty scripted
    /// telemetry provider, no environment variables, no dependencies, a fixed
    /// process identity and no SVG rendering. Two runs driven identically
    /// through these hooks write byte-identical documents.
    pub fn deterministic(clock: Arc<dyn Clock>) -> Self {
        Self {
            clock,
            telemetry: Box::new(ScriptedTelemetry::new()),
            dependencies: Some(Box::new(StaticDependencies(Vec::new()))),
            env_vars: Some(Vec::new()),
            process: Some(ProcessInfo {
                host_name: "localhost".into(),
                os: "unknown".into(),
                pid: 0,
                command_line: Vec::new(),
            }),
            env_filter: EnvFilter::default(),
            layout_tool: LayoutTool::Disabled,
        }
    }

    pub fn clock(mut self, clock: Arc<dyn Clock>) -> Self {
        self.clock = clock;
        self
    }

    pub fn telemetry(mut self, provider: impl TelemetryProvider + 'static) -> Self {
        self.telemetry = Box::new(provider);
        self
    }

    pub fn dependencies(mut self, prober: impl DependencyProber + 'static) -> Self {
        self.dependencies = Some(Box::new(prober));
        self
    }

    pub fn env_vars<I, K, V>(mut self, vars: I) -> Self
    where
        I: IntoIterator<Item = (K, V)>,
        K: Into<String>,
        V: Into<String>,
    {
        self.env_vars = Some(vars.into_iter().map(|(k, v)| (k.into(), v.into())).collect());
        self
    }

    pub fn process(mut self, process: ProcessInfo) -> Self {
        self.process = Some(process);
        self
    }

    pub fn env_filter(mut self, filter: EnvFilter) -> Self {
        self.env_filter = filter;
        self
    }

    pub fn layout_tool(mut self, tool: LayoutTool) -> Self {
        self.layout_tool = tool;
        self
    }
}

type Slot = Arc<Mutex<Option<u64>>>;

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
}

pub(crate) fn lock_state(handle: &RunHandle) -> MutexGuard<'_, RunState> {
    lock(&handle.inner.state)
}

/// Owner of the "one active run" slot. The free functions [`start_run`] and
/// [`start_run_with`] use the process-wide instance from [`RunManager::global`].
#[derive(Clone, Default)]
pub struct RunManager {
    slot: Slot,
}

static NEXT_TOKEN: AtomicU64 = AtomicU64::new(1);

impl RunManager {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn global() -> &'static RunManager {
        static GLOBAL: OnceLock<RunManager> = OnceLock::new();
        GLOBAL.get_or_init(RunManager::new)
    }

    pub fn has_active_run(&self) -> bool {
        lock(&self.slot).is_some()
    }

    pub fn start(&self, config: RunConfig, hooks: RunHooks) -> Result<RunHandle> {
        config.validate()?;
        let token = NEXT_TOKEN.fetch_add(1, Ordering::Relaxed);
        {
            let mut slot = lock(&self.slot);
            if slot.is_some() {
                return Err(Error::illegal_state("a run is already active in this process"));
            }
            *slot = Some(token);
        }
        match open_run(config, hooks, self.slot.clone(), token) {
            Ok(handle) => Ok(handle),
            Err(e) => {
                release(&self.slot, token);
                Err(e)
            }
        }
    }
}

fn release(slot: &Slot, token: u64) {
    let mut slot = lock(slot);
    if *slot == Some(token) {
        *slot = None;
    }
}

pub fn start_run(config: RunConfig) -> Result<RunHandle> {
    RunManager::global().start(config, RunHooks::default())
}

pub fn start_run_with(config: RunConfig, hooks: RunHooks) -> Result<RunHandle> {
    RunManager::global().start(config, hooks)
}

fn open_run(config: RunConfig, hooks: RunHooks, slot: Slot, token: u64) -> Result<RunHandle> {
    let live_vars;
    let vars: &[(String, String)] = match &hooks.env_vars {
        Some(vars) => vars,
        None => {
            live_vars = std::env::vars_os()
                .filter_map(|(k, v)| Some((k.into_string().ok()?, v.into_string().ok()?)))
                .collect::<Vec<_>>();
            &live_vars
        }
    };
    let resolved = resolve_rank(config.rank, vars);
    let mut warnings = resolved.warnings;
    let rank = resolved.rank;
    let sink = !config.collect_all_processes && rank != 0;

    let environment = capture_environment_from(
        vars.iter().cloned(),
        &hooks.env_filter,
        hooks.dependencies.as_deref(),
        hooks.process.clone().unwrap_or_else(ProcessInfo::current),
    );
    if environment.dependencies_unavailable {
        warnings.push("no dependency prober configured; dependency list is empty".into());
    }

    let run_id = layout::next_run_id(&config.save_dir, &config.experiment_name, rank)?;
    let run_dir = config
        .save_dir
        .join(layout::run_dir_name(&config.experiment_name, run_id));
    let rank_dir = config.collect_all_processes.then(|| format!("rank{rank}"));
    let nest = |base: &str| {
        let mut p = PathBuf::from(base);
        if let Some(r) = &rank_dir {
            p.push(r);
        }
        p
    };
    let metrics_rel = nest("metrics");
    let artifacts_rel = nest("artifacts");

    if !sink {
        for dir in [run_dir.join(&metrics_rel), run_dir.join(&artifacts_rel)] {
            fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        }
        let marker = run_dir.join(layout::start_marker(rank));
        fs::write(&marker, b"").map_err(|e| Error::io(&marker, e))?;
    }

    let started_at = hooks.clock.now_ms();
    Ok(RunHandle {
        inner: Arc::new(RunInner {
            run_id,
            rank,
            sink,
            run_dir,
            metrics_rel,
            artifacts_rel,
            started_at,
            environment,
            clock: hooks.clock,
            layout_tool: hooks.layout_tool,
            state: Mutex::new(RunState {
                active: true,
                params: IndexMap::new(),
                series: IndexMap::new(),
                artifacts: Vec::new(),
                model_versions: Vec::new(),
                final_model: None,
                datasets: IndexMap::new(),
                telemetry: hooks.telemetry,
                energy: EnergyAccumulator::default(),
                ended_at: None,
                warnings,
            }),
            config,
            slot,
            token,
        }),
    })
}

pub(crate) struct RunState {
    pub(crate) active: bool,
    pub(crate) params: IndexMap<String, AttributeValue>,
    pub(crate) series: IndexMap<(String, Context), MetricSeries>,
    pub(crate) artifacts: Vec<ArtifactRecord>,
    pub(crate) model_versions: Vec<ModelVersion>,
    pub(crate) final_model: Option<FinalModel>,
    pub(crate) datasets: IndexMap<String, DatasetDescriptor>,
    pub(crate) telemetry: Box<dyn TelemetryProvider>,
    pub(crate) energy: EnergyAccumulator,
    pub(crate) ended_at: Option<EpochMillis>,
    pub(crate) warnings: Vec<String>,
}

impl RunState {
    pub(crate) fn warn(&mut self, message: String) {
        log::warn!("{message}");
        self.warnings.push(message);
    }
}

pub(crate) struct RunInner {
    pub(crate) run_id: u64,
    pub(crate) rank: u32,
    pub(crate) sink: bool,
    pub(crate) config: RunConfig,
    pub(crate) run_dir: PathBuf,
    pub(crate) metrics_rel: PathBuf,
    pub(crate) artifacts_rel: PathBuf,
    pub(crate) started_at: EpochMillis,
    pub(crate) environment: EnvironmentSnapshot,
    pub(crate) clock: Arc<dyn Clock>,
    pub(crate) layout_tool: LayoutTool,
    pub(crate) state: Mutex<RunState>,
    slot: Slot,
    token: u64,
}

impl Drop for RunInner {
    fn drop(&mut self) {
        release(&self.slot, self.token);
    }
}

/// Live handle to one run on one rank. Cheap to clone and safe to share
/// between threads; every operation is serialized on an internal lock.
#[derive(Clone)]
pub struct RunHandle {
    pub(crate) inner: Arc<RunInner>,
}

/// Files produced by [`RunHandle::end_run`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunOutcome {
    /// `None` for a no-op rank.
    pub document: Option<PathBuf>,
    pub dot: Option<PathBuf>,
    pub svg: Option<PathBuf>,
    pub warnings: Vec<String>,
}

/// Everything the provenance graph is built from, captured from a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSnapshot {
    pub user_namespace: String,
    pub experiment: String,
    pub run_id: u64,
    pub rank: u32,
    pub started_at: EpochMillis,
    pub ended_at: Option<EpochMillis>,
    pub environment: EnvironmentSnapshot,
    pub params: Vec<(String, AttributeValue)>,
    pub datasets: Vec<DatasetDescriptor>,
    pub series: Vec<SeriesSummary>,
    pub artifacts: Vec<ArtifactRecord>,
    pub model_versions: Vec<ModelVersion>,
    pub final_model: Option<FinalModel>,
}

impl RunHandle {
    pub fn run_id(&self) -> u64 {
        self.inner.run_id
    }

    pub fn rank(&self) -> u32 {
        self.inner.rank
    }

    pub fn config(&self) -> &RunConfig {
        &self.inner.config
    }

    pub fn run_dir(&self) -> &Path {
        &self.inner.run_dir
    }

    pub fn started_at(&self) -> EpochMillis {
        self.inner.started_at
    }

    /// True when this rank discards everything it is given.
    pub fn is_noop(&self) -> bool {
        self.inner.sink
    }

    pub fn is_active(&self) -> bool {
        lock(&self.inner.state).active
    }

    pub fn environment(&self) -> &EnvironmentSnapshot {
        &self.inner.environment
    }

    pub fn warnings(&self) -> Vec<String> {
        lock(&self.inner.state).warnings.clone()
    }

    pub fn metrics_dir(&self) -> PathBuf {
        self.inner.run_dir.join(&self.inner.metrics_rel)
    }

    pub fn artifacts_dir(&self) -> PathBuf {
        self.inner.run_dir.join(&self.inner.artifacts_rel)
    }

    pub fn document_stem(&self) -> String {
        layout::document_stem(&self.inner.config.experiment_name, self.inner.run_id, self.inner.rank)
    }

    /// Swap the telemetry provider of a live run.
    pub fn set_telemetry(&self, provider: impl TelemetryProvider + 'static) -> Result<()> {
        self.active_state()?.telemetry = Box::new(provider);
        Ok(())
    }

    pub(crate) fn now(&self) -> EpochMillis {
        self.inner.clock.now_ms()
    }

    /// Lock the state of an active run.
    pub(crate) fn active_state(&self) -> Result<MutexGuard<'_, RunState>> {
        let state = lock(&self.inner.state);
        if !state.active {
            return Err(Error::illegal_state("run has ended"));
        }
        Ok(state)
    }

    pub fn snapshot(&self) -> RunSnapshot {
        let state = lock(&self.inner.state);
        self.snapshot_locked(&state)
    }

    fn snapshot_locked(&self, state: &RunState) -> RunSnapshot {
        let inner = &self.inner;
        RunSnapshot {
            user_namespace: inner.config.user_namespace.clone(),
            experiment: inner.config.experiment_name.clone(),
            run_id: inner.run_id,
            rank: inner.rank,
            started_at: inner.started_at,
            ended_at: state.ended_at,
            environment: inner.environment.clone(),
            params: state.params.iter().map(|(k, v)| (k.clone(), v.clone())).collect(),
            datasets: state.datasets.values().cloned().collect(),
            series: state
                .series
                .values()
                .map(|s| s.summary(&inner.run_dir))
                .collect(),
            artifacts: state.artifacts.clone(),
            model_versions: state.model_versions.clone(),
            final_model: state.final_model.clone(),
        }
    }

    /// Flush every series, write the PROV-JSON document and, on request, the
    /// DOT and SVG renderings. The handle is inactive afterwards whatever the outcome.
    pub fn end_run(&self, create_graph: bool, create_svg: bool) -> Result<RunOutcome> {
        let mut state = self.active_state()?;
        state.active = false;
        release(&self.inner.slot, self.inner.token);
        let ended = self.now().max(self.inner.started_at);
        state.ended_at = Some(ended);

        if self.inner.sink {
            return Ok(RunOutcome::default());
        }

        let mut first_error = None;
        for series in state.series.values_mut() {
            if let Err(e) = series.flush() {
                first_error.get_or_insert(e);
            }
        }
        if let Some(e) = first_error {
            return Err(e);
        }

        let snapshot = self.snapshot_locked(&state);
        let doc = build_provenance(&snapshot);
        let bytes = prov_json::serialize(&doc)?;
        let stem = self.document_stem();
        let json_path = self.inner.run_dir.join(format!("{stem}.json"));
        fs::write(&json_path, bytes).map_err(|e| Error::io(&json_path, e))?;

        let mut outcome = RunOutcome {
            document: Some(json_path),
            ..RunOutcome::default()
        };
        if create_graph || create_svg {
            let dot = to_dot(&doc);
            if create_graph {
                let path = self.inner.run_dir.join(format!("{stem}.dot"));
                fs::write(&path, &dot).map_err(|e| Error::io(&path, e))?;
                outcome.dot = Some(path);
            }
            if create_svg {
                match to_svg_with(&self.inner.layout_tool, &dot)? {
                    Some(svg) => {
                        let path = self.inner.run_dir.join(format!("{stem}.svg"));
                        fs::write(&path, svg).map_err(|e| Error::io(&path, e))?;
                        outcome.svg = Some(path);
                    }
                    None => state.warn("graphviz `dot` not found; SVG skipped".into()),
                }
            }
        }
        outcome.warnings = state.warnings.clone();
        Ok(outcome)
    }
}

impl std::fmt::Debug for RunHandle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RunHandle")
            .field("experiment", &self.inner.config.experiment_name)
            .field("run_id", &self.inner.run_id)
            .field("rank", &self.inner.rank)
            .field("run_dir", &self.inner.run_dir)
            .finish_non_exhaustive()
    }
}
