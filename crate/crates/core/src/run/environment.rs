use std::fs;

/// Variable-name prefixes captured by default.
pub const DEFAULT_ENV_ALLOWLIST: &[&str] = &[
    "CUDA_",
    "NVIDIA_",
    "SLURM_",
    "OMPI_",
    "PMI_",
    "RANK",
    "LOCAL_RANK",
    "WORLD_SIZE",
    "LOCAL_WORLD_SIZE",
    "MASTER_ADDR",
    "MASTER_PORT",
    "OMP_",
    "MKL_",
    "PYTHONPATH",
    "VIRTUAL_ENV",
    "CONDA_",
    "HOSTNAME",
    "LANG",
];

const SECRET_MARKERS: [&str; 4] = ["KEY", "TOKEN", "SECRET", "PASSWORD"];
pub const REDACTED: &str = "[redacted]";

/// Which environment variables end up in the snapshot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnvFilter {
    prefixes: Vec<String>,
}

impl EnvFilter {
    pub fn with_prefixes<I, S>(prefixes: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            prefixes: prefixes.into_iter().map(Into::into).collect(),
        }
    }

    pub fn allow_all() -> Self {
        Self::with_prefixes([""])
    }

    pub fn allows(&self, name: &str) -> bool {
        self.prefixes.iter().any(|p| name.starts_with(p.as_str()))
    }
}

impl Default for EnvFilter {
    fn default() -> Self {
        Self::with_prefixes(DEFAULT_ENV_ALLOWLIST.iter().copied())
    }
}

/// Supplies the installed-package list (the Python layer reports its packages here).
pub trait DependencyProber: Send + Sync {
    fn dependencies(&self) -> Vec<(String, String)>;
}

#[derive(Debug, Clone, Default)]
pub struct StaticDependencies(pub Vec<(String, String)>);

impl DependencyProber for StaticDependencies {
    fn dependencies(&self) -> Vec<(String, String)> {
        self.0.clone()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProcessInfo {
    pub host_name: String,
    pub os: String,
    pub pid: u32,
    pub command_line: Vec<String>,
}

impl ProcessInfo {
    pub fn current() -> Self {
        let host_name = fs::read_to_string("/proc/sys/kernel/hostname")
            .map(|s| s.trim().to_owned())
            .ok()
            .filter(|s| !s.is_empty())
            .or_else(|| std::env::var("HOSTNAME").ok())
            .or_else(|| std::env::var("COMPUTERNAME").ok())
            .unwrap_or_else(|| "unknown".into());
        Self {
            host_name,
            os: std::env::consts::OS.to_owned(),
            pid: std::process::id(),
            command_line: std::env::args().collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnvironmentSnapshot {
    /// Sorted by name; secret-looking values are redacted.
    pub variables: Vec<(String, String)>,
    pub dependencies: Vec<(String, String)>,
    pub process: ProcessInfo,
    /// Set when no dependency prober was configured.
    pub dependencies_unavailable: bool,
}

fn looks_secret(name: &str) -> bool {
    let upper = name.to_ascii_uppercase();
    SECRET_MARKERS.iter().any(|m| upper.contains(m))
}

/// Build a snapshot from explicit inputs. Never fails.
pub fn capture_environment_from<I, K, V>(
    variables: I,
    filter: &EnvFilter,
    prober: Option<&dyn DependencyProber>,
    process: ProcessInfo,
) -> EnvironmentSnapshot
where
    I: IntoIterator<Item = (K, V)>,
    K: Into<String>,
    V: Into<String>,
{
    let mut vars: Vec<(String, String)> = variables
        .into_iter()
        .map(|(k, v)| (k.into(), v.into()))
        .filter(|(k, _)| filter.allows(k))
        .map(|(k, v)| {
            let v = if looks_secret(&k) { REDACTED.to_owned() } else { v };
            (k, v)
        })
        .collect();
    vars.sort();
    vars.dedup_by(|a, b| a.0 == b.0);

    let (dependencies, dependencies_unavailable) = match prober {
        Some(p) => {
            let mut deps = p.dependencies();
            deps.sort();
            deps.dedup_by(|a, b| a.0 == b.0);
            (deps, false)
        }
        None => {
            log::warn!("no dependency prober configured; dependency list left empty");
            (Vec::new(), true)
        }
    };

    EnvironmentSnapshot {
        variables: vars,
        dependencies,
        process,
        dependencies_unavailable,
    }
}

/// Snapshot of the live process with the default allowlist and no prober.
pub fn capture_environment() -> EnvironmentSnapshot {
    capture_environment_from(
        std::env::vars_os().filter_map(|(k, v)| Some((k.into_string().ok()?, v.into_string().ok()?))),
        &EnvFilter::default(),
        None,
        ProcessInfo::current(),
    )
}
