//! System and energy telemetry behind a pluggable [`TelemetryProvider`].

mod host;

use crate::clock::EpochMillis;
use crate::error::{Error, Result};
use crate::logging::Context;
use crate::run::RunHandle;

pub use host::HostTelemetry;

/// Global-average placeholder, grams CO2-equivalent per kWh.
pub const DEFAULT_CARBON_INTENSITY_G_PER_KWH: f64 = 475.0;
const JOULES_PER_KWH: f64 = 3.6e6;

pub const MEMORY_USAGE: &str = "memory_usage";
pub const DISK_USAGE: &str = "disk_usage";
pub const GPU_MEMORY_USAGE: &str = "gpu_memory_usage";
pub const GPU_USAGE: &str = "gpu_usage";
pub const CPU_USAGE: &str = "cpu_usage";
pub const CPU_POWER: &str = "cpu_power_W";
pub const GPU_POWER: &str = "gpu_power_W";
pub const ENERGY: &str = "energy_kWh";
pub const EMISSIONS: &str = "emissions_gCO2eq";

#[derive(Debug, Clone, PartialEq)]
pub struct SystemSample {
    pub memory_used_bytes: u64,
    pub memory_total_bytes: u64,
    pub disk_used_bytes: u64,
    pub disk_total_bytes: u64,
    pub gpu_memory_used_bytes: Option<u64>,
    pub gpu_utilization_percent: Option<f64>,
    pub cpu_utilization_percent: f64,
}

impl SystemSample {
    pub fn check(&self) -> std::result::Result<(), TelemetryError> {
        let pct = |p: f64| (0.0..=100.0).contains(&p);
        if self.memory_used_bytes > self.memory_total_bytes {
            return Err(TelemetryError::new("memory used exceeds total"));
        }
        if self.disk_used_bytes > self.disk_total_bytes {
            return Err(TelemetryError::new("disk used exceeds total"));
        }
        if !pct(self.cpu_utilization_percent) || !self.gpu_utilization_percent.is_none_or(pct) {
            return Err(TelemetryError::new("utilization outside [0, 100]"));
        }
        Ok(())
    }

    fn percent(used: u64, total: u64) -> f64 {
        if total == 0 {
            0.0
        } else {
            used as f64 / total as f64 * 100.0
        }
    }

    /// The metric keys and values a system sample fans out to.
    /// Memory and disk are percent of total; GPU memory is bytes.
    pub fn metrics(&self) -> Vec<(&'static str, f64)> {
        let mut out = vec![
            (MEMORY_USAGE, Self::percent(self.memory_used_bytes, self.memory_total_bytes)),
            (DISK_USAGE, Self::percent(self.disk_used_bytes, self.disk_total_bytes)),
        ];
        if let Some(bytes) = self.gpu_memory_used_bytes {
            out.push((GPU_MEMORY_USAGE, bytes as f64));
        }
        if let Some(p) = self.gpu_utilization_percent {
            out.push((GPU_USAGE, p));
        }
        out.push((CPU_USAGE, self.cpu_utilization_percent));
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergySample {
    pub cpu_power_watts: f64,
    pub gpu_power_watts: Option<f64>,
    pub ram_power_watts: Option<f64>,
    pub sample_time: EpochMillis,
}

impl EnergySample {
    pub fn total_watts(&self) -> f64 {
        self.cpu_power_watts + self.gpu_power_watts.unwrap_or(0.0) + self.ram_power_watts.unwrap_or(0.0)
    }

    fn check(&self) -> std::result::Result<(), TelemetryError> {
        let ok = |w: f64| w.is_finite() && w >= 0.0;
        if ok(self.cpu_power_watts)
            && self.gpu_power_watts.is_none_or(ok)
            && self.ram_power_watts.is_none_or(ok)
        {
            Ok(())
        } else {
            Err(TelemetryError::new("power readings must be finite and nonnegative"))
        }
    }
}

/// Left-point (rectangle) integration of power over the gaps between samples.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyAccumulator {
    cumulative_energy_kwh: f64,
    last_sample: Option<EnergySample>,
    carbon_intensity_g_per_kwh: f64,
}

impl Default for EnergyAccumulator {
    fn default() -> Self {
        Self {
            cumulative_energy_kwh: 0.0,
            last_sample: None,
            carbon_intensity_g_per_kwh: DEFAULT_CARBON_INTENSITY_G_PER_KWH,
        }
    }
}

impl EnergyAccumulator {
    /// Add the energy drawn since the previous sample at that sample's power.
    /// The first sample only sets the starting point.
    pub fn record(&mut self, sample: EnergySample) -> f64 {
        if let Some(prev) = self.last_sample {
            let seconds = (sample.sample_time - prev.sample_time).max(0) as f64 / 1000.0;
            self.cumulative_energy_kwh += prev.total_watts() * seconds / JOULES_PER_KWH;
        }
        self.last_sample = Some(sample);
        self.cumulative_energy_kwh
    }

    pub fn cumulative_energy_kwh(&self) -> f64 {
        self.cumulative_energy_kwh
    }

    pub fn last_sample(&self) -> Option<&EnergySample> {
        self.last_sample.as_ref()
    }

    pub fn carbon_intensity(&self) -> f64 {
        self.carbon_intensity_g_per_kwh
    }

    pub fn set_carbon_intensity(&mut self, g_per_kwh: f64) -> Result<()> {
        if !(g_per_kwh.is_finite() && g_per_kwh > 0.0) {
            return Err(Error::invalid(format!(
                "carbon intensity must be positive, got {g_per_kwh}"
            )));
        }
        self.carbon_intensity_g_per_kwh = g_per_kwh;
        Ok(())
    }

    /// Derived from cumulative energy, so it follows intensity changes retroactively.
    pub fn emissions_g(&self) -> f64 {
        self.cumulative_energy_kwh * self.carbon_intensity_g_per_kwh
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("telemetry unavailable: {0}")]
pub struct TelemetryError(pub String);

impl TelemetryError {
    pub fn new(msg: impl Into<String>) -> Self {
        Self(msg.into())
    }
}

pub trait TelemetryProvider: Send {
    fn sample_system(&mut self) -> std::result::Result<SystemSample, TelemetryError>;

    /// Power readings; `now` is the run clock's current time and should be
    /// used as the sample time.
    fn sample_energy(&mut self, now: EpochMillis) -> std::result::Result<EnergySample, TelemetryError>;
}

/// Power draw from `from_ms` until the next step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerStep {
    pub from_ms: EpochMillis,
    pub cpu_watts: f64,
    pub gpu_watts: Option<f64>,
    pub ram_watts: Option<f64>,
}

/// Deterministic provider for tests and reproducible demos.
#[derive(Debug, Clone, Default)]
pub struct ScriptedTelemetry {
    system: Vec<SystemSample>,
    cursor: usize,
    power: Vec<PowerStep>,
    failing: bool,
}

impl ScriptedTelemetry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Every call returns `sample`.
    pub fn system(mut self, sample: SystemSample) -> Self {
        self.system = vec![sample];
        self
    }

    /// Calls cycle through `samples`.
    pub fn system_sequence(mut self, samples: Vec<SystemSample>) -> Self {
        self.system = samples;
        self
    }

    pub fn constant_power(self, cpu_watts: f64, gpu_watts: Option<f64>) -> Self {
        self.power_schedule(vec![PowerStep {
            from_ms: EpochMillis::MIN,
            cpu_watts,
            gpu_watts,
            ram_watts: None,
        }])
    }

    /// Piecewise-constant power; steps must be sorted by `from_ms`.
    pub fn power_schedule(mut self, steps: Vec<PowerStep>) -> Self {
        self.power = steps;
        self
    }

    /// A provider whose every call fails.
    pub fn failing() -> Self {
        Self {
            failing: true,
            ..Self::default()
        }
    }
}

impl TelemetryProvider for ScriptedTelemetry {
    fn sample_system(&mut self) -> std::result::Result<SystemSample, TelemetryError> {
        if self.failing || self.system.is_empty() {
            return Err(TelemetryError::new("scripted provider has no system sample"));
        }
        let sample = self.system[self.cursor % self.system.len()].clone();
        self.cursor += 1;
        Ok(sample)
    }

    fn sample_energy(&mut self, now: EpochMillis) -> std::result::Result<EnergySample, TelemetryError> {
        if self.failing {
            return Err(TelemetryError::new("scripted provider fails by request"));
        }
        let step = self
            .power
            .iter()
            .rev()
            .find(|s| s.from_ms <= now)
            .ok_or_else(|| TelemetryError::new("no scripted power for this time"))?;
        Ok(EnergySample {
            cpu_power_watts: step.cpu_watts,
            gpu_power_watts: step.gpu_watts,
            ram_power_watts: step.ram_watts,
            sample_time: now,
        })
    }
}

impl RunHandle {
    /// Take one system sample and log each reading as a metric. A provider
    /// failure is reported as a warning and logs nothing.
    pub fn log_system_metrics(&self, context: Context, step: u64) -> Result<()> {
        let mut state = self.active_state()?;
        let sample = state.telemetry.sample_system().and_then(|s| s.check().map(|_| s));
        let sample = match sample {
            Ok(s) => s,
            Err(e) => {
                state.warn(format!("log_system_metrics: {e}"));
                return Ok(());
            }
        };
        for (key, value) in sample.metrics() {
            self.append_metric(&mut state, key, value, &context, step)?;
        }
        Ok(())
    }

    /// Take one power sample, integrate energy since the previous one and log
    /// power, cumulative energy and cumulative emissions.
    pub fn log_carbon_metrics(&self, context: Context, step: u64) -> Result<()> {
        let mut state = self.active_state()?;
        let now = self.now();
        let sample = state
            .telemetry
            .sample_energy(now)
            .and_then(|s| s.check().map(|_| s));
        let mut sample = match sample {
            Ok(s) => s,
            Err(e) => {
                state.warn(format!("log_carbon_metrics: {e}"));
                return Ok(());
            }
        };
        sample.sample_time = now;
        let energy = state.energy.record(sample);
        let emissions = state.energy.emissions_g();
        self.append_metric(&mut state, CPU_POWER, sample.cpu_power_watts, &context, step)?;
        if let Some(gpu) = sample.gpu_power_watts {
            self.append_metric(&mut state, GPU_POWER, gpu, &context, step)?;
        }
        self.append_metric(&mut state, ENERGY, energy, &context, step)?;
        self.append_metric(&mut state, EMISSIONS, emissions, &context, step)
    }

    pub fn set_carbon_intensity(&self, g_per_kwh: f64) -> Result<()> {
        self.active_state()?.energy.set_carbon_intensity(g_per_kwh)
    }

    pub fn carbon_intensity(&self) -> f64 {
        crate::run::lock_state(self).energy.carbon_intensity()
    }

    pub fn cumulative_energy_kwh(&self) -> f64 {
        crate::run::lock_state(self).energy.cumulative_energy_kwh()
    }
}
