//! Best-effort counters for the machine we run on. Linux reads `/proc`,
//! `statvfs` and RAPL; GPUs are queried through `nvidia-smi` when present.
//! Anything unavailable surfaces as a [`TelemetryError`].

use std::ffi::CString;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use super::{EnergySample, SystemSample, TelemetryError, TelemetryProvider};
use crate::clock::EpochMillis;

/// Used when RAPL is unreadable: CPU power is estimated as utilization × this TDP.
pub const FALLBACK_CPU_TDP_WATTS: f64 = 65.0;
const RAPL_ENERGY: &str = "/sys/class/powercap/intel-rapl:0/energy_uj";

#[derive(Debug)]
pub struct HostTelemetry {
    disk_path: PathBuf,
    last_cpu: Option<(u64, u64)>,
    last_rapl: Option<(u64, EpochMillis)>,
    last_utilization: f64,
}

#[derive(Debug, Clone, Copy)]
struct GpuReading {
    memory_used_bytes: u64,
    utilization_percent: f64,
    power_watts: f64,
}

impl HostTelemetry {
    /// `disk_path` selects the file system reported as disk usage.
    pub fn new(disk_path: impl Into<PathBuf>) -> Self {
        Self {
            disk_path: disk_path.into(),
            last_cpu: None,
            last_rapl: None,
            last_utilization: 0.0,
        }
    }

    fn cpu_utilization(&mut self) -> Result<f64, TelemetryError> {
        let stat = fs::read_to_string("/proc/stat")
            .map_err(|e| TelemetryError::new(format!("/proc/stat: {e}")))?;
        let line = stat
            .lines()
            .find(|l| l.starts_with("cpu "))
            .ok_or_else(|| TelemetryError::new("/proc/stat has no cpu line"))?;
        let fields: Vec<u64> = line
            .split_whitespace()
            .skip(1)
            .filter_map(|f| f.parse().ok())
            .collect();
        if fields.len() < 4 {
            return Err(TelemetryError::new("/proc/stat cpu line too short"));
        }
        let idle = fields[3] + fields.get(4).copied().unwrap_or(0);
        let total: u64 = fields.iter().sum();
        let (prev_idle, prev_total) = self.last_cpu.unwrap_or((0, 0));
        self.last_cpu = Some((idle, total));
        let d_total = total.saturating_sub(prev_total);
        if d_total == 0 {
            return Ok(self.last_utilization);
        }
        let d_idle = idle.saturating_sub(prev_idle);
        let busy = (d_total.saturating_sub(d_idle)) as f64 / d_total as f64 * 100.0;
        self.last_utilization = busy.clamp(0.0, 100.0);
        Ok(self.last_utilization)
    }

    fn rapl_watts(&mut self, now: EpochMillis) -> Option<f64> {
        let uj: u64 = fs::read_to_string(RAPL_ENERGY).ok()?.trim().parse().ok()?;
        let prev = self.last_rapl.replace((uj, now));
        let (prev_uj, prev_ms) = prev?;
        let dt = (now - prev_ms) as f64 / 1000.0;
        if dt <= 0.0 || uj < prev_uj {
            return None;
        }
        Some((uj - prev_uj) as f64 / 1e6 / dt)
    }
}

fn meminfo() -> Result<(u64, u64), TelemetryError> {
    let text = fs::read_to_string("/proc/meminfo")
        .map_err(|e| TelemetryError::new(format!("/proc/meminfo: {e}")))?;
    let field = |name: &str| {
        text.lines()
            .find(|l| l.starts_with(name))
            .and_then(|l| l.split_whitespace().nth(1))
            .and_then(|v| v.parse::<u64>().ok())
            .map(|kib| kib * 1024)
    };
    let total = field("MemTotal:").ok_or_else(|| TelemetryError::new("MemTotal missing"))?;
    let available = field("MemAvailable:")
        .or_else(|| field("MemFree:"))
        .ok_or_else(|| TelemetryError::new("MemAvailable missing"))?;
    Ok((total.saturating_sub(available), total))
}

fn disk_usage(path: &Path) -> Result<(u64, u64), TelemetryError> {
    let c_path = CString::new(path.to_string_lossy().as_bytes())
        .map_err(|_| TelemetryError::new("disk path contains NUL"))?;
    let mut stat: libc::statvfs = unsafe { std::mem::zeroed() };
    // SAFETY: c_path is NUL-terminated and stat is a valid out-pointer.
    let rc = unsafe { libc::statvfs(c_path.as_ptr(), &mut stat) };
    if rc != 0 {
        return Err(TelemetryError::new(format!(
            "statvfs({}): {}",
            path.display(),
            std::io::Error::last_os_error()
        )));
    }
    let frsize = stat.f_frsize as u64;
    let total = stat.f_blocks as u64 * frsize;
    let free = stat.f_bfree as u64 * frsize;
    Ok((total.saturating_sub(free), total))
}

fn gpu_reading() -> Option<GpuReading> {
    let out = Command::new("nvidia-smi")
        .args([
            "--query-gpu=memory.used,utilization.gpu,power.draw",
            "--format=csv,noheader,nounits",
        ])
        .output()
        .ok()?;
    if !out.status.success() {
        return None;
    }
    let text = String::from_utf8_lossy(&out.stdout);
    let mut total = GpuReading {
        memory_used_bytes: 0,
        utilization_percent: 0.0,
        power_watts: 0.0,
    };
    let mut count = 0.0;
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let parts: Vec<f64> = line
            .split(',')
            .map(|p| p.trim().parse().unwrap_or(0.0))
            .collect();
        if parts.len() != 3 {
            return None;
        }
        total.memory_used_bytes += (parts[0] * 1024.0 * 1024.0) as u64;
        total.utilization_percent += parts[1];
        total.power_watts += parts[2];
        count += 1.0;
    }
    if count == 0.0 {
        return None;
    }
    total.utilization_percent /= count;
    Some(total)
}

impl TelemetryProvider for HostTelemetry {
    fn sample_system(&mut self) -> Result<SystemSample, TelemetryError> {
        let (memory_used_bytes, memory_total_bytes) = meminfo()?;
        let (disk_used_bytes, disk_total_bytes) = disk_usage(&self.disk_path)?;
        let cpu_utilization_percent = self.cpu_utilization()?;
        let gpu = gpu_reading();
        Ok(SystemSample {
            memory_used_bytes,
            memory_total_bytes,
            disk_used_bytes,
            disk_total_bytes,
            gpu_memory_used_bytes: gpu.map(|g| g.memory_used_bytes),
            gpu_utilization_percent: gpu.map(|g| g.utilization_percent.clamp(0.0, 100.0)),
            cpu_utilization_percent,
        })
    }

    fn sample_energy(&mut self, now: EpochMillis) -> Result<EnergySample, TelemetryError> {
        let cpu_power_watts = match self.rapl_watts(now) {
            Some(w) => w,
            None => self.cpu_utilization()? / 100.0 * FALLBACK_CPU_TDP_WATTS,
        };
        Ok(EnergySample {
            cpu_power_watts,
            gpu_power_watts: gpu_reading().map(|g| g.power_watts),
            ram_power_watts: None,
            sample_time: now,
        })
    }
}
