//! Flat C interface for language bindings. The symbol list and calling
//! conventions are documented in `include/provtrack.h`.
//!
//! Every entry point returns a status: `PROVTRACK_OK` (0) or the numeric
//! code of the error ([`Error::code`]). The message of the most recent
//! failure on the calling thread is available through
//! [`provtrack_last_error_message`]. Runs are addressed by opaque `u64`
//! handles. Panics never cross the boundary.

use std::cell::RefCell;
use std::collections::HashMap;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, OnceLock};

use crate::clock::{EpochMillis, ManualClock};
use crate::error::{Error, Result};
use crate::logging::{Context, DatasetDescriptor, ModelDescriptor};
use crate::run::{RunConfig, RunHandle, RunHooks, RunManager, DEFAULT_SAVE_AFTER_N_LOGS};
use crate::telemetry::{PowerStep, ScriptedTelemetry, SystemSample};

pub const PROVTRACK_OK: i32 = 0;
/// Returned when a panic was caught inside the library.
pub const PROVTRACK_INTERNAL: i32 = 99;

struct Session {
    run: RunHandle,
    clock: Option<Arc<ManualClock>>,
}

fn sessions() -> &'static Mutex<HashMap<u64, Session>> {
    static SESSIONS: OnceLock<Mutex<HashMap<u64, Session>>> = OnceLock::new();
    SESSIONS.get_or_init(Default::default)
}

static NEXT_HANDLE: AtomicU64 = AtomicU64::new(1);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_last_error(message: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = message);
}

fn guard(f: impl FnOnce() -> Result<()>) -> i32 {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PROVTRACK_OK,
        Ok(Err(e)) => {
            set_last_error(e.to_string());
            e.code()
        }
        Err(_) => {
            set_last_error("internal panic".into());
            PROVTRACK_INTERNAL
        }
    }
}

fn with_session<T>(handle: u64, f: impl FnOnce(&Session) -> Result<T>) -> Result<T> {
    let map = sessions().lock().unwrap_or_else(|p| p.into_inner());
    let session = map
        .get(&handle)
        .ok_or_else(|| Error::IllegalState(format!("unknown run handle {handle}")))?;
    f(session)
}

fn with_run<T>(handle: u64, f: impl FnOnce(&RunHandle) -> Result<T>) -> Result<T> {
    let run = with_session(handle, |s| Ok(s.run.clone()))?;
    f(&run)
}

/// # Safety
/// `p` is null or a NUL-terminated string valid for the duration of the call.
unsafe fn string(p: *const c_char, what: &str) -> Result<String> {
    if p.is_null() {
        return Err(Error::InvalidArgument(format!("{what} must not be null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(str::to_owned)
        .map_err(|_| Error::InvalidArgument(format!("{what} is not valid UTF-8")))
}

unsafe fn optional_string(p: *const c_char, what: &str) -> Result<Option<String>> {
    if p.is_null() {
        Ok(None)
    } else {
        string(p, what).map(Some)
    }
}

unsafe fn context(p: *const c_char) -> Result<Context> {
    string(p, "context")?.parse()
}

unsafe fn optional_context(p: *const c_char) -> Result<Option<Context>> {
    optional_string(p, "context")?.map(|c| c.parse()).transpose()
}

fn optional_u64(v: i64) -> Option<u64> {
    u64::try_from(v).ok()
}

#[allow(clippy::too_many_arguments)]
unsafe fn start(
    user_namespace: *const c_char,
    experiment_name: *const c_char,
    save_dir: *const c_char,
    collect_all_processes: i32,
    save_after_n_logs: u64,
    rank: i64,
    manual_clock_start_ms: Option<EpochMillis>,
    out_handle: *mut u64,
) -> Result<()> {
    if out_handle.is_null() {
        return Err(Error::InvalidArgument("out_handle must not be null".into()));
    }
    let mut config = RunConfig::new(string(user_namespace, "user_namespace")?)
        .collect_all_processes(collect_all_processes != 0)
        .save_after_n_logs(if save_after_n_logs == 0 {
            DEFAULT_SAVE_AFTER_N_LOGS
        } else {
            usize::try_from(save_after_n_logs).unwrap_or(usize::MAX)
        });
    if let Some(name) = optional_string(experiment_name, "experiment_name")? {
        config = config.experiment_name(name);
    }
    if let Some(dir) = optional_string(save_dir, "save_dir")? {
        config = config.save_dir(PathBuf::from(dir));
    }
    if rank >= 0 {
        let rank = u32::try_from(rank).map_err(|_| Error::InvalidArgument(format!("rank {rank} out of range")))?;
        config = config.rank(rank);
    }
    let (hooks, clock) = match manual_clock_start_ms {
        Some(ms) => {
            let clock = ManualClock::shared(ms);
            (RunHooks::deterministic(clock.clone()), Some(clock))
        }
        None => (RunHooks::default(), None),
    };
    let run = RunManager::global().start(config, hooks)?;
    let handle = NEXT_HANDLE.fetch_add(1, Ordering::Relaxed);
    sessions()
        .lock()
        .unwrap_or_else(|p| p.into_inner())
        .insert(handle, Session { run, clock });
    *out_handle = handle;
    Ok(())
}

/// Start a run on the live clock and host telemetry. Null `experiment_name`
/// or `save_dir` select the defaults; `save_after_n_logs` 0 selects the
/// default threshold; negative `rank` resolves the rank from launcher
/// environment variables.
///
/// # Safety
/// String arguments are null or NUL-terminated; `out_handle` is writable.
#[no_mangle]
pub unsafe extern "C" fn provtrack_start_run(
    user_namespace: *const c_char,
    experiment_name: *const c_char,
    save_dir: *const c_char,
    collect_all_processes: i32,
    save_after_n_logs: u64,
    rank: i64,
    out_handle: *mut u64,
) -> i32 {
    guard(|| {
        start(
            user_namespace,
            experiment_name,
            save_dir,
            collect_all_processes,
            save_after_n_logs,
            rank,
            None,
            out_handle,
        )
    })
}

/// Like [`provtrack_start_run`] but reproducible: a manual clock starting at
/// `start_ms`, empty environment, scripted telemetry with no readings until
/// `provtrack_script_*` supplies some.
///
/// # Safety
/// As for [`provtrack_start_run`].
#[no_mangle]
pub unsafe extern "C" fn provtrack_start_run_deterministic(
    user_namespace: *const c_char,
    experiment_name: *const c_char,
    save_dir: *const c_char,
    collect_all_processes: i32,
    save_after_n_logs: u64,
    rank: i64,
    start_ms: i64,
    out_handle: *mut u64,
) -> i32 {
    guard(|| {
        start(
            user_namespace,
            experiment_name,
            save_dir,
            collect_all_processes,
            save_after_n_logs,
            rank,
            Some(start_ms),
            out_handle,
        )
    })
}

fn manual_clock(handle: u64) -> Result<Arc<ManualClock>> {
    with_session(handle, |s| {
        s.clock
            .clone()
            .ok_or_else(|| Error::IllegalState("run was not started with a manual clock".into()))
    })
}

#[no_mangle]
pub extern "C" fn provtrack_set_clock_ms(handle: u64, ms: i64) -> i32 {
    guard(|| manual_clock(handle).map(|c| c.set(ms)))
}

#[no_mangle]
pub extern "C" fn provtrack_advance_clock_ms(handle: u64, delta_ms: i64) -> i32 {
    guard(|| manual_clock(handle).map(|c| c.advance(delta_ms)))
}

/// Replace the telemetry of a deterministic run with constant readings.
/// Negative `gpu_watts` means no GPU.
#[no_mangle]
pub extern "C" fn provtrack_script_telemetry(
    handle: u64,
    memory_used_bytes: u64,
    memory_total_bytes: u64,
    disk_used_bytes: u64,
    disk_total_bytes: u64,
    cpu_utilization_percent: f64,
    cpu_watts: f64,
    gpu_watts: f64,
) -> i32 {
    guard(|| {
        manual_clock(handle)?;
        let provider = ScriptedTelemetry::new()
            .system(SystemSample {
                memory_used_bytes,
                memory_total_bytes,
                disk_used_bytes,
                disk_total_bytes,
                gpu_memory_used_bytes: None,
                gpu_utilization_percent: None,
                cpu_utilization_percent,
            })
            .power_schedule(vec![PowerStep {
                from_ms: EpochMillis::MIN,
                cpu_watts,
                gpu_watts: (gpu_watts >= 0.0).then_some(gpu_watts),
                ram_watts: None,
            }]);
        with_run(handle, |run| run.set_telemetry(provider))
    })
}

/// # Safety
/// `key` and `value` are NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn provtrack_log_param_str(handle: u64, key: *const c_char, value: *const c_char) -> i32 {
    guard(|| {
        let (key, value) = (string(key, "key")?, string(value, "value")?);
        with_run(handle, |r| r.log_param(&key, value))
    })
}

/// # Safety
/// `key` is NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn provtrack_log_param_long(handle: u64, key: *const c_char, value: i64) -> i32 {
    guard(|| {
        let key = string(key, "key")?;
        with_run(handle, |r| r.log_param(&key, value))
    })
}

/// # Safety
/// `key` is NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn provtrack_log_param_double(handle: u64, key: *const c_char, value: f64) -> i32 {
    guard(|| {
        let key = string(key, "key")?;
        with_run(handle, |r| r.log_param(&key, value))
    })
}

/// # Safety
/// `key` is NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn provtrack_log_param_bool(handle: u64, key: *const c_char, value: i32) -> i32 {
    guard(|| {
        let key = string(key, "key")?;
        with_run(handle, |r| r.log_param(&key, value != 0))
    })
}

/// # Safety
/// `key` and `context` are NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn provtrack_log_metric(
    handle: u64,
    key: *const c_char,
    value: f64,
    context: *const c_char,
    step: u64,
) -> i32 {
    guard(|| {
        let (key, ctx) = (string(key, "key")?, self::context(context)?);
        with_run(handle, |r| r.log_metric(&key, value, ctx, step))
    })
}

/// # Safety
/// `context` is NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn provtrack_log_system_metrics(handle: u64, context: *const c_char, step: u64) -> i32 {
    guard(|| {
        let ctx = self::context(context)?;
        with_run(handle, |r| r.log_system_metrics(ctx, step))
    })
}

/// # Safety
/// `context` is NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn provtrack_log_carbon_metrics(handle: u64, context: *const c_char, step: u64) -> i32 {
    guard(|| {
        let ctx = self::context(context)?;
        with_run(handle, |r| r.log_carbon_metrics(ctx, step))
    })
}

#[no_mangle]
pub extern "C" fn provtrack_set_carbon_intensity(handle: u64, g_per_kwh: f64) -> i32 {
    guard(|| with_run(handle, |r| r.set_carbon_intensity(g_per_kwh)))
}

/// Copy a file into the run. `context` may be null; negative `step` means
/// none; `timestamp_ms` equal to `INT64_MIN` means "now".
///
/// # Safety
/// `label` and `path` are NUL-terminated; `context` is null or NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn provtrack_log_artifact(
    handle: u64,
    label: *const c_char,
    path: *const c_char,
    context: *const c_char,
    step: i64,
    timestamp_ms: i64,
) -> i32 {
    guard(|| {
        let (label, path, ctx) = (string(label, "label")?, string(path, "path")?, optional_context(context)?);
        let ts = (timestamp_ms != i64::MIN).then_some(timestamp_ms);
        with_run(handle, |r| r.log_artifact(&label, &path, ctx, optional_u64(step), ts).map(|_| ()))
    })
}

/// # Safety
/// `label` is NUL-terminated; `blob` points to `len` readable bytes (or is
/// null with `len` 0); `context` is null or NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn provtrack_save_model_version(
    handle: u64,
    label: *const c_char,
    blob: *const u8,
    len: usize,
    context: *const c_char,
    step: u64,
) -> i32 {
    guard(|| {
        let label = string(label, "label")?;
        let ctx = optional_context(context)?;
        let bytes: &[u8] = match (blob.is_null(), len) {
            (_, 0) => &[],
            (true, _) => return Err(Error::InvalidArgument("blob must not be null".into())),
            (false, n) => std::slice::from_raw_parts(blob, n),
        };
        with_run(handle, |r| r.save_model_version(&label, bytes, ctx, step, None).map(|_| ()))
    })
}

/// `descriptor_json` holds `total_parameters`, `memory_bytes`, optional
/// `gradient_memory_bytes` and `layers` (objects with `name`, `kind`,
/// `input_shape`, `output_shape`, `dtype`).
///
/// # Safety
/// `label` and `descriptor_json` are NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn provtrack_log_model(
    handle: u64,
    label: *const c_char,
    descriptor_json: *const c_char,
    log_as_artifact: i32,
) -> i32 {
    guard(|| {
        let label = string(label, "label")?;
        let json = string(descriptor_json, "descriptor_json")?;
        let descriptor: ModelDescriptor = serde_json::from_str(&json).map_err(|e| Error::Parse {
            offset: None,
            message: format!("model descriptor: {e}"),
        })?;
        with_run(handle, |r| r.log_model(&label, descriptor, log_as_artifact != 0))
    })
}

/// Negative counts mean unknown; `source` may be null.
///
/// # Safety
/// `label` is NUL-terminated; `source` is null or NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn provtrack_log_dataset(
    handle: u64,
    label: *const c_char,
    num_samples: i64,
    batch_size: i64,
    num_batches: i64,
    source: *const c_char,
) -> i32 {
    guard(|| {
        let descriptor = DatasetDescriptor {
            label: string(label, "label")?,
            num_samples: optional_u64(num_samples),
            batch_size: optional_u64(batch_size),
            num_batches: optional_u64(num_batches),
            source: optional_string(source, "source")?,
        };
        with_run(handle, |r| r.log_dataset(descriptor))
    })
}

/// # Safety
/// `label` and `context` are NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn provtrack_log_current_execution_time(
    handle: u64,
    label: *const c_char,
    context: *const c_char,
    step: u64,
) -> i32 {
    guard(|| {
        let (label, ctx) = (string(label, "label")?, self::context(context)?);
        with_run(handle, |r| r.log_current_execution_time(&label, ctx, step))
    })
}

#[no_mangle]
pub extern "C" fn provtrack_end_run(handle: u64, create_graph: i32, create_svg: i32) -> i32 {
    guard(|| with_run(handle, |r| r.end_run(create_graph != 0, create_svg != 0).map(|_| ())))
}

/// 1 when the run accepts directives, 0 after `end_run`; writes to `out_active`.
///
/// # Safety
/// `out_active` is writable.
#[no_mangle]
pub unsafe extern "C" fn provtrack_is_active(handle: u64, out_active: *mut i32) -> i32 {
    guard(|| {
        if out_active.is_null() {
            return Err(Error::InvalidArgument("out_active must not be null".into()));
        }
        let active = with_run(handle, |r| Ok(r.is_active()))?;
        *out_active = i32::from(active);
        Ok(())
    })
}

/// Copy `text` plus a NUL into `buf` when it fits. Returns the full length
/// without the NUL, so callers can size a second attempt.
unsafe fn copy_out(text: &str, buf: *mut c_char, cap: usize) -> usize {
    let bytes = text.as_bytes();
    if !buf.is_null() && cap > bytes.len() {
        std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast::<u8>(), bytes.len());
        *buf.add(bytes.len()) = 0;
    }
    bytes.len()
}

/// Run directory path into `buf`; `out_len` receives its byte length.
///
/// # Safety
/// `buf` is null or has `cap` writable bytes; `out_len` is null or writable.
#[no_mangle]
pub unsafe extern "C" fn provtrack_run_dir(handle: u64, buf: *mut c_char, cap: usize, out_len: *mut usize) -> i32 {
    guard(|| {
        let dir = with_run(handle, |r| Ok(r.run_dir().to_string_lossy().into_owned()))?;
        let n = copy_out(&dir, buf, cap);
        if !out_len.is_null() {
            *out_len = n;
        }
        Ok(())
    })
}

/// Forget a handle. Ends nothing: an active run released here stays open
/// until its last reference is gone, after which a new run may start.
#[no_mangle]
pub extern "C" fn provtrack_release(handle: u64) -> i32 {
    guard(|| {
        sessions()
            .lock()
            .unwrap_or_else(|p| p.into_inner())
            .remove(&handle)
            .map(|_| ())
            .ok_or_else(|| Error::IllegalState(format!("unknown run handle {handle}")))
    })
}

/// Message of the last failure on this thread; same sizing rules as
/// [`provtrack_run_dir`]. Returns the message length.
///
/// # Safety
/// `buf` is null or has `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn provtrack_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| copy_out(&e.borrow(), buf, cap))
}
