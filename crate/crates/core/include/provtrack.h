/* C interface of the provtrack library (built as a cdylib).
 *
 * Every function except provtrack_last_error_message returns a status:
 * PROVTRACK_OK or one of the PROVTRACK_E_* codes below. After a failure,
 * provtrack_last_error_message returns the message for the calling thread.
 *
 * Strings are NUL-terminated UTF-8. Arguments documented as "nullable" may
 * be NULL; all others must not.
 */
#ifndef PROVTRACK_H
#define PROVTRACK_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#define PROVTRACK_OK                0
#define PROVTRACK_E_INVALID_ARGUMENT 1
#define PROVTRACK_E_DUPLICATE_RECORD 2
#define PROVTRACK_E_DUPLICATE_PARAM  3
#define PROVTRACK_E_ILLEGAL_STATE    4
#define PROVTRACK_E_IO               5
#define PROVTRACK_E_PARSE            6
#define PROVTRACK_E_INVALID_DOCUMENT 7
#define PROVTRACK_E_NOT_FOUND        8
#define PROVTRACK_E_EXPORT           9
#define PROVTRACK_E_TOOL_UNAVAILABLE 10
#define PROVTRACK_E_INTERNAL         99

/* experiment_name, save_dir: nullable (defaults "default", "prov").
 * save_after_n_logs: 0 selects the default (100).
 * rank: negative resolves from launcher environment variables. */
int32_t provtrack_start_run(const char *user_namespace, const char *experiment_name,
                            const char *save_dir, int32_t collect_all_processes,
                            uint64_t save_after_n_logs, int64_t rank, uint64_t *out_handle);

/* Reproducible variant: manual clock at start_ms, empty environment, no
 * telemetry readings until provtrack_script_telemetry is called. */
int32_t provtrack_start_run_deterministic(const char *user_namespace, const char *experiment_name,
                                          const char *save_dir, int32_t collect_all_processes,
                                          uint64_t save_after_n_logs, int64_t rank,
                                          int64_t start_ms, uint64_t *out_handle);

/* Deterministic runs only. */
int32_t provtrack_set_clock_ms(uint64_t handle, int64_t ms);
int32_t provtrack_advance_clock_ms(uint64_t handle, int64_t delta_ms);
/* gpu_watts < 0 means no GPU. */
int32_t provtrack_script_telemetry(uint64_t handle, uint64_t memory_used_bytes,
                                   uint64_t memory_total_bytes, uint64_t disk_used_bytes,
                                   uint64_t disk_total_bytes, double cpu_utilization_percent,
                                   double cpu_watts, double gpu_watts);

int32_t provtrack_log_param_str(uint64_t handle, const char *key, const char *value);
int32_t provtrack_log_param_long(uint64_t handle, const char *key, int64_t value);
int32_t provtrack_log_param_double(uint64_t handle, const char *key, double value);
int32_t provtrack_log_param_bool(uint64_t handle, const char *key, int32_t value);

/* context: "training", "validation", "evaluation" or a custom label. */
int32_t provtrack_log_metric(uint64_t handle, const char *key, double value,
                             const char *context, uint64_t step);
int32_t provtrack_log_system_metrics(uint64_t handle, const char *context, uint64_t step);
int32_t provtrack_log_carbon_metrics(uint64_t handle, const char *context, uint64_t step);
int32_t provtrack_set_carbon_intensity(uint64_t handle, double g_per_kwh);

/* context: nullable. step < 0: none. timestamp_ms == INT64_MIN: now. */
int32_t provtrack_log_artifact(uint64_t handle, const char *label, const char *path,
                               const char *context, int64_t step, int64_t timestamp_ms);
/* blob may be NULL when len is 0. context: nullable. */
int32_t provtrack_save_model_version(uint64_t handle, const char *label, const uint8_t *blob,
                                     size_t len, const char *context, uint64_t step);
/* descriptor_json: {"total_parameters":N,"memory_bytes":N,"gradient_memory_bytes":N|null,
 *                   "layers":[{"name","kind","input_shape","output_shape","dtype"}...]} */
int32_t provtrack_log_model(uint64_t handle, const char *label, const char *descriptor_json,
                            int32_t log_as_artifact);
/* Negative counts: unknown. source: nullable. */
int32_t provtrack_log_dataset(uint64_t handle, const char *label, int64_t num_samples,
                              int64_t batch_size, int64_t num_batches, const char *source);
int32_t provtrack_log_current_execution_time(uint64_t handle, const char *label,
                                             const char *context, uint64_t step);

int32_t provtrack_end_run(uint64_t handle, int32_t create_graph, int32_t create_svg);
int32_t provtrack_is_active(uint64_t handle, int32_t *out_active);

/* Writes the path plus NUL into buf when cap exceeds its length; out_len
 * (nullable) receives the length without NUL. buf is nullable. */
int32_t provtrack_run_dir(uint64_t handle, char *buf, size_t cap, size_t *out_len);
int32_t provtrack_release(uint64_t handle);

/* Same buffer rules; returns the message length. */
size_t provtrack_last_error_message(char *buf, size_t cap);

#ifdef __cplusplus
}
#endif

#endif
