#ifndef FEMTOQ_H
#define FEMTOQ_H

/* This file is generated by cbindgen from femtoq-ffi; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Status code returned by every fallible call.
 */
typedef enum FqStatus {
  FQ_STATUS_OK = 0,
  FQ_STATUS_NULL_ARGUMENT = 1,
  FQ_STATUS_INVALID_UTF8 = 2,
  FQ_STATUS_INVALID_ARGUMENT = 3,
  FQ_STATUS_RUNTIME_ERROR = 4,
  FQ_STATUS_IO_ERROR = 5,
} FqStatus;

/*
 Learning paradigm selector.
 */
typedef enum FqParadigm {
  FQ_PARADIGM_INDEPENDENT = 0,
  FQ_PARADIGM_COOPERATIVE = 1,
} FqParadigm;

/*
 Reward function selector.
 */
typedef enum FqRewardKind {
  FQ_REWARD_KIND_RF1 = 0,
  FQ_REWARD_KIND_RF2 = 1,
  FQ_REWARD_KIND_RF3 = 2,
} FqRewardKind;

/*
 Opaque episode configuration handle.
 */
typedef struct FqConfig FqConfig;

/*
 Opaque finished-episode handle.
 */
typedef struct FqTrace FqTrace;

/*
 Post-run metrics of one episode.
 */
typedef struct FqSummary {
  double aggregate_femto_capacity;
  double jain_index;
  double terminal_deviation;
  bool converged;
  uint64_t convergence_iteration;
  uint64_t shared_entries;
  uint64_t iterations;
  uint32_t n_femto;
  uint32_t n_sub;
} FqSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Returns the last error message of the calling thread as a newly
 allocated string (free with [`fq_string_free`]), or null if there was
 none.
 */
char *fq_last_error_message(void);

/*
 Frees a string allocated by this library.

 # Safety
 `text` must be a pointer previously returned by a `femtoq_ffi` call
 and not yet freed.
 */
void fq_string_free(char *text);

/*
 Library version as a static string; do not free.
 */
const char *fq_version(void);

/*
 Creates a configuration with the default experiment values.

 # Safety
 `out` must be a valid pointer.
 */
enum FqStatus fq_config_new(struct FqConfig **out);

/*
 Parses a configuration from TOML text (same schema as the CLI config
 file); unknown keys are rejected.

 # Safety
 `text` must be a valid NUL-terminated string; `out` must be a valid
 pointer.
 */
enum FqStatus fq_config_from_toml(const char *text, struct FqConfig **out);

/*
 Serializes a configuration back to TOML (free with [`fq_string_free`]).

 # Safety
 `config` must be a live handle; `out` must be a valid pointer.
 */
enum FqStatus fq_config_to_toml(const struct FqConfig *config, char **out);

/*
 Selects independent or cooperative learning.

 # Safety
 `config` must be a live handle from this library.
 */
enum FqStatus fq_config_set_paradigm(struct FqConfig *config, enum FqParadigm paradigm);

/*
 Selects the reward function. `k` is only meaningful for `Rf2`;
 `target_capacity` is the macro QoS target in bits/sec/Hz.

 # Safety
 `config` must be a live handle from this library.
 */
enum FqStatus fq_config_set_reward(struct FqConfig *config,
                                   enum FqRewardKind kind,
                                   double target_capacity,
                                   double k);

/*
 Destroys a configuration handle.

 # Safety
 `config` must be a handle from this library, not yet freed.
 */
void fq_config_free(struct FqConfig *config);

/*
 Runs one full episode; on success `out` receives a trace handle.

 # Safety
 `config` must be a live handle; `out` must be a valid pointer.
 */
enum FqStatus fq_run_episode(const struct FqConfig *config, struct FqTrace **out);

/*
 Copies the trace's summary metrics into `out`.

 # Safety
 `trace` must be a live handle; `out` must point to writable memory.
 */
enum FqStatus fq_trace_summary(const struct FqTrace *trace, struct FqSummary *out);

/*
 Returns the trace summary as a newly allocated JSON string (free with
 [`fq_string_free`]).

 # Safety
 `trace` must be a live handle; `out` must be a valid pointer.
 */
enum FqStatus fq_trace_summary_json(const struct FqTrace *trace, char **out);

/*
 Writes the per-step trace CSV to `path`.

 # Safety
 `trace` must be a live handle; `path` a valid NUL-terminated string.
 */
enum FqStatus fq_trace_write_csv(const struct FqTrace *trace, const char *path);

/*
 Destroys a trace handle.

 # Safety
 `trace` must be a handle from this library, not yet freed.
 */
void fq_trace_free(struct FqTrace *trace);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FEMTOQ_H */
