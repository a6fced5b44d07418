#ifndef SSCN_H
#define SSCN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SscnStatus {
  SSCN_STATUS_OK = 0,
  SSCN_STATUS_NULL_POINTER = 1,
  SSCN_STATUS_INVALID_UTF8 = 2,
  SSCN_STATUS_INVALID_CONFIG = 3,
  SSCN_STATUS_PARSE = 4,
  SSCN_STATUS_INVALID_ARGUMENT = 5,
  SSCN_STATUS_INFEASIBLE = 6,
  SSCN_STATUS_TOO_LARGE = 7,
  SSCN_STATUS_IO = 8,
  SSCN_STATUS_OUT_OF_RANGE = 9,
  SSCN_STATUS_BUFFER_TOO_SMALL = 10,
  SSCN_STATUS_PANIC = 11,
} SscnStatus;

// Values accepted by the `kind` argument of [`sscn_baseline`].
typedef enum SscnBaseline {
  SSCN_BASELINE_RPD = 0,
  SSCN_BASELINE_MPK = 1,
} SscnBaseline;

typedef struct SscnResult SscnResult;

typedef struct SscnScenario SscnScenario;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *sscn_version(void);

// Copy the calling thread's last error message.
//
// # Safety
// `buf` must be null or valid for `cap` bytes; `out_len` null or writable.
enum SscnStatus sscn_last_error_message(char *buf, size_t cap, size_t *out_len);

// Draw a scenario. `config_toml` may be null for the default configuration.
//
// # Safety
// `config_toml` must be null or a NUL-terminated string; `out` writable.
enum SscnStatus sscn_scenario_generate(const char *config_toml, struct SscnScenario **out);

// Load a scenario previously exported with [`sscn_scenario_to_json`].
//
// # Safety
// `json` must be a NUL-terminated string; `out` writable.
enum SscnStatus sscn_scenario_from_json(const char *json, struct SscnScenario **out);

// # Safety
// `scn` must be null or a handle from this library not yet freed.
void sscn_scenario_free(struct SscnScenario *scn);

// Number of users, 0 for a null handle.
//
// # Safety
// `scn` must be null or a live handle.
size_t sscn_scenario_num_users(const struct SscnScenario *scn);

// Number of KBs, 0 for a null handle.
//
// # Safety
// `scn` must be null or a live handle.
size_t sscn_scenario_num_kbs(const struct SscnScenario *scn);

// # Safety
// `scn` must be a live handle; `buf`/`out_len` as for [`sscn_last_error_message`].
enum SscnStatus sscn_scenario_to_json(const struct SscnScenario *scn,
                                      char *buf,
                                      size_t cap,
                                      size_t *out_len);

// Run the dual solver. `solver_toml` may be null for default parameters.
//
// # Safety
// `scn` must be a live handle, `solver_toml` null or NUL-terminated, `out`
// writable.
enum SscnStatus sscn_solve(const struct SscnScenario *scn,
                           const char *solver_toml,
                           struct SscnResult **out);

// Run a comparison scheme; `kind` is an [`SscnBaseline`] value.
//
// # Safety
// `scn` must be a live handle and `out` writable.
enum SscnStatus sscn_baseline(const struct SscnScenario *scn,
                              uint32_t kind,
                              uint64_t seed,
                              struct SscnResult **out);

// # Safety
// `res` must be null or a handle from this library not yet freed.
void sscn_result_free(struct SscnResult *res);

// Network SST, NaN for a null handle.
//
// # Safety
// `res` must be null or a live handle.
double sscn_result_sst(const struct SscnResult *res);

// Mean SST over matched directed links, NaN for a null handle.
//
// # Safety
// `res` must be null or a live handle.
double sscn_result_mean_link_sst(const struct SscnResult *res);

// Mean queuing delay over matched directed links (inf if one is unstable).
//
// # Safety
// `res` must be null or a live handle.
double sscn_result_mean_link_delay(const struct SscnResult *res);

// Number of matched directed links.
//
// # Safety
// `res` must be null or a live handle.
size_t sscn_result_num_links(const struct SscnResult *res);

// 1 when the result has no structural, delay or SST violations, else 0.
//
// # Safety
// `res` must be null or a live handle.
int32_t sscn_result_is_feasible(const struct SscnResult *res);

// Partner of `user`, or -1 when unpaired.
//
// # Safety
// `res` must be a live handle and `out` writable.
enum SscnStatus sscn_result_partner(const struct SscnResult *res, size_t user, int64_t *out);

// Transmit power of `user` in watts.
//
// # Safety
// `res` must be a live handle and `out` writable.
enum SscnStatus sscn_result_power(const struct SscnResult *res, size_t user, double *out);

// Cache of `user` as a bit mask (bit k set when KB k is cached).
//
// # Safety
// `res` must be a live handle and `out` writable.
enum SscnStatus sscn_result_cache_bits(const struct SscnResult *res, size_t user, uint64_t *out);

// # Safety
// `res` must be a live handle; `buf`/`out_len` as for [`sscn_last_error_message`].
enum SscnStatus sscn_result_to_json(const struct SscnResult *res,
                                    char *buf,
                                    size_t cap,
                                    size_t *out_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SSCN_H */
