#ifndef NOCSIM_H
#define NOCSIM_H

/* Generated from the nocsim-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Success.
#define NOCSIM_OK 0

// A required pointer argument was null.
#define NOCSIM_ERR_NULL -1

// The scenario failed parsing or validation.
#define NOCSIM_ERR_VALIDATION -2

// The run tripped the no-progress watchdog.
#define NOCSIM_ERR_WATCHDOG -3

// A file could not be read.
#define NOCSIM_ERR_IO -4

// The call is not valid in the handle's current state (e.g. reading
// metrics before a run, or an internal failure captured at the boundary).
#define NOCSIM_ERR_STATE -5

// One configured scenario and, after `nocsim_run`, its metrics.
typedef struct NocSim NocSim;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Parses scenario config text into a new handle, or returns null (see
// `nocsim_last_error_message`). Relative trace paths resolve against the
// current directory.
//
// # Safety
// `text` must point to a NUL-terminated string.
struct NocSim *nocsim_new_from_str(const char *text);

// Loads a scenario config file into a new handle, or returns null (see
// `nocsim_last_error_message`).
//
// # Safety
// `path` must point to a NUL-terminated string.
struct NocSim *nocsim_new_from_file(const char *path);

// Overrides the scenario's RNG seed; takes effect at the next `nocsim_run`.
//
// # Safety
// `sim` must be a live handle from a `nocsim_new_*` call.
int32_t nocsim_set_seed(struct NocSim *sim, uint64_t seed);

// Runs the scenario to completion and stores its metrics on the handle,
// replacing any previous run's.
//
// # Safety
// `sim` must be a live handle from a `nocsim_new_*` call.
int32_t nocsim_run(struct NocSim *sim);

// Packets created inside the measurement window.
//
// # Safety
// `sim` must be a live handle; `out` must point to writable memory.
int32_t nocsim_injected(const struct NocSim *sim, uint64_t *out);

// Measured packets delivered to their destination.
//
// # Safety
// `sim` must be a live handle; `out` must point to writable memory.
int32_t nocsim_delivered(const struct NocSim *sim, uint64_t *out);

// Measured packets lost to faulty links.
//
// # Safety
// `sim` must be a live handle; `out` must point to writable memory.
int32_t nocsim_dropped(const struct NocSim *sim, uint64_t *out);

// Average packet latency in cycles over delivered measured packets.
//
// # Safety
// `sim` must be a live handle; `out` must point to writable memory.
int32_t nocsim_apl(const struct NocSim *sim, double *out);

// Ejected flits per node per cycle inside the window.
//
// # Safety
// `sim` must be a live handle; `out` must point to writable memory.
int32_t nocsim_throughput(const struct NocSim *sim, double *out);

// Total energy charged to window activity.
//
// # Safety
// `sim` must be a live handle; `out` must point to writable memory.
int32_t nocsim_energy(const struct NocSim *sim, double *out);

// Power-latency product.
//
// # Safety
// `sim` must be a live handle; `out` must point to writable memory.
int32_t nocsim_plp(const struct NocSim *sim, double *out);

// Dropped / injected; 0 when nothing was injected.
//
// # Safety
// `sim` must be a live handle; `out` must point to writable memory.
int32_t nocsim_drop_ratio(const struct NocSim *sim, double *out);

// Copies the run's metrics as a two-line CSV (header, row) into `*out`.
// The string belongs to the caller: release it with `nocsim_string_free`.
//
// # Safety
// `sim` must be a live handle; `out` must point to writable memory.
int32_t nocsim_metrics_csv(const struct NocSim *sim, char **out);

// Returns the most recent failure message on this thread as a caller-owned
// string (release with `nocsim_string_free`), or null if none was recorded.
char *nocsim_last_error_message(void);

// Releases a string returned by this library. Null is a no-op.
//
// # Safety
// `s` must have come from this library and not been freed already.
void nocsim_string_free(char *s);

// Releases a handle. Null is a no-op.
//
// # Safety
// `sim` must have come from a `nocsim_new_*` call and not been freed already.
void nocsim_free(struct NocSim *sim);

// Library version as a static NUL-terminated string; do not free.
const char *nocsim_version(void);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* NOCSIM_H */
