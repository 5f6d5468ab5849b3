#ifndef PHGAS_H
#define PHGAS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Keep the compressor models declared in the network file.
#define PHGAS_MODEL_DECLARED -1

// Replace every compressor by a junction.
#define PHGAS_MODEL_NONE 0

#define PHGAS_MODEL_FC_AV 1

#define PHGAS_MODEL_FC_AM 2

#define PHGAS_MODEL_FP_AV 3

#define PHGAS_MODEL_FP_AM 4

// Result codes. `Ok` is zero; everything else is an error.
typedef enum phgas_status {
  PHGAS_STATUS_OK = 0,
  PHGAS_STATUS_NULL_POINTER = 1,
  PHGAS_STATUS_INVALID_UTF8 = 2,
  // Malformed or inconsistent input file.
  PHGAS_STATUS_PARSE = 3,
  // Bad topology, parameter or option.
  PHGAS_STATUS_INVALID = 4,
  // Newton failure or a state the model cannot represent.
  PHGAS_STATUS_SOLVER = 5,
  PHGAS_STATUS_IO = 6,
  PHGAS_STATUS_OUT_OF_RANGE = 7,
  // A Rust panic was caught at the boundary.
  PHGAS_STATUS_INTERNAL = 8,
} phgas_status;

// Parsed network description.
typedef struct phgas_network phgas_network;

// Parsed scenario, bound to the network it was checked against.
typedef struct phgas_scenario phgas_scenario;

// Simulation output: one row per record, columns as in the CSV output.
typedef struct phgas_timeseries phgas_timeseries;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *phgas_version(void);

// Message of the last failed call on this thread, empty after a success.
// The pointer stays valid until the next call into the library on this thread.
const char *phgas_last_error_message(void);

// Isothermal sound speed `c = √(z Rs T)` in m/s.
//
// # Safety
// `out` must be null or point to writable memory for one `double`.
enum phgas_status phgas_sound_speed(double specific_gas_constant,
                                    double temperature,
                                    double compressibility,
                                    double *out);

// Parses a network document. On success `*out` owns a new handle.
//
// # Safety
// `json` must be null or a NUL-terminated string; `out` must be null or writable.
enum phgas_status phgas_network_from_json(const char *json, struct phgas_network **out);

// # Safety
// `network` must be null or a handle from `phgas_network_from_json` not yet freed.
void phgas_network_free(struct phgas_network *network);

// Parses a scenario document and checks it against `network`.
//
// # Safety
// Pointers must be null or valid as described for the other constructors.
enum phgas_status phgas_scenario_from_json(const struct phgas_network *network,
                                           const char *json,
                                           struct phgas_scenario **out);

// # Safety
// `scenario` must be null or a live handle.
void phgas_scenario_free(struct phgas_scenario *scenario);

// Runs the transient simulation.
//
// `model` is one of the `PHGAS_MODEL_*` codes, `cells` overrides the cells
// per pipe when positive and `dt` overrides the scenario step when positive.
//
// # Safety
// Handles must be live; `out` must be null or writable.
enum phgas_status phgas_simulate(const struct phgas_network *network,
                                 const struct phgas_scenario *scenario,
                                 int32_t model,
                                 uint32_t cells,
                                 double dt,
                                 struct phgas_timeseries **out);

// Solves the steady state for the inputs at t = 0 (a one-row series).
//
// # Safety
// As for [`phgas_simulate`].
enum phgas_status phgas_steady(const struct phgas_network *network,
                               const struct phgas_scenario *scenario,
                               int32_t model,
                               uint32_t cells,
                               struct phgas_timeseries **out);

// # Safety
// `series` must be null or a live handle.
void phgas_timeseries_free(struct phgas_timeseries *series);

// Number of records. Returns 0 for a null handle.
//
// # Safety
// `series` must be null or a live handle.
size_t phgas_timeseries_rows(const struct phgas_timeseries *series);

// Number of columns, time included. Returns 0 for a null handle.
//
// # Safety
// `series` must be null or a live handle.
size_t phgas_timeseries_cols(const struct phgas_timeseries *series);

// Column name, owned by the handle, or null when out of range.
//
// # Safety
// `series` must be null or a live handle.
const char *phgas_timeseries_column_name(const struct phgas_timeseries *series, size_t col);

// # Safety
// `series` must be a live handle; `out` must be writable.
enum phgas_status phgas_timeseries_value(const struct phgas_timeseries *series,
                                         size_t row,
                                         size_t col,
                                         double *out);

// Writes the series as CSV to `path`.
//
// # Safety
// `series` must be a live handle; `path` a NUL-terminated string.
enum phgas_status phgas_timeseries_write_csv(const struct phgas_timeseries *series,
                                             const char *path);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PHGAS_H */
