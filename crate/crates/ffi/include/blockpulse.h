#ifndef BLOCKPULSE_H
#define BLOCKPULSE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum BpStatus {
  BP_STATUS_OK = 0,
  BP_STATUS_NULL_POINTER = 1,
  BP_STATUS_INVALID_ARGUMENT = 2,
  BP_STATUS_PARSE = 3,
  BP_STATUS_UNORDERED = 4,
  BP_STATUS_INSUFFICIENT = 5,
  BP_STATUS_CONFIG = 6,
  BP_STATUS_MISSING_INPUT = 7,
  BP_STATUS_IO = 8,
  BP_STATUS_PANIC = 9,
} BpStatus;

typedef enum BpDirection {
  BP_DIRECTION_DOWN = 0,
  BP_DIRECTION_UP = 1,
} BpDirection;

typedef struct BpConfig BpConfig;

typedef struct BpDecomposition BpDecomposition;

typedef struct BpEvents BpEvents;

/**
 * Active-address counts of one /24.
 */
typedef struct BpSeries BpSeries;

typedef struct BpClassification {
  bool responsive;
  bool diurnal;
  bool wide_swing;
  bool change_sensitive;
  double diurnal_score;
  uint32_t max_daily_swing;
  bool insufficient_data;
} BpClassification;

typedef struct BpCusumEvent {
  enum BpDirection direction;
  size_t onset;
  size_t peak;
  size_t end;
  double magnitude;
  double reference;
} BpCusumEvent;

typedef struct BpGridCell {
  int16_t lat;
  int16_t lon;
} BpGridCell;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *bp_version(void);

/**
 * Copies the calling thread's last error message into `buf` (truncated and
 * NUL-terminated when `cap > 0`). Returns the full message length.
 *
 * # Safety
 * `buf` must be null or point to `cap` writable bytes.
 */
size_t bp_last_error_message(char *buf, size_t cap);

/**
 * Builds a series from `len` strictly increasing sample times and counts.
 * `prefix` is the block's upper 24 bits.
 *
 * # Safety
 * `timestamps` and `counts` must each hold `len` elements; `out` must be
 * writable.
 */
enum BpStatus bp_series_new(uint32_t prefix,
                            size_t ever_active_size,
                            int64_t interval,
                            const int64_t *timestamps,
                            const uint32_t *counts,
                            size_t len,
                            struct BpSeries **out_series);

/**
 * # Safety
 * `series` must come from [`bp_series_new`] and not be used afterwards.
 */
void bp_series_free(struct BpSeries *series);

/**
 * Classifies a series with the default thresholds.
 *
 * # Safety
 * `series` must be a live handle and `result` writable.
 */
enum BpStatus bp_classify(const struct BpSeries *series, struct BpClassification *result);

/**
 * Seasonal-trend decomposition with the default windows for `period`.
 *
 * # Safety
 * `values` must hold `len` elements and `out_parts` be writable.
 */
enum BpStatus bp_stl(const double *values,
                     size_t len,
                     size_t period,
                     struct BpDecomposition **out_parts);

/**
 * Number of samples in each component.
 *
 * # Safety
 * `parts` must be a live handle or null.
 */
size_t bp_decomposition_len(const struct BpDecomposition *parts);

/**
 * # Safety
 * `parts` must be a live handle or null. The pointer is valid until the
 * handle is freed.
 */
const double *bp_decomposition_trend(const struct BpDecomposition *parts);

/**
 * # Safety
 * As [`bp_decomposition_trend`].
 */
const double *bp_decomposition_seasonal(const struct BpDecomposition *parts);

/**
 * # Safety
 * As [`bp_decomposition_trend`].
 */
const double *bp_decomposition_residual(const struct BpDecomposition *parts);

/**
 * # Safety
 * `parts` must come from [`bp_stl`] and not be used afterwards.
 */
void bp_decomposition_free(struct BpDecomposition *parts);

/**
 * Two-sided CUSUM over `x` with threshold `h` and slack `k`.
 *
 * # Safety
 * `x` must hold `len` elements and `out_events` be writable.
 */
enum BpStatus bp_cusum(const double *x,
                       size_t len,
                       double h,
                       double k,
                       struct BpEvents **out_events);

/**
 * # Safety
 * `events` must be a live handle or null.
 */
size_t bp_events_len(const struct BpEvents *events);

/**
 * Copies event `index` into `event`.
 *
 * # Safety
 * `events` must be a live handle and `event` writable.
 */
enum BpStatus bp_events_get(const struct BpEvents *events,
                            size_t index,
                            struct BpCusumEvent *event);

/**
 * # Safety
 * `events` must come from [`bp_cusum`] and not be used afterwards.
 */
void bp_events_free(struct BpEvents *events);

/**
 * South-west corner of the 2 by 2 degree cell holding a coordinate.
 *
 * # Safety
 * `cell` must be writable.
 */
enum BpStatus bp_grid_cell(double lat, double lon, struct BpGridCell *cell);

/**
 * Loads a `key = value` pipeline config from a file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out_config` writable.
 */
enum BpStatus bp_config_load(const char *path, struct BpConfig **out_config);

/**
 * Replaces the output directory of a loaded config.
 *
 * # Safety
 * `config` must be a live handle and `output` a NUL-terminated string.
 */
enum BpStatus bp_config_set_output(struct BpConfig *config, const char *output);

/**
 * # Safety
 * `config` must come from [`bp_config_load`] and not be used afterwards.
 */
void bp_config_free(struct BpConfig *config);

/**
 * Runs one stage by name (`simulate`, `reconstruct`, `classify`, `detrend`,
 * `detect`, `aggregate` or `all`).
 *
 * # Safety
 * `config` must be a live handle and `stage` a NUL-terminated string.
 */
enum BpStatus bp_run_stage(const struct BpConfig *config, const char *stage);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BLOCKPULSE_H */
