#ifndef MEMDIE_H
#define MEMDIE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

#define MEMDIE_MODE_DIGITAL 0

#define MEMDIE_MODE_ANALOG 1

#define MEMDIE_PAD_A 0

#define MEMDIE_PAD_B 1

/**
 * Result code of every call. Values match the protocol `ERR` codes where
 * one exists.
 */
typedef enum MemdieStatus {
  MEMDIE_STATUS_OK = 0,
  MEMDIE_STATUS_PARSE = 1,
  MEMDIE_STATUS_MODE = 2,
  MEMDIE_STATUS_ADDR = 3,
  MEMDIE_STATUS_STATE = 4,
  MEMDIE_STATUS_RANGE = 5,
  MEMDIE_STATUS_INVARIANT = 6,
  MEMDIE_STATUS_IO = 7,
  MEMDIE_STATUS_NULL_POINTER = 8,
  MEMDIE_STATUS_INVALID_UTF8 = 9,
  MEMDIE_STATUS_PANIC = 10,
} MemdieStatus;

/**
 * Opaque simulator handle.
 */
typedef struct MemdieSim MemdieSim;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Creates a simulator. `config_toml` may be null for defaults; otherwise
 * it holds `dotted.key = value` lines. On success `*out` owns the handle.
 *
 * # Safety
 * `config_toml` must be null or a NUL-terminated string; `out` must be
 * valid for writes.
 */
enum MemdieStatus memdie_sim_new(uint64_t seed, const char *config_toml, struct MemdieSim **out);

/**
 * # Safety
 * `sim` must be null or a handle from [`memdie_sim_new`] not freed yet.
 */
void memdie_sim_free(struct MemdieSim *sim);

/**
 * Message of the last failed call, empty after a successful one. Valid
 * until the next call on `sim`.
 *
 * # Safety
 * `sim` must be null or a live handle.
 */
const char *memdie_last_error(const struct MemdieSim *sim);

/**
 * `mode` is `MEMDIE_MODE_DIGITAL` or `MEMDIE_MODE_ANALOG`.
 *
 * # Safety
 * `sim` must be a live handle.
 */
enum MemdieStatus memdie_set_mode(struct MemdieSim *sim, uint32_t mode);

/**
 * # Safety
 * `sim` must be a live handle.
 */
enum MemdieStatus memdie_form_cell(struct MemdieSim *sim, size_t row, size_t col);

/**
 * Forms every unformed cell; `*formed` receives the number of formed
 * devices afterwards.
 *
 * # Safety
 * `sim` must be a live handle, `formed` valid for writes.
 */
enum MemdieStatus memdie_form_all(struct MemdieSim *sim, size_t *formed);

/**
 * # Safety
 * `sim` must be a live handle.
 */
enum MemdieStatus memdie_write_bit(struct MemdieSim *sim, size_t row, size_t col, bool bit);

/**
 * # Safety
 * `sim` must be a live handle, `bit` valid for writes.
 */
enum MemdieStatus memdie_read_bit(struct MemdieSim *sim, size_t row, size_t col, bool *bit);

/**
 * Sense with logic input `input`; `*result` is XNOR(stored, input).
 *
 * # Safety
 * `sim` must be a live handle, `result` valid for writes.
 */
enum MemdieStatus memdie_xnor(struct MemdieSim *sim,
                              size_t row,
                              size_t col,
                              bool input,
                              bool *result);

/**
 * Loads the routing shift register from hex digits, first bit most
 * significant.
 *
 * # Safety
 * `sim` must be a live handle, `hex` a NUL-terminated string.
 */
enum MemdieStatus memdie_load_shift_register(struct MemdieSim *sim, const char *hex);

/**
 * Drives `pad` with `n_segments` segments (`levels[i]` volts for
 * `durations[i]` seconds), sampling the pad current every
 * `sample_interval` seconds into `times` / `currents`.
 *
 * `*n_samples` always receives the number of samples the waveform
 * produces. If it exceeds `capacity` the call fails with
 * `MEMDIE_STATUS_RANGE` before touching the die.
 *
 * # Safety
 * `sim` must be a live handle; `levels` and `durations` must hold
 * `n_segments` values; `times` and `currents` must have room for
 * `capacity` values; `n_samples` valid for writes.
 */
enum MemdieStatus memdie_apply_waveform(struct MemdieSim *sim,
                                        uint32_t pad_code,
                                        const double *levels,
                                        const double *durations,
                                        size_t n_segments,
                                        double sample_interval,
                                        double *times,
                                        double *currents,
                                        size_t capacity,
                                        size_t *n_samples);

/**
 * Resistance of the single device bridged to the pad, averaged over
 * `n_avg` reads at `v_meas` volts.
 *
 * # Safety
 * `sim` must be a live handle, `ohms` valid for writes.
 */
enum MemdieStatus memdie_measure_resistance(struct MemdieSim *sim,
                                            uint32_t pad_code,
                                            double v_meas,
                                            size_t n_avg,
                                            double *ohms);

/**
 * Executes one bench-protocol line and returns the full reply text (which
 * may itself be `ERR ...`). The status reflects only transport problems.
 * Free `*reply` with [`memdie_string_free`].
 *
 * # Safety
 * `sim` must be a live handle, `line` a NUL-terminated string and `reply`
 * valid for writes.
 */
enum MemdieStatus memdie_command(struct MemdieSim *sim, const char *line, char **reply);

/**
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void memdie_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MEMDIE_H */
