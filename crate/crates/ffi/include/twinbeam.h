#ifndef TWINBEAM_H
#define TWINBEAM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call. Values 2 to 4 match the CLI exit codes.
 */
typedef enum TbStatus {
  TB_STATUS_OK = 0,
  /**
   * A required pointer was null or a string was not UTF-8.
   */
  TB_STATUS_INVALID_ARGUMENT = 1,
  TB_STATUS_CONFIG = 2,
  /**
   * Optimization stopped without converging; outputs are still valid.
   */
  TB_STATUS_NON_CONVERGENCE = 3,
  TB_STATUS_IO = 4,
  /**
   * A numerical precondition failed.
   */
  TB_STATUS_NUMERIC = 5,
  /**
   * The caller's buffer is too small; the required length was written.
   */
  TB_STATUS_BUFFER_TOO_SMALL = 6,
  TB_STATUS_PANIC = 7,
} TbStatus;

/**
 * Run configuration: TOML text plus `key=value` overrides.
 */
typedef struct TbConfig TbConfig;

/**
 * Designed 8-bit hologram.
 */
typedef struct TbHologram TbHologram;

/**
 * Real map over camera-pixel displacements, row-major.
 */
typedef struct TbMap TbMap;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Version string of the library, static storage.
 */
const char *tb_version(void);

/**
 * Copies the calling thread's last error message (NUL-terminated, truncated
 * to fit) and returns the full message length without the terminator.
 *
 * # Safety
 * `buf` must be null or valid for `cap` bytes.
 */
size_t tb_last_error_message(char *buf, size_t cap);

/**
 * Parses a configuration; `toml` may be empty for all defaults.
 *
 * # Safety
 * `toml` must be a NUL-terminated string and `out` a valid pointer.
 */
enum TbStatus tb_config_new(const char *toml, struct TbConfig **out);

/**
 * Overrides one dotted key, e.g. `("synthesis.n_pairs", "200")`. The value
 * is read as TOML, falling back to a bare string. On failure the config is
 * left unchanged.
 *
 * # Safety
 * `cfg` must come from [`tb_config_new`]; `key` and `value` must be
 * NUL-terminated strings.
 */
enum TbStatus tb_config_set(struct TbConfig *cfg, const char *key, const char *value);

/**
 * Resolved configuration as TOML into a caller buffer (NUL-terminated).
 * `needed` receives the byte count including the terminator.
 *
 * # Safety
 * `cfg` must be valid; `buf` must be null or valid for `cap` bytes.
 */
enum TbStatus tb_config_to_toml(const struct TbConfig *cfg, char *buf, size_t cap, size_t *needed);

/**
 * # Safety
 * `cfg` must be null or come from [`tb_config_new`], and not be used after.
 */
void tb_config_free(struct TbConfig *cfg);

/**
 * Designs the hologram for the configured target. Returns
 * `TB_STATUS_NON_CONVERGENCE` with a usable hologram when the search hit its
 * iteration budget or a failed line search.
 *
 * # Safety
 * `cfg` must be valid and `out` a valid pointer.
 */
enum TbStatus tb_optimize(const struct TbConfig *cfg, struct TbHologram **out);

/**
 * Grid edge of the hologram.
 *
 * # Safety
 * `holo` must be valid.
 */
size_t tb_hologram_size(const struct TbHologram *holo);

/**
 * Signal overlap reached by the optimizer.
 *
 * # Safety
 * `holo` must be valid.
 */
double tb_hologram_overlap(const struct TbHologram *holo);

/**
 * Whether the optimizer converged.
 *
 * # Safety
 * `holo` must be valid.
 */
bool tb_hologram_converged(const struct TbHologram *holo);

/**
 * Copies the `n × n` 8-bit levels, row-major.
 *
 * # Safety
 * `holo` must be valid; `buf` must be null or valid for `cap` bytes.
 */
enum TbStatus tb_hologram_levels(const struct TbHologram *holo,
                                 uint8_t *buf,
                                 size_t cap,
                                 size_t *needed);

/**
 * # Safety
 * `holo` must be null or come from [`tb_optimize`], and not be used after.
 */
void tb_hologram_free(struct TbHologram *holo);

/**
 * Analytic cross-correlation of a hologram at camera pitch.
 *
 * # Safety
 * `cfg` and `holo` must be valid and `out` a valid pointer.
 */
enum TbStatus tb_predict(const struct TbConfig *cfg,
                         const struct TbHologram *holo,
                         struct TbMap **out);

/**
 * Synthesizes the configured number of frame pairs in memory and returns
 * the normalized cross-correlation map. `fidelity` (optional) receives its
 * agreement with the configured target.
 *
 * # Safety
 * `cfg` and `holo` must be valid, `out` a valid pointer, `fidelity` null or
 * valid.
 */
enum TbStatus tb_synthesize_decode(const struct TbConfig *cfg,
                                   const struct TbHologram *holo,
                                   struct TbMap **out,
                                   double *fidelity);

/**
 * Map edges; both odd.
 *
 * # Safety
 * `map` must be valid; `rows` and `cols` valid pointers.
 */
enum TbStatus tb_map_dims(const struct TbMap *map, size_t *rows, size_t *cols);

/**
 * Copies the map values, row-major, center sample at zero displacement.
 *
 * # Safety
 * `map` must be valid; `buf` null or valid for `cap` doubles.
 */
enum TbStatus tb_map_values(const struct TbMap *map, double *buf, size_t cap, size_t *needed);

/**
 * # Safety
 * `map` must be null or come from this library, and not be used after.
 */
void tb_map_free(struct TbMap *map);

/**
 * Full pipeline into the configured output directory, as `twinbeam
 * pipeline` does.
 *
 * # Safety
 * `cfg` must be valid.
 */
enum TbStatus tb_run_pipeline(const struct TbConfig *cfg);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TWINBEAM_H */
