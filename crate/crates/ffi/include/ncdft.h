#ifndef NCDFT_H
#define NCDFT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes returned by the fallible functions.
 */
enum NcdftStatus
#if __STDC_VERSION__ >= 202311L
  : int32_t
#endif // __STDC_VERSION__ >= 202311L
 {
  NCDFT_STATUS_OK = 0,
  /**
   * A required pointer argument was NULL.
   */
  NCDFT_STATUS_NULL_POINTER = 1,
  /**
   * The configuration fails validation.
   */
  NCDFT_STATUS_INVALID_CONFIG = 2,
  /**
   * A bin of the configured bank cannot be realized.
   */
  NCDFT_STATUS_INFEASIBLE_BANK = 3,
  /**
   * An output buffer is shorter than the bin count.
   */
  NCDFT_STATUS_BUFFER_TOO_SMALL = 4,
  /**
   * An index or length is out of range.
   */
  NCDFT_STATUS_INVALID_ARGUMENT = 5,
  /**
   * A panic was caught inside the library.
   */
  NCDFT_STATUS_PANIC = 6,
};
#if __STDC_VERSION__ >= 202311L
typedef enum NcdftStatus NcdftStatus;
#else
typedef int32_t NcdftStatus;
#endif // __STDC_VERSION__ >= 202311L

/**
 * Opaque engine handle.
 */
typedef struct NcdftEngine NcdftEngine;

/**
 * Bank parameters, mirroring the Rust `NoteScaleConfig`.
 */
typedef struct NcdftConfig {
  /**
   * Pitch of A4 in Hz.
   */
  double reference_pitch;
  /**
   * MIDI note number of the lowest bin.
   */
  int32_t lowest_note_midi;
  uint32_t octaves;
  uint32_t bins_per_octave;
  uint32_t sample_rate;
  /**
   * Longest analysis window in seconds.
   */
  double max_window_seconds;
} NcdftConfig;

/**
 * The default bank: 8 octaves of 24 bins from A0 at 48 kHz.
 */
struct NcdftConfig ncdft_config_default(void);

/**
 * Static description of a status code. Never NULL; unknown codes yield
 * "unknown status".
 */
const char *ncdft_status_message(int32_t status);

/**
 * Detail of the most recent failure on the calling thread, or an empty
 * string. The pointer stays valid until the next failing call on the same
 * thread.
 */
const char *ncdft_last_error_message(void);

/**
 * Plans the bank described by `config` and creates an engine for it.
 *
 * # Safety
 * `config` must point to a valid `NcdftConfig`; `out` must be valid for a
 * pointer write. On failure `*out` is set to NULL.
 */
NcdftStatus ncdft_engine_new(const struct NcdftConfig *config, struct NcdftEngine **out);

/**
 * Releases an engine. NULL is ignored.
 *
 * # Safety
 * `engine` must be NULL or a handle from [`ncdft_engine_new`] that has not
 * been freed.
 */
void ncdft_engine_free(struct NcdftEngine *engine);

/**
 * Number of bins, or 0 for NULL.
 *
 * # Safety
 * `engine` must be NULL or a live handle.
 */
size_t ncdft_engine_bin_count(const struct NcdftEngine *engine);

/**
 * Samples processed since creation or the last reset, or 0 for NULL.
 *
 * # Safety
 * `engine` must be NULL or a live handle.
 */
uint64_t ncdft_engine_position(const struct NcdftEngine *engine);

/**
 * Quantized center frequency of bin `index` in Hz.
 *
 * # Safety
 * `engine` must be a live handle; `out` must be valid for a write.
 */
NcdftStatus ncdft_engine_bin_frequency(const struct NcdftEngine *engine, size_t index, double *out);

/**
 * Window length in samples of bin `index`.
 *
 * # Safety
 * `engine` must be a live handle; `out` must be valid for a write.
 */
NcdftStatus ncdft_engine_bin_window_len(const struct NcdftEngine *engine,
                                        size_t index,
                                        size_t *out);

/**
 * Feeds `len` mono samples. `samples` may be NULL when `len` is 0.
 *
 * # Safety
 * `engine` must be a live handle not used concurrently; `samples` must be
 * valid for reads of `len` values.
 */
NcdftStatus ncdft_engine_process(struct NcdftEngine *engine, const int16_t *samples, size_t len);

/**
 * Feeds `len` interleaved stereo values (`len / 2` frames), averaging each
 * pair to mono. `len` must be even.
 *
 * # Safety
 * As for [`ncdft_engine_process`].
 */
NcdftStatus ncdft_engine_process_interleaved_stereo(struct NcdftEngine *engine,
                                                    const int16_t *samples,
                                                    size_t len);

/**
 * Advances smoothing to the current position and writes one magnitude per
 * bin. `raw_magnitudes` may be NULL; otherwise it receives the unsmoothed
 * values. Both buffers must hold at least `len` values and `len` must be at
 * least the bin count.
 *
 * # Safety
 * `engine` must be a live handle; non-NULL buffers must be valid for writes
 * of `len` values.
 */
NcdftStatus ncdft_engine_snapshot(struct NcdftEngine *engine,
                                  double *magnitudes,
                                  double *raw_magnitudes,
                                  size_t len);

/**
 * Clears all samples, accumulators and smoothing state.
 *
 * # Safety
 * `engine` must be a live handle.
 */
NcdftStatus ncdft_engine_reset(struct NcdftEngine *engine);

#endif  /* NCDFT_H */
