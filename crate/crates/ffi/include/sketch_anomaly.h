#ifndef SKETCH_ANOMALY_H
#define SKETCH_ANOMALY_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Result code of every fallible call.
 */
typedef enum {
  SKA_STATUS_OK = 0,
  SKA_STATUS_NULL_POINTER = 1,
  SKA_STATUS_INVALID_ARGUMENT = 2,
  SKA_STATUS_SHAPE = 3,
  SKA_STATUS_NUMERIC = 4,
  SKA_STATUS_IO = 5,
  SKA_STATUS_PARSE = 6,
  /**
   * The requested score is not defined for this record (e.g. an online sentinel).
   */
  SKA_STATUS_UNDEFINED = 7,
  SKA_STATUS_PANIC = 8,
} SkaStatus;

/**
 * Scoring modes for [`ska_score`].
 */
typedef enum {
  SKA_MODE_EXACT = 0,
  SKA_MODE_EXACT_ONLINE = 1,
  SKA_MODE_FD = 2,
  SKA_MODE_RPROJ = 3,
  SKA_MODE_COLSAMPLE = 4,
  SKA_MODE_ROWSAMPLE = 5,
  SKA_MODE_ONLINE_FD = 6,
} SkaMode;

typedef enum {
  SKA_SCORE_KIND_FULL = 0,
  SKA_SCORE_KIND_RANK_K = 1,
  SKA_SCORE_KIND_PROJECTION_DISTANCE = 2,
  SKA_SCORE_KIND_TAIL = 3,
  SKA_SCORE_KIND_RIDGE = 4,
} SkaScoreKind;

typedef struct SkaFd SkaFd;

typedef struct SkaMatrix SkaMatrix;

typedef struct SkaScores SkaScores;

typedef struct {
  SkaMode mode;
  size_t k;
  /**
   * Sketch size; ignored by the exact modes.
   */
  size_t ell;
  uint64_t seed;
  /**
   * Ridge parameter; negative disables the ridge score.
   */
  double lambda;
} SkaScoreOptions;

typedef struct {
  double separation_delta;
  double condition_kappa_k;
  double stable_rank;
  double frobenius_sq;
  double tail_mass;
} SkaSpectralStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread. Valid until the next
 * failing call on the same thread. Never null.
 */
const char *ska_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ska_version(void);

/**
 * Copies a row-major `rows * cols` buffer into a new matrix.
 *
 * # Safety
 * `data` must point to `rows * cols` readable doubles; `out` must be writable.
 */
SkaStatus ska_matrix_new(size_t rows, size_t cols, const double *data, SkaMatrix **out);

/**
 * Loads a numeric CSV file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
SkaStatus ska_matrix_load_csv(const char *path, bool has_header, SkaMatrix **out);

/**
 * # Safety
 * `m` must be null or a live matrix handle.
 */
size_t ska_matrix_rows(const SkaMatrix *m);

/**
 * # Safety
 * `m` must be null or a live matrix handle.
 */
size_t ska_matrix_cols(const SkaMatrix *m);

/**
 * # Safety
 * `m` must be null or a handle from `ska_matrix_*`, not yet freed.
 */
void ska_matrix_free(SkaMatrix *m);

/**
 * Scores every row of `m`.
 *
 * # Safety
 * `m` must be a live matrix handle, `opts` readable and `out` writable.
 */
SkaStatus ska_score(const SkaMatrix *m, const SkaScoreOptions *opts, SkaScores **out);

/**
 * # Safety
 * `s` must be null or a live scores handle.
 */
size_t ska_scores_len(const SkaScores *s);

/**
 * Reads one score. Returns `Undefined` when the record has no value of that kind.
 *
 * # Safety
 * `s` must be a live scores handle and `out` writable.
 */
SkaStatus ska_scores_get(const SkaScores *s, size_t row, SkaScoreKind kind, double *out);

/**
 * # Safety
 * `s` must be null or a handle from `ska_score`, not yet freed.
 */
void ska_scores_free(SkaScores *s);

/**
 * Creates an empty frequent-directions sketch with `ell` rows over width `d`.
 *
 * # Safety
 * `out` must be writable.
 */
SkaStatus ska_fd_new(size_t ell, size_t d, SkaFd **out);

/**
 * Feeds one row of length `len`.
 *
 * # Safety
 * `fd` must be a live handle and `row` must point to `len` readable doubles.
 */
SkaStatus ska_fd_update(SkaFd *fd, const double *row, size_t len);

/**
 * Number of rows currently held by the sketch (between 0 and `2 * ell - 1`).
 *
 * # Safety
 * `fd` must be null or a live handle.
 */
size_t ska_fd_rows(const SkaFd *fd);

/**
 * Copies the `ska_fd_rows(fd) x d` sketch, row-major, into `buf` of
 * `capacity` doubles.
 *
 * # Safety
 * `fd` must be a live handle and `buf` must have room for `capacity` doubles.
 */
SkaStatus ska_fd_sketch(const SkaFd *fd, double *buf, size_t capacity);

/**
 * Writes the sketch as a binary snapshot.
 *
 * # Safety
 * `fd` must be a live handle and `path` a NUL-terminated string.
 */
SkaStatus ska_fd_save(const SkaFd *fd, const char *path);

/**
 * # Safety
 * `fd` must be null or a handle from `ska_fd_new`, not yet freed.
 */
void ska_fd_free(SkaFd *fd);

/**
 * Spectral summary of `m` for rank parameter `k`.
 *
 * # Safety
 * `m` must be a live matrix handle and `out` writable.
 */
SkaStatus ska_spectral_stats(const SkaMatrix *m, size_t k, SkaSpectralStats *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SKETCH_ANOMALY_H */
