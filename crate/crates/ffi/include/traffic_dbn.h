#ifndef TRAFFIC_DBN_H
#define TRAFFIC_DBN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every call.
 */
typedef enum TdStatus {
  TD_STATUS_OK = 0,
  TD_STATUS_NULL_POINTER = 1,
  TD_STATUS_INVALID_ARGUMENT = 2,
  TD_STATUS_IO = 3,
  TD_STATUS_PARSE = 4,
  TD_STATUS_TRAINING = 5,
  TD_STATUS_DIMENSION_MISMATCH = 6,
  TD_STATUS_PANIC = 7,
} TdStatus;

/**
 * Loaded or generated aligned stream.
 */
typedef struct TdDataset TdDataset;

/**
 * Feature vectors produced by the two-stage window pipeline.
 */
typedef struct TdFeatures TdFeatures;

/**
 * Trained classifier of any supported kind.
 */
typedef struct TdModel TdModel;

/**
 * Class index returned by predictions: 0 free, 1 steady, 2 congested.
 */
typedef int32_t TdState;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL terminated,
 * truncated to `len - 1` bytes). Returns the full message length in bytes,
 * or 0 when the last call succeeded.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
uintptr_t td_last_error(char *buf, uintptr_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *td_version(void);

/**
 * Generates a synthetic stream from a named preset.
 *
 * # Safety
 * `preset` must be a valid C string; `out` must be writable.
 */
enum TdStatus td_dataset_generate(const char *preset,
                                  uint64_t seed,
                                  double duration,
                                  struct TdDataset **out);

/**
 * Reads an aligned stream CSV.
 *
 * # Safety
 * `path` must be a valid C string; `out` must be writable.
 */
enum TdStatus td_dataset_load_csv(const char *path, struct TdDataset **out);

/**
 * Number of aligned samples, 0 for a null handle.
 *
 * # Safety
 * `ds` must be null or a live dataset handle.
 */
uintptr_t td_dataset_len(const struct TdDataset *ds);

/**
 * # Safety
 * `ds` must be null or a handle not yet freed.
 */
void td_dataset_free(struct TdDataset *ds);

/**
 * Runs the two-stage window pipeline with the built-in threshold table.
 *
 * # Safety
 * `ds` must be a live dataset handle; `out` must be writable.
 */
enum TdStatus td_features_compute(const struct TdDataset *ds,
                                  uintptr_t n1,
                                  uintptr_t m1,
                                  uintptr_t n2,
                                  uintptr_t m2,
                                  struct TdFeatures **out);

/**
 * Number of feature vectors, 0 for a null handle.
 *
 * # Safety
 * `f` must be null or a live features handle.
 */
uintptr_t td_features_count(const struct TdFeatures *f);

/**
 * Values per vector, 0 for a null or empty handle.
 *
 * # Safety
 * `f` must be null or a live features handle.
 */
uintptr_t td_features_width(const struct TdFeatures *f);

/**
 * Copies vector `index` into `values` (exactly `len` slots) and its label
 * into `label`.
 *
 * # Safety
 * `f` must be a live handle, `values` must hold `len` doubles, `label`
 * must be writable.
 */
enum TdStatus td_features_get(const struct TdFeatures *f,
                              uintptr_t index,
                              double *values,
                              uintptr_t len,
                              TdState *label);

/**
 * # Safety
 * `f` must be null or a handle not yet freed.
 */
void td_features_free(struct TdFeatures *f);

/**
 * Trains `kind` ("dbn", "gnb" or "lda") on every vector. For the DBN the
 * default configuration is used with the given seed and supervised step
 * count, and the input layer width follows the features.
 *
 * # Safety
 * `f` must be a live features handle, `kind` a valid C string, `out`
 * writable.
 */
enum TdStatus td_model_train(const struct TdFeatures *f,
                             const char *kind,
                             uint64_t seed,
                             uintptr_t sup_iters,
                             struct TdModel **out);

/**
 * Loads a model file of any kind.
 *
 * # Safety
 * `path` must be a valid C string; `out` must be writable.
 */
enum TdStatus td_model_load(const char *path, struct TdModel **out);

/**
 * Writes the model to `path`.
 *
 * # Safety
 * `m` must be a live model handle; `path` a valid C string.
 */
enum TdStatus td_model_save(const struct TdModel *m, const char *path);

/**
 * Number of inputs the model expects, 0 for a null handle.
 *
 * # Safety
 * `m` must be null or a live model handle.
 */
uintptr_t td_model_arity(const struct TdModel *m);

/**
 * Classifies one vector of `len` values; writes the class index to `state`.
 *
 * # Safety
 * `m` must be a live model handle, `values` must hold `len` doubles,
 * `state` must be writable.
 */
enum TdStatus td_model_predict(const struct TdModel *m,
                               const double *values,
                               uintptr_t len,
                               TdState *state);

/**
 * # Safety
 * `m` must be null or a handle not yet freed.
 */
void td_model_free(struct TdModel *m);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TRAFFIC_DBN_H */
