#ifndef CREDKIT_H
#define CREDKIT_H

/* Generated by cbindgen from the credkit-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Which detector produced a detection.
 */
typedef enum CkMethod {
  CK_METHOD_CRED = 0,
  CK_METHOD_STA_LTA = 1,
  CK_METHOD_TEMPLATE = 2,
} CkMethod;

/**
 * Result of a fallible C API call.
 */
typedef enum CkStatus {
  /**
   * The call succeeded.
   */
  CK_STATUS_OK = 0,
  /**
   * A required pointer argument was NULL.
   */
  CK_STATUS_NULL_ARGUMENT = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  CK_STATUS_INVALID_STRING = 2,
  /**
   * The input data or configuration was rejected.
   */
  CK_STATUS_DATA_ERROR = 3,
  /**
   * An internal invariant failed; not caused by the input.
   */
  CK_STATUS_INTERNAL_ERROR = 4,
} CkStatus;

/**
 * Opaque list of detections.
 */
typedef struct CkDetectionList CkDetectionList;

/**
 * Opaque detector model handle.
 */
typedef struct CkModel CkModel;

/**
 * Opaque three-component waveform handle.
 */
typedef struct CkWaveform CkWaveform;

/**
 * One detected event interval, in seconds from the start of the scanned
 * waveform.
 */
typedef struct CkDetection {
  enum CkMethod method;
  double start_s;
  double end_s;
  double peak_score;
} CkDetection;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Returns the library version as a static string.
 */
const char *ck_version(void);

/**
 * Returns the error message from the most recent failing call on this
 * thread (empty string if none). The pointer stays valid until the next
 * failing call on the same thread; do not free it.
 */
const char *ck_last_error(void);

/**
 * Reads a waveform CSV file into a new handle.
 *
 * # Safety
 *
 * `path` must be a valid NUL-terminated C string; `out` must be a valid
 * pointer. On `Ok`, `*out` owns the waveform and must be released with
 * [`ck_waveform_free`].
 */
enum CkStatus ck_waveform_read(const char *path, struct CkWaveform **out);

/**
 * Builds a waveform from three equal-length component arrays
 * (east, north, vertical) sampled at `sampling_rate` Hz.
 *
 * # Safety
 *
 * `e`, `n`, and `z` must each point to `len` readable doubles; `out` must
 * be a valid pointer. On `Ok`, `*out` owns a copy of the samples and must
 * be released with [`ck_waveform_free`].
 */
enum CkStatus ck_waveform_create(const double *e,
                                 const double *n,
                                 const double *z,
                                 size_t len,
                                 double sampling_rate,
                                 struct CkWaveform **out);

/**
 * Number of samples per component; 0 for NULL.
 *
 * # Safety
 *
 * `wf` must be NULL or a live pointer returned by this library.
 */
size_t ck_waveform_len(const struct CkWaveform *wf);

/**
 * Sampling rate in Hz; 0 for NULL.
 *
 * # Safety
 *
 * `wf` must be NULL or a live pointer returned by this library.
 */
double ck_waveform_sampling_rate(const struct CkWaveform *wf);

/**
 * Releases a waveform handle. NULL is a no-op.
 *
 * # Safety
 *
 * `wf` must be a pointer returned by this library that has not already
 * been freed.
 */
void ck_waveform_free(struct CkWaveform *wf);

/**
 * Loads a model file written by the toolkit's `train` command.
 *
 * # Safety
 *
 * `path` must be a valid NUL-terminated C string; `out` must be a valid
 * pointer. On `Ok`, `*out` must be released with [`ck_model_free`].
 */
enum CkStatus ck_model_load(const char *path, struct CkModel **out);

/**
 * Releases a model handle. NULL is a no-op.
 *
 * # Safety
 *
 * `m` must be a pointer returned by this library that has not already
 * been freed.
 */
void ck_model_free(struct CkModel *m);

/**
 * Scans a continuous 100 Hz waveform with the model: moving windows of
 * `window_s` seconds every `stride_s` seconds, events extracted from the
 * stitched probability stream at `threshold`.
 *
 * # Safety
 *
 * `model` and `wf` must be live handles from this library; `out` must be
 * a valid pointer. On `Ok`, `*out` must be released with
 * [`ck_detections_free`].
 */
enum CkStatus ck_detect(const struct CkModel *model,
                        const struct CkWaveform *wf,
                        double window_s,
                        double stride_s,
                        double threshold,
                        struct CkDetectionList **out);

/**
 * Number of detections in the list; 0 for NULL.
 *
 * # Safety
 *
 * `list` must be NULL or a live pointer returned by this library.
 */
size_t ck_detections_len(const struct CkDetectionList *list);

/**
 * Copies detection `index` into `*out`.
 *
 * # Safety
 *
 * `list` must be a live handle from this library; `out` must be a valid
 * pointer.
 */
enum CkStatus ck_detections_get(const struct CkDetectionList *list,
                                size_t index,
                                struct CkDetection *out);

/**
 * Releases a detection list. NULL is a no-op.
 *
 * # Safety
 *
 * `list` must be a pointer returned by this library that has not already
 * been freed.
 */
void ck_detections_free(struct CkDetectionList *list);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* CREDKIT_H */
