#ifndef TOFCORR_H
#define TOFCORR_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TofcorrChannel {
  TOFCORR_CHANNEL_DEPTH = 0,
  TOFCORR_CHANNEL_AMPLITUDE = 1,
  TOFCORR_CHANNEL_INTENSITY = 2,
  TOFCORR_CHANNEL_GROUND_TRUTH = 3,
} TofcorrChannel;

typedef enum TofcorrStatus {
  TOFCORR_STATUS_OK = 0,
  TOFCORR_STATUS_NULL_POINTER = 1,
  TOFCORR_STATUS_INVALID_ARGUMENT = 2,
  TOFCORR_STATUS_IO = 3,
  TOFCORR_STATUS_FORMAT = 4,
  TOFCORR_STATUS_DIMENSION_MISMATCH = 5,
  TOFCORR_STATUS_NUMERIC = 6,
  TOFCORR_STATUS_BUFFER_TOO_SMALL = 7,
  TOFCORR_STATUS_PANIC = 8,
} TofcorrStatus;

typedef struct TofcorrForest TofcorrForest;

typedef struct TofcorrFrames TofcorrFrames;

typedef struct TofcorrScene TofcorrScene;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *tofcorr_version(void);

// Copies the calling thread's last error message into `buf` (truncated and
// NUL-terminated) and returns the full message length, or 0 if there is none.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t tofcorr_last_error(char *buf, size_t len);

// Samples a scene. `planes` is 0 for the simple two-plane dataset, or 2 or
// 3 for the challenging datasets. `resolution` is the square image side.
//
// # Safety
// `out` must be a valid pointer to a handle slot.
enum TofcorrStatus tofcorr_scene_sample(uint64_t seed,
                                        uint32_t planes,
                                        uint32_t resolution,
                                        struct TofcorrScene **out);

// Reads a scene from its JSON description.
//
// # Safety
// `json` must be a NUL-terminated string and `out` a valid handle slot.
enum TofcorrStatus tofcorr_scene_from_json(const char *json, struct TofcorrScene **out);

// # Safety
// `scene` must come from this library and not be used afterwards.
void tofcorr_scene_free(struct TofcorrScene *scene);

// Renders `scene`. `bounce_samples` of 0 keeps the default.
//
// # Safety
// `scene` must be a live handle and `out` a valid handle slot.
enum TofcorrStatus tofcorr_render(const struct TofcorrScene *scene,
                                  bool multipath,
                                  uint32_t bounce_samples,
                                  struct TofcorrFrames **out);

// Loads frames saved by the `render` command; `stem` is the path without
// extension.
//
// # Safety
// `stem` must be a NUL-terminated string and `out` a valid handle slot.
enum TofcorrStatus tofcorr_frames_load(const char *stem, struct TofcorrFrames **out);

// # Safety
// `frames` must be a live handle; `width` and `height` valid pointers.
enum TofcorrStatus tofcorr_frames_dims(const struct TofcorrFrames *frames,
                                       size_t *width,
                                       size_t *height);

// Copies one channel, row-major, into `buf` of `len` values.
//
// # Safety
// `frames` must be a live handle and `buf` point to `len` doubles.
enum TofcorrStatus tofcorr_frames_copy_channel(const struct TofcorrFrames *frames,
                                               enum TofcorrChannel channel,
                                               double *buf,
                                               size_t len);

// Copies the validity mask as bytes of 0 or 1.
//
// # Safety
// `frames` must be a live handle and `buf` point to `len` bytes.
enum TofcorrStatus tofcorr_frames_copy_valid(const struct TofcorrFrames *frames,
                                             uint8_t *buf,
                                             size_t len);

// # Safety
// `frames` must come from this library and not be used afterwards.
void tofcorr_frames_free(struct TofcorrFrames *frames);

// # Safety
// `path` must be a NUL-terminated string and `out` a valid handle slot.
enum TofcorrStatus tofcorr_forest_load(const char *path, struct TofcorrForest **out);

// Number of input features the model expects, or 0 for a null handle.
//
// # Safety
// `forest` must be null or a live handle.
size_t tofcorr_forest_n_features(const struct TofcorrForest *forest);

// Predicts `n_rows` row-major feature rows of `n_cols` values each.
//
// # Safety
// `rows` must point to `n_rows * n_cols` floats and `out` to `out_len`
// doubles.
enum TofcorrStatus tofcorr_forest_predict(const struct TofcorrForest *forest,
                                          const float *rows,
                                          size_t n_rows,
                                          size_t n_cols,
                                          double *out,
                                          size_t out_len);

// Writes the corrected depth of `frames` into `buf`. The feature set is
// chosen from the model's layout; `amplitude_confidence` selects the
// amplitude-depth confidence channel instead of the constant one.
//
// # Safety
// Handles must be live and `buf` point to `len` doubles.
enum TofcorrStatus tofcorr_correct(const struct TofcorrForest *forest,
                                   const struct TofcorrFrames *frames,
                                   bool amplitude_confidence,
                                   double *buf,
                                   size_t len);

// # Safety
// `forest` must come from this library and not be used afterwards.
void tofcorr_forest_free(struct TofcorrForest *forest);

// Relative pixel error `|gt − d| / |gt|`.
//
// # Safety
// `out` must be a valid pointer.
enum TofcorrStatus tofcorr_rpe(double gt, double d, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TOFCORR_H */
