#ifndef KICKREC_H
#define KICKREC_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  KR_STATUS_OK = 0,
  KR_STATUS_NULL_POINTER = 1,
  KR_STATUS_INVALID_ARGUMENT = 2,
  KR_STATUS_NOT_FOUND = 3,
  KR_STATUS_PARSE = 4,
  KR_STATUS_DIMENSION = 5,
  KR_STATUS_INTERNAL = 6,
} KrStatus;

// Opaque trained model.
typedef struct KrModel KrModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread; empty when none. The
// pointer stays valid until the next failing call on this thread.
const char *kr_last_error(void);

// Length of a full raw feature vector.
size_t kr_feature_count(void);

// Load a model file written by `kickrec train`.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
KrStatus kr_model_load(const char *path, KrModel **out);

// Release a model; null is ignored.
//
// # Safety
// `model` must come from `kr_model_load` and not be used afterwards.
void kr_model_free(KrModel *model);

// Number of feature columns the model reads.
//
// # Safety
// `model` must be a live handle and `out` a valid pointer.
KrStatus kr_model_dim(const KrModel *model, size_t *out);

// Probability that the pair is a backing. `features` holds `len` raw
// values in the full column layout; NaN marks a masked value.
//
// # Safety
// `model` must be a live handle, `features` must point to `len` doubles
// and `out` must be valid.
KrStatus kr_model_predict_proba(const KrModel *model,
                                const double *features,
                                size_t len,
                                double *out);

// Area under the ROC curve with tied scores counted as one half.
//
// # Safety
// `scores` and `labels` must point to `n` elements; `out` must be valid.
KrStatus kr_auc(const double *scores, const uint8_t *labels, size_t n, double *out);

// Great-circle distance in kilometres between two points in degrees.
//
// # Safety
// `out` must be valid.
KrStatus kr_haversine_km(double lat1, double lon1, double lat2, double lon2, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KICKREC_H */
