/* C API for CVRP feature extraction and instance-space projection. */

#ifndef CVRP_ISA_H
#define CVRP_ISA_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every fallible API call.
typedef enum CvrpIsaStatus {
  // Success.
  CVRP_ISA_STATUS_OK = 0,
  // A required pointer argument was NULL.
  CVRP_ISA_STATUS_NULL_ARGUMENT = 1,
  // A string argument was not valid UTF-8.
  CVRP_ISA_STATUS_UTF8 = 2,
  // The instance text could not be parsed; see `cvrpisa_last_error`.
  CVRP_ISA_STATUS_PARSE = 3,
  // The model JSON was rejected; see `cvrpisa_last_error`.
  CVRP_ISA_STATUS_MODEL = 4,
  // Projection failed (missing or non-finite features); see
  // `cvrpisa_last_error`.
  CVRP_ISA_STATUS_PROJECTION = 5,
  // A name or index did not resolve.
  CVRP_ISA_STATUS_NOT_FOUND = 6,
  // A slice length did not match what the model expects.
  CVRP_ISA_STATUS_LENGTH_MISMATCH = 7,
  // An internal invariant failed (a bug; the library caught a panic).
  CVRP_ISA_STATUS_INTERNAL = 8,
} CvrpIsaStatus;

// Opaque extracted feature vector (name → value, insertion-ordered).
typedef struct CvrpIsaFeatures CvrpIsaFeatures;

// Opaque parsed instance.
typedef struct CvrpIsaInstance CvrpIsaInstance;

// Opaque projection model.
typedef struct CvrpIsaModel CvrpIsaModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the most recent failure on this thread; empty string if no
// call has failed yet. Owned by the library — do not free.
const char *cvrpisa_last_error(void);

// Crate version as a static NUL-terminated string.
const char *cvrpisa_version(void);

// Parse TSPLIB/CVRPLIB instance text into a handle.
//
// # Safety
// `text` must be a NUL-terminated string; `out` must be a valid pointer.
enum CvrpIsaStatus cvrpisa_instance_parse(const char *text, struct CvrpIsaInstance **out);

// Release an instance handle. NULL is ignored.
//
// # Safety
// `h` must be NULL or a pointer from `cvrpisa_instance_parse`, not yet freed.
void cvrpisa_instance_free(struct CvrpIsaInstance *h);

// Total node count (customers + depot).
//
// # Safety
// `h` must be a live instance handle.
size_t cvrpisa_instance_dimension(const struct CvrpIsaInstance *h);

// Vehicle capacity.
//
// # Safety
// `h` must be a live instance handle.
uint64_t cvrpisa_instance_capacity(const struct CvrpIsaInstance *h);

// Extract every feature of an instance with the default configuration.
// Probing randomness is derived from `seed`.
//
// # Safety
// `h` must be a live instance handle; `out` must be a valid pointer.
enum CvrpIsaStatus cvrpisa_extract(const struct CvrpIsaInstance *h,
                                   uint64_t seed,
                                   struct CvrpIsaFeatures **out);

// Release a features handle. NULL is ignored.
//
// # Safety
// `h` must be NULL or a pointer from `cvrpisa_extract`, not yet freed.
void cvrpisa_features_free(struct CvrpIsaFeatures *h);

// Number of features in the vector.
//
// # Safety
// `h` must be a live features handle.
size_t cvrpisa_features_len(const struct CvrpIsaFeatures *h);

// Name of the feature at `index`; NULL when out of range. The pointer is
// owned by the handle.
//
// # Safety
// `h` must be a live features handle.
const char *cvrpisa_features_name(const struct CvrpIsaFeatures *h, size_t index);

// Look up a feature by name.
//
// # Safety
// `h` must be a live features handle; `name` a NUL-terminated string;
// `value` a valid pointer.
enum CvrpIsaStatus cvrpisa_features_get(const struct CvrpIsaFeatures *h,
                                        const char *name,
                                        double *value);

// The built-in reference model (23 features, identity normalization).
//
// # Safety
// `out` must be a valid pointer.
enum CvrpIsaStatus cvrpisa_model_builtin(struct CvrpIsaModel **out);

// Load a model from its JSON text (as written by the pipeline).
//
// # Safety
// `json` must be a NUL-terminated string; `out` a valid pointer.
enum CvrpIsaStatus cvrpisa_model_from_json(const char *json, struct CvrpIsaModel **out);

// Release a model handle. NULL is ignored.
//
// # Safety
// `h` must be NULL or a pointer from a model constructor, not yet freed.
void cvrpisa_model_free(struct CvrpIsaModel *h);

// Number of features the model consumes.
//
// # Safety
// `h` must be a live model handle.
size_t cvrpisa_model_len(const struct CvrpIsaModel *h);

// Name of the model feature at `index`; NULL when out of range. The
// pointer is owned by the handle.
//
// # Safety
// `h` must be a live model handle.
const char *cvrpisa_model_feature_name(const struct CvrpIsaModel *h, size_t index);

// Project raw feature values ordered like the model's feature list.
//
// # Safety
// `h` must be a live model handle; `values` must point to `len` readable
// doubles; `z1`/`z2` must be valid pointers.
enum CvrpIsaStatus cvrpisa_project_values(const struct CvrpIsaModel *h,
                                          const double *values,
                                          size_t len,
                                          double *z1,
                                          double *z2);

// Project an extracted feature vector. Fails listing every model feature
// that is missing or non-finite.
//
// # Safety
// `model` and `features` must be live handles; `z1`/`z2` valid pointers.
enum CvrpIsaStatus cvrpisa_project_features(const struct CvrpIsaModel *model,
                                            const struct CvrpIsaFeatures *features,
                                            double *z1,
                                            double *z2);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CVRP_ISA_H */
