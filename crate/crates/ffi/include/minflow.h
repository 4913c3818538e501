#ifndef MINFLOW_H
#define MINFLOW_H

/* Generated by cbindgen from the minflow-ffi crate; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code of every C-ABI call.
 */
typedef enum MfStatus {
  MF_STATUS_OK = 0,
  MF_STATUS_NULL_ARGUMENT = 1,
  MF_STATUS_INVALID_ARGUMENT = 2,
  MF_STATUS_PARSE_ERROR = 3,
  MF_STATUS_VALIDATION_ERROR = 4,
  MF_STATUS_RUNTIME_ERROR = 5,
} MfStatus;

/**
 * Opaque run configuration.
 */
typedef struct MfConfig MfConfig;

/**
 * Opaque sampled scalar field.
 */
typedef struct MfField MfField;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Last error message of the current thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *mf_last_error(void);

/**
 * Load and validate a TOML run configuration.
 *
 * # Safety
 * `path` must be a valid NUL-terminated string; `out` must be a valid
 * pointer to receive the handle.
 */
enum MfStatus mf_config_load(const char *path, struct MfConfig **out);

/**
 * # Safety
 * `cfg` must come from [`mf_config_load`] and not have been freed.
 */
void mf_config_free(struct MfConfig *cfg);

/**
 * Run the configured solver to its final time and hand back the final
 * field.
 *
 * # Safety
 * `cfg` must be a live handle; `out` must be valid.
 */
enum MfStatus mf_solve(const struct MfConfig *cfg, struct MfField **out);

/**
 * # Safety
 * `field` must come from this library and not have been freed.
 */
void mf_field_free(struct MfField *field);

/**
 * Node counts per axis (three entries; the third is 1 in 2D).
 *
 * # Safety
 * `field` must be live; `dims` must point to at least three usize slots.
 */
enum MfStatus mf_field_dims(const struct MfField *field, uintptr_t *dims);

/**
 * Grid spacing.
 *
 * # Safety
 * `field` must be live; `spacing` must be valid.
 */
enum MfStatus mf_field_spacing(const struct MfField *field, double *spacing);

/**
 * Nodal value at an index triple.
 *
 * # Safety
 * `field` must be live; `value` must be valid.
 */
enum MfStatus mf_field_value(const struct MfField *field,
                             uintptr_t i,
                             uintptr_t j,
                             uintptr_t k,
                             double *value);

/**
 * Measure and volume-based radius of the positivity set.
 *
 * # Safety
 * `field` must be live; out-pointers must be valid.
 */
enum MfStatus mf_field_positivity(const struct MfField *field, double *volume, double *radius);

/**
 * Write the field as legacy VTK structured points.
 *
 * # Safety
 * `field` must be live; `path` must be a valid NUL-terminated string.
 */
enum MfStatus mf_field_write_vtk(const struct MfField *field, const char *path);

/**
 * Evaluate the minimal-curvature operator at gradient `p` (length `dim`)
 * and symmetric Hessian `hess` (row-major, `dim * dim` entries). Writes
 * the operator value and, when `direction` is non-null, the minimizing
 * unit tangent (length `dim`).
 *
 * # Safety
 * `p` and `hess` must point to `dim` and `dim * dim` readable doubles;
 * `value` must be valid; `direction`, when non-null, must have room for
 * `dim` doubles.
 */
enum MfStatus mf_eval_min_curvature(uintptr_t dim,
                                    const double *p,
                                    const double *hess,
                                    double grad_threshold,
                                    double *value,
                                    double *direction);

/**
 * Library version as a static string.
 */
const char *mf_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MINFLOW_H */
