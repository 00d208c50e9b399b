#ifndef HYPERCIRCLE_H
#define HYPERCIRCLE_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Kind of a JSON input document.
 */
typedef enum HcInputKind {
  HC_INPUT_KIND_ANGLE_DATA = 0,
  HC_INPUT_KIND_SPHERE_POINTS = 1,
  HC_INPUT_KIND_FLAT_CONE_SURFACE = 2,
} HcInputKind;

/**
 * Result code of every fallible call.
 */
typedef enum HcStatus {
  HC_STATUS_OK = 0,
  HC_STATUS_NULL_POINTER = 1,
  HC_STATUS_INVALID_INPUT = 2,
  HC_STATUS_NOT_CONVERGED = 3,
  HC_STATUS_NOT_REALIZED = 4,
  HC_STATUS_OUT_OF_RANGE = 5,
  HC_STATUS_PANIC = 6,
} HcStatus;

/**
 * Angle data, with the default doubling vertex of bundled sphere examples.
 */
typedef struct HcAngleData HcAngleData;

/**
 * A pattern on the sphere realized by doubling.
 */
typedef struct HcSphere HcSphere;

/**
 * A solved and laid-out surface.
 */
typedef struct HcUniformization HcUniformization;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next call into the library from the same thread.
 */
const char *hc_last_error(void);

/**
 * Frees a string returned by the library.
 *
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void hc_string_free(char *s);

/**
 * Builds angle data from a JSON document; `cover` (may be null) is a cover
 * spec lifting a sphere point set.
 *
 * # Safety
 * `json` and `cover` must be null or nul-terminated strings; `out` must be
 * a valid pointer.
 */
enum HcStatus hc_angle_data_from_json(enum HcInputKind kind,
                                      const char *json,
                                      const char *cover,
                                      struct HcAngleData **out);

/**
 * Loads a bundled example by name.
 *
 * # Safety
 * `name` must be a nul-terminated string and `out` a valid pointer.
 */
enum HcStatus hc_angle_data_example(const char *name, struct HcAngleData **out);

/**
 * # Safety
 * `data` must be null or a handle from this library, freed once.
 */
void hc_angle_data_free(struct HcAngleData *data);

/**
 * Cell counts and genus of the complex.
 *
 * # Safety
 * `data` must be a live handle; output pointers may be null.
 */
enum HcStatus hc_angle_data_counts(const struct HcAngleData *data,
                                   size_t *vertices,
                                   size_t *edges,
                                   size_t *faces,
                                   size_t *genus);

/**
 * Checks the admissibility conditions; `passed` and `exhaustive` receive
 * 1 or 0. The JSON report is stored in `report` unless it is null.
 *
 * # Safety
 * `data` must be a live handle and `passed` a valid pointer.
 */
enum HcStatus hc_validate(const struct HcAngleData *data,
                          int32_t *passed,
                          int32_t *exhaustive,
                          char **report);

/**
 * Solves and lays out the surface. Non-positive `grad_tol` and zero
 * `max_iter` select the defaults.
 *
 * # Safety
 * `data` must be a live handle and `out` a valid pointer.
 */
enum HcStatus hc_uniformize(const struct HcAngleData *data,
                            double grad_tol,
                            size_t max_iter,
                            struct HcUniformization **out);

/**
 * # Safety
 * `u` must be null or a handle from this library, freed once.
 */
void hc_uniformization_free(struct HcUniformization *u);

/**
 * Solver statistics and the largest angle and cone residuals.
 *
 * # Safety
 * `u` must be a live handle; output pointers may be null.
 */
enum HcStatus hc_uniformization_stats(const struct HcUniformization *u,
                                      size_t *iterations,
                                      double *grad_norm,
                                      double *angle_residual,
                                      double *cone_residual);

/**
 * Copies up to `len` vertex radii into `buf`; `count` receives the number
 * of vertices.
 *
 * # Safety
 * `u` must be a live handle, `buf` valid for `len` doubles (or null with
 * `len` 0), `count` valid or null.
 */
enum HcStatus hc_uniformization_radii(const struct HcUniformization *u,
                                      double *buf,
                                      size_t len,
                                      size_t *count);

/**
 * Number of Fuchsian generators.
 *
 * # Safety
 * `u` must be a live handle.
 */
size_t hc_uniformization_generator_count(const struct HcUniformization *u);

/**
 * Generator `index` as the `SL(2,R)` matrix `[a, b, c, d]`.
 *
 * # Safety
 * `u` must be a live handle and `matrix` valid for four doubles.
 */
enum HcStatus hc_uniformization_generator(const struct HcUniformization *u,
                                          size_t index,
                                          double *matrix);

/**
 * Text report of generators, pairings, radii and lengths. Free the result
 * with `hc_string_free`.
 *
 * # Safety
 * `u` must be a live handle.
 */
char *hc_uniformization_report(const struct HcUniformization *u);

/**
 * Realizes sphere data by doubling across the link of `k_inf`; a negative
 * `k_inf` uses the example's default vertex.
 *
 * # Safety
 * `data` must be a live handle and `out` a valid pointer.
 */
enum HcStatus hc_sphere_realize(const struct HcAngleData *data,
                                int64_t k_inf,
                                int32_t fold_symmetry,
                                struct HcSphere **out);

/**
 * # Safety
 * `s` must be null or a handle from this library, freed once.
 */
void hc_sphere_free(struct HcSphere *s);

/**
 * Largest re-measured angle residual and involution residual.
 *
 * # Safety
 * `s` must be a live handle; output pointers may be null.
 */
enum HcStatus hc_sphere_residuals(const struct HcSphere *s, double *theta, double *symmetry);

/**
 * The spherical pattern as JSON. Free the result with `hc_string_free`.
 *
 * # Safety
 * `s` must be a live handle.
 */
char *hc_sphere_pattern_json(const struct HcSphere *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HYPERCIRCLE_H */
