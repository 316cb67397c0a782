#ifndef UNISTOQ_H
#define UNISTOQ_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Tolerance applied to the unitarity and double-stochasticity defects of a dilation.
 */
#define UNISTOQ_DILATION_TOL 1e-10

typedef enum UnistoqStatus {
  UNISTOQ_STATUS_OK = 0,
  UNISTOQ_STATUS_NULL_POINTER = 1,
  UNISTOQ_STATUS_PARSE = 2,
  UNISTOQ_STATUS_INVALID = 3,
  UNISTOQ_STATUS_UNKNOWN_TIME = 4,
  UNISTOQ_STATUS_TOO_LARGE = 5,
  UNISTOQ_STATUS_TOLERANCE = 6,
  UNISTOQ_STATUS_BUFFER_TOO_SMALL = 7,
  UNISTOQ_STATUS_INTERNAL = 8,
} UnistoqStatus;

/**
 * A unitary dilation together with its defects.
 */
typedef struct UnistoqDilated UnistoqDilated;

/**
 * A validated stochastic system.
 */
typedef struct UnistoqSystem UnistoqSystem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Returns the most recent error message on this thread, or NULL. The
 * caller owns the string and frees it with `unistoq_string_free`.
 */
char *unistoq_last_error(void);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library.
 */
void unistoq_string_free(char *s);

/**
 * Static, nul-terminated version string.
 */
const char *unistoq_version(void);

/**
 * Parses and validates a JSON system document.
 *
 * # Safety
 * `json` must be a nul-terminated string; `out` must be writable.
 */
enum UnistoqStatus unistoq_system_from_json(const char *json, struct UnistoqSystem **out);

/**
 * Seeded random system on the given time grid (which must contain 0).
 *
 * # Safety
 * `times` must point to `len` doubles; `out` must be writable.
 */
enum UnistoqStatus unistoq_system_random(size_t n,
                                         const double *times,
                                         size_t len,
                                         uint64_t seed,
                                         struct UnistoqSystem **out);

/**
 * # Safety
 * `sys` must be NULL or a handle from this library, not yet freed.
 */
void unistoq_system_free(struct UnistoqSystem *sys);

/**
 * # Safety
 * `sys` must be a live handle; `out` must be writable.
 */
enum UnistoqStatus unistoq_system_n(const struct UnistoqSystem *sys, size_t *out);

/**
 * Number of grid times.
 *
 * # Safety
 * `sys` must be a live handle; `out` must be writable.
 */
enum UnistoqStatus unistoq_system_time_count(const struct UnistoqSystem *sys, size_t *out);

/**
 * Copies the grid times into `out`, which holds `len` doubles.
 *
 * # Safety
 * `sys` must be a live handle; `out` must point to `len` writable doubles.
 */
enum UnistoqStatus unistoq_system_times(const struct UnistoqSystem *sys, double *out, size_t len);

/**
 * Re-runs validation. Returns `Invalid` with one violation per message
 * line when any condition fails.
 *
 * # Safety
 * `sys` must be a live handle.
 */
enum UnistoqStatus unistoq_system_validate(const struct UnistoqSystem *sys);

/**
 * Writes p(t) = Γ(t) p(0) into `out`, which holds `len` doubles.
 *
 * # Safety
 * `sys` must be a live handle; `out` must point to `len` writable doubles.
 */
enum UnistoqStatus unistoq_system_evolve(const struct UnistoqSystem *sys,
                                         double t,
                                         double *out,
                                         size_t len);

/**
 * Builds the unitary dilation. Returns `Tolerance` (and no handle) when a
 * defect exceeds 1e-10, `TooLarge` above the dilation size cap.
 *
 * # Safety
 * `sys` must be a live handle; `out` must be writable.
 */
enum UnistoqStatus unistoq_system_dilate(const struct UnistoqSystem *sys,
                                         struct UnistoqDilated **out);

/**
 * # Safety
 * `d` must be NULL or a handle from this library, not yet freed.
 */
void unistoq_dilated_free(struct UnistoqDilated *d);

/**
 * Dimension N³ of the dilated space.
 *
 * # Safety
 * `d` must be a live handle; `out` must be writable.
 */
enum UnistoqStatus unistoq_dilated_total_dim(const struct UnistoqDilated *d, size_t *out);

/**
 * Largest |Γ_ij(t) − Σ_{i′} Γ̃_{(i,i′),(j,ψ(j))}(t)| over the grid.
 *
 * # Safety
 * `d` must be a live handle; `out` must be writable.
 */
enum UnistoqStatus unistoq_dilated_marginalization_residual(const struct UnistoqDilated *d,
                                                            double *out);

/**
 * Largest unitarity defect of Ũ(t) over the grid.
 *
 * # Safety
 * `d` must be a live handle; `out` must be writable.
 */
enum UnistoqStatus unistoq_dilated_unitarity_defect(const struct UnistoqDilated *d, double *out);

/**
 * Largest double-stochasticity defect of Γ̃(t) over the grid.
 *
 * # Safety
 * `d` must be a live handle; `out` must be writable.
 */
enum UnistoqStatus unistoq_dilated_doubly_stochastic_defect(const struct UnistoqDilated *d,
                                                            double *out);

/**
 * Copies Γ̃(t) row-major into `out`, which holds `len` ≥ N⁶ doubles.
 *
 * # Safety
 * `d` must be a live handle; `out` must point to `len` writable doubles.
 */
enum UnistoqStatus unistoq_dilated_transition(const struct UnistoqDilated *d,
                                              double t,
                                              double *out,
                                              size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* UNISTOQ_H */
