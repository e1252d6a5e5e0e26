#ifndef OCRS_H
#define OCRS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every fallible call.
typedef enum OcrsStatus {
  OCRS_STATUS_OK = 0,
  // A null pointer, bad UTF-8 or an out-of-range index.
  OCRS_STATUS_INVALID_ARGUMENT = 1,
  // Malformed or inconsistent instance data.
  OCRS_STATUS_INVALID_INPUT = 2,
  OCRS_STATUS_NOT_A_MATROID = 3,
  OCRS_STATUS_NOT_SUBMODULAR = 4,
  OCRS_STATUS_TOO_LARGE = 5,
  // A point outside the scaled polytope.
  OCRS_STATUS_OUTSIDE_POLYTOPE = 6,
  // An LP with no feasible point or no finite optimum.
  OCRS_STATUS_INFEASIBLE = 7,
  OCRS_STATUS_FEASIBILITY_VIOLATED = 8,
  OCRS_STATUS_BOUND_VIOLATED = 9,
  OCRS_STATUS_INTERNAL = 10,
  OCRS_STATUS_PANIC = 11,
} OcrsStatus;

// A feasibility constraint: matroid, knapsack, matching or an intersection.
typedef struct OcrsConstraint OcrsConstraint;

// Per-element selectability estimates.
typedef struct OcrsSelectability OcrsSelectability;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null. Valid until
// the next call into the library on this thread.
const char *ocrs_last_error(void);

// Library version as a static string.
const char *ocrs_version(void);

// Releases a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and not be freed twice.
void ocrs_string_free(char *s);

// Parses a constraint from its JSON description.
//
// # Safety
// `json` must be a NUL-terminated string; `out` must be writable.
enum OcrsStatus ocrs_constraint_from_json(const char *json, struct OcrsConstraint **out);

// Ground set size, or 0 for a null handle.
//
// # Safety
// `c` must be null or a live handle.
size_t ocrs_constraint_ground_size(const struct OcrsConstraint *c);

// Whether the set `{elements[0], …, elements[len-1]}` is feasible. Writes
// 1 or 0 to `out`.
//
// # Safety
// `elements` must point to `len` values; `out` must be writable.
enum OcrsStatus ocrs_constraint_contains(const struct OcrsConstraint *c,
                                         const size_t *elements,
                                         size_t len,
                                         int32_t *out);

// # Safety
// `c` must be null or a handle not yet freed.
void ocrs_constraint_free(struct OcrsConstraint *c);

// Estimates `Pr[e selected | e active]` for every element under the
// default scheme for `c` at scale `b`. `x` has `n` entries and must lie in
// `b·P`. `workers` of 0 uses every core.
//
// # Safety
// `c` must be a live handle, `x` must point to `n` doubles and `out` must
// be writable.
enum OcrsStatus ocrs_verify_selectability(const struct OcrsConstraint *c,
                                          const double *x,
                                          size_t n,
                                          double b,
                                          double eps,
                                          uint64_t trials,
                                          uint64_t seed,
                                          size_t workers,
                                          struct OcrsSelectability **out);

// Number of elements in the report, or 0 for null.
//
// # Safety
// `r` must be null or a live handle.
size_t ocrs_selectability_len(const struct OcrsSelectability *r);

// Estimate, 99% half-width and target bound for element `i`.
//
// # Safety
// `r` must be a live handle; the outputs must be writable.
enum OcrsStatus ocrs_selectability_element(const struct OcrsSelectability *r,
                                           size_t i,
                                           double *estimate,
                                           double *ci_halfwidth,
                                           double *bound);

// 1 if every element met its bound, else 0.
//
// # Safety
// `r` must be null or a live handle.
int32_t ocrs_selectability_pass(const struct OcrsSelectability *r);

// The full report as JSON.
//
// # Safety
// `r` must be a live handle; `out` must be writable.
enum OcrsStatus ocrs_selectability_json(const struct OcrsSelectability *r, char **out);

// # Safety
// `r` must be null or a handle not yet freed.
void ocrs_selectability_free(struct OcrsSelectability *r);

// Evaluates the prophet pipeline on a JSON instance and writes the report
// as JSON. Uses the default order policy and scale.
//
// # Safety
// `instance_json` must be NUL-terminated; `out` must be writable.
enum OcrsStatus ocrs_prophet_json(const char *instance_json,
                                  uint64_t trials,
                                  uint64_t seed,
                                  char **out);

// Runs stochastic probing on a JSON instance, with or without deadlines,
// and writes the report as JSON.
//
// # Safety
// `instance_json` must be NUL-terminated; `out` must be writable.
enum OcrsStatus ocrs_probing_json(const char *instance_json,
                                  uint64_t trials,
                                  uint64_t seed,
                                  char **out);

// Best worst-element selectability of any deterministic CRS on the knapsack
// instance with `n - 1` items of size `1/n` and one of size 1, at scale `b`
// given as a decimal or fraction string. Writes the exact value as a
// fraction string.
//
// # Safety
// `b` must be NUL-terminated; `out` must be writable.
enum OcrsStatus ocrs_knapsack_impossibility(size_t n, const char *b, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OCRS_H */
