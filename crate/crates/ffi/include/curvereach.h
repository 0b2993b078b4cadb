#ifndef CURVEREACH_H
#define CURVEREACH_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every entry point.
 */
typedef enum CrStatus {
  CR_STATUS_OK = 0,
  CR_STATUS_NULL_POINTER = 1,
  CR_STATUS_INVALID_ARGUMENT = 2,
  CR_STATUS_PARSE = 3,
  CR_STATUS_INVARIANT = 4,
  CR_STATUS_IO = 5,
  CR_STATUS_OUTSIDE_MAP = 6,
  CR_STATUS_PANIC = 7,
} CrStatus;

/**
 * Opaque plan handle.
 */
typedef struct CrPlan CrPlan;

/**
 * Opaque verification result; keeps a copy of its plan for queries.
 */
typedef struct CrResult CrResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last error on this thread, or null. Valid until the next
 * failing call on the same thread.
 */
const char *cr_last_error(void);

/**
 * Parses a plan from text in the plan-file format.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum CrStatus cr_plan_parse(const char *text, struct CrPlan **out);

/**
 * Reads a plan file from disk.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum CrStatus cr_plan_load(const char *path, struct CrPlan **out);

/**
 * Releases a plan; null is ignored.
 *
 * # Safety
 * `plan` must come from `cr_plan_parse`/`cr_plan_load` and not be used again.
 */
void cr_plan_free(struct CrPlan *plan);

/**
 * Runs the border expansion at resolution `m`; `threads == 0` uses the
 * default pool.
 *
 * # Safety
 * `plan` must be a live plan handle and `out` a valid pointer.
 */
enum CrStatus cr_verify(const struct CrPlan *plan, size_t m, size_t threads, struct CrResult **out);

/**
 * Releases a result; null is ignored.
 *
 * # Safety
 * `result` must come from `cr_verify` and not be used again.
 */
void cr_result_free(struct CrResult *result);

/**
 * Sweep count and number of marked bits of a result.
 *
 * # Safety
 * `result` must be a live handle; output pointers must be valid.
 */
enum CrStatus cr_result_stats(const struct CrResult *result,
                              size_t *iterations,
                              uint64_t *marked_bits);

/**
 * Classifies a world configuration (`theta` in radians). `reachable` is set
 * to 1 or 0.
 *
 * # Safety
 * `result` must be a live handle and `reachable` a valid pointer.
 */
enum CrStatus cr_query(const struct CrResult *result,
                       double x,
                       double y,
                       double theta,
                       int32_t *reachable);

/**
 * Writes one `.crbm` file per interior border into an existing directory.
 *
 * # Safety
 * `result` must be a live handle and `dir` a NUL-terminated string.
 */
enum CrStatus cr_result_write_bitmaps(const struct CrResult *result, const char *dir);

/**
 * Storage model: bits of the border encoding and of a dense 3-D grid for an
 * `n × n` map at resolution `m`. Fails if a count exceeds 64 bits.
 *
 * # Safety
 * Output pointers must be valid.
 */
enum CrStatus cr_storage_bits(uint64_t n, uint64_t m, uint64_t *border_bits, uint64_t *dense_bits);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CURVEREACH_H */
