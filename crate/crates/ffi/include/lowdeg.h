#ifndef LOWDEG_H
#define LOWDEG_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum LdStatus {
  LD_STATUS_OK = 0,
  LD_STATUS_NULL_POINTER = 1,
  LD_STATUS_INVALID_ARGUMENT = 2,
  LD_STATUS_SIZE_LIMIT = 3,
  LD_STATUS_PRECONDITION = 4,
  LD_STATUS_BUFFER_TOO_SMALL = 5,
  LD_STATUS_INTERNAL = 6,
} LdStatus;

/**
 * Opaque catalog of multigraph classes.
 */
typedef struct LdCatalog LdCatalog;

/**
 * Opaque memoised r-value table for a pair of priors.
 */
typedef struct LdRTable LdRTable;

typedef struct LdClassInfo {
  /**
   * Edge count.
   */
  uint32_t d;
  /**
   * Non-isolated vertex count.
   */
  size_t v;
  uint64_t automorphisms;
  size_t components;
  /**
   * Every component contains a cycle (loops count).
   */
  bool cyclic;
} LdClassInfo;

/**
 * Community structure shared by both model families.
 */
typedef struct LdCommunities {
  uint64_t n;
  /**
   * Expected number of planted vertices.
   */
  double k;
  /**
   * `m` community proportions summing to one.
   */
  const double *x;
  size_t m;
  /**
   * Constant with `m * min(x) >= c`, `0 < c <= 1`.
   */
  double c;
} LdCommunities;

typedef struct LdGaussianParams {
  struct LdCommunities communities;
  double lambda;
} LdGaussianParams;

typedef struct LdBinaryParams {
  struct LdCommunities communities;
  double q;
  double s;
  double tau1;
} LdBinaryParams;

typedef struct LdAdvantage {
  double total_bound;
  /**
   * `+inf` when the geometric series diverges.
   */
  double series_bound;
  size_t m_hat;
  size_t m_tilde;
  size_t classes_summed;
  bool forests_dropped;
} LdAdvantage;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *ld_version(void);

/**
 * Message for the last failed call on this thread; empty after a success.
 * Valid until the next call on the same thread.
 */
const char *ld_last_error_message(void);

/**
 * Enumerates classes with at most `d_max` edges.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum LdStatus ld_catalog_enumerate(uint32_t d_max,
                                   bool allow_loops,
                                   bool require_cyclic_components,
                                   struct LdCatalog **out);

/**
 * Number of classes; 0 for a null handle.
 *
 * # Safety
 * `cat` must be null or a live handle from `ld_catalog_enumerate`.
 */
size_t ld_catalog_len(const struct LdCatalog *cat);

/**
 * # Safety
 * `cat` must be a live handle; `out` must be valid for writes.
 */
enum LdStatus ld_catalog_class_info(const struct LdCatalog *cat,
                                    size_t index,
                                    struct LdClassInfo *out);

/**
 * Writes the class's edge list (for example `0-1 1-2 0-2*2`) into `buf`.
 * `needed` receives the required size including the terminator; a
 * too-small buffer yields `LD_STATUS_BUFFER_TOO_SMALL`.
 *
 * # Safety
 * `cat` must be a live handle; `buf` must be valid for `len` bytes (or null
 * with `len == 0`); `needed` must be null or valid for writes.
 */
enum LdStatus ld_catalog_class_edges(const struct LdCatalog *cat,
                                     size_t index,
                                     char *buf,
                                     size_t len,
                                     size_t *needed);

/**
 * # Safety
 * `cat` must be null or a handle not freed before.
 */
void ld_catalog_free(struct LdCatalog *cat);

/**
 * r-value table for two Gaussian models.
 *
 * # Safety
 * Parameter pointers must be valid; `out` must be valid for writes.
 */
enum LdStatus ld_rtable_new_gaussian(const struct LdGaussianParams *p,
                                     const struct LdGaussianParams *q,
                                     struct LdRTable **out);

/**
 * r-value table for two binary models, on the mean matrices without the
 * constant `q`.
 *
 * # Safety
 * As `ld_rtable_new_gaussian`.
 */
enum LdStatus ld_rtable_new_binary(const struct LdBinaryParams *p,
                                   const struct LdBinaryParams *q,
                                   struct LdRTable **out);

/**
 * r-value of the multigraph given as an edge list such as `0-1 1-2 0-2`.
 * `value` receives the nearest double; if `buf` is non-null the exact
 * value is written there as `p/q` text.
 *
 * # Safety
 * `table` must be a live handle, `edges` a NUL-terminated string, `value`
 * valid for writes; `buf`/`len`/`needed` as in `ld_catalog_class_edges`.
 */
enum LdStatus ld_rtable_r_value(const struct LdRTable *table,
                                const char *edges,
                                double *value,
                                char *buf,
                                size_t len,
                                size_t *needed);

/**
 * # Safety
 * `table` must be null or a handle not freed before.
 */
void ld_rtable_free(struct LdRTable *table);

/**
 * Gaussian advantage bound at degree `d_max`, evaluated at `p`'s `n`.
 *
 * # Safety
 * Parameter pointers must be valid; `out` must be valid for writes.
 */
enum LdStatus ld_advantage_gaussian(const struct LdGaussianParams *p,
                                    const struct LdGaussianParams *q,
                                    uint32_t d_max,
                                    struct LdAdvantage *out);

/**
 * Binary advantage bound at degree `d_max`, evaluated at `p`'s `n`.
 *
 * # Safety
 * As `ld_advantage_gaussian`.
 */
enum LdStatus ld_advantage_binary(const struct LdBinaryParams *p,
                                  const struct LdBinaryParams *q,
                                  uint32_t d_max,
                                  struct LdAdvantage *out);

/**
 * Fills `y` (row-major `n × n`, `n` from the params) with a Gaussian sample.
 *
 * # Safety
 * `p` must be valid; `y` must be valid for `n * n` writes.
 */
enum LdStatus ld_sample_gaussian(const struct LdGaussianParams *p, uint64_t seed, double *y);

/**
 * Fills `adj` (row-major `n × n`, entries 0/1) with a binary sample.
 *
 * # Safety
 * `p` must be valid; `adj` must be valid for `n * n` writes.
 */
enum LdStatus ld_sample_binary(const struct LdBinaryParams *p, uint64_t seed, uint8_t *adj);

/**
 * Diagonal sum of a symmetric row-major `n × n` matrix.
 *
 * # Safety
 * `y` must be valid for `n * n` reads; `out` valid for writes.
 */
enum LdStatus ld_diag_sum(const double *y, size_t n, double *out);

/**
 * Signed triangle count `Σ_{i<j<k} (A_ij - q)(A_ik - q)(A_jk - q)` of a
 * symmetric 0/1 adjacency matrix with zero diagonal.
 *
 * # Safety
 * `adj` must be valid for `n * n` reads; `out` valid for writes.
 */
enum LdStatus ld_signed_triangles(const uint8_t *adj, size_t n, double q, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LOWDEG_H */
