#ifndef COPG_H
#define COPG_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum CopgStatus {
  COPG_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  COPG_STATUS_NULL_POINTER = 1,
  /**
   * Arguments or inputs violate a precondition.
   */
  COPG_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Reading or writing a file failed.
   */
  COPG_STATUS_IO = 3,
  /**
   * Training or autodiff produced non-finite values.
   */
  COPG_STATUS_NUMERICAL = 4,
  /**
   * An internal panic was caught.
   */
  COPG_STATUS_PANIC = 5,
} CopgStatus;

/**
 * Undirected graph handle.
 */
typedef struct CopgGraph CopgGraph;

/**
 * Precomputed random-walk neighborhoods.
 */
typedef struct CopgWalks CopgWalks;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *copg_version(void);

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next `copg_*` call on the same thread.
 */
const char *copg_last_error(void);

/**
 * Builds a graph with `num_nodes` nodes from `num_edges` pairs
 * `(src[i], dst[i])`. Duplicate and reversed pairs collapse into one
 * undirected edge; self-loops are ignored.
 *
 * # Safety
 * `src` and `dst` must point to `num_edges` readable values and `out`
 * to writable storage for one pointer.
 */
enum CopgStatus copg_graph_from_edges(size_t num_nodes,
                                      const uint32_t *src,
                                      const uint32_t *dst,
                                      size_t num_edges,
                                      struct CopgGraph **out);

/**
 * Reads a COPG1 graph file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` writable.
 */
enum CopgStatus copg_graph_read(const char *path, struct CopgGraph **out);

/**
 * Writes `graph` as a COPG1 file.
 *
 * # Safety
 * `graph` must be a live handle and `path` a NUL-terminated string.
 */
enum CopgStatus copg_graph_write(const struct CopgGraph *graph, const char *path);

/**
 * Planted-partition graph: `n` nodes in `clusters` contiguous blocks,
 * edge probability `p_in` inside a block and `p_out` across.
 *
 * # Safety
 * `out` must be writable.
 */
enum CopgStatus copg_graph_planted(size_t n,
                                   size_t clusters,
                                   double p_in,
                                   double p_out,
                                   uint64_t seed,
                                   struct CopgGraph **out);

/**
 * Number of nodes; 0 for a null handle.
 *
 * # Safety
 * `graph` must be null or a live handle.
 */
size_t copg_graph_num_nodes(const struct CopgGraph *graph);

/**
 * Number of undirected edges; 0 for a null handle.
 *
 * # Safety
 * `graph` must be null or a live handle.
 */
size_t copg_graph_num_edges(const struct CopgGraph *graph);

/**
 * Copies the sorted neighbors of `node` into `buf` (up to `cap`) and
 * stores the full degree in `degree`.
 *
 * # Safety
 * `graph` must be live, `buf` writable for `cap` values (may be null
 * when `cap` is 0) and `degree` writable.
 */
enum CopgStatus copg_graph_neighbors(const struct CopgGraph *graph,
                                     uint32_t node,
                                     uint32_t *buf,
                                     size_t cap,
                                     size_t *degree);

/**
 * Releases a graph. Null is ignored.
 *
 * # Safety
 * `graph` must be null or a handle not yet freed.
 */
void copg_graph_free(struct CopgGraph *graph);

/**
 * Random-walk importance neighborhoods: `num_walks` walks of
 * `walk_length` steps from every node, keeping the `top_k` most visited.
 *
 * # Safety
 * `graph` must be live and `out` writable.
 */
enum CopgStatus copg_walks_compute(const struct CopgGraph *graph,
                                   size_t num_walks,
                                   size_t walk_length,
                                   size_t top_k,
                                   uint64_t seed,
                                   struct CopgWalks **out);

/**
 * Copies up to `cap` (neighbor, weight) entries of `node`; weights sum
 * to 1 over the full list. The full length goes to `len`.
 *
 * # Safety
 * `walks` must be live; `ids` and `weights` writable for `cap` values
 * (may be null when `cap` is 0); `len` writable.
 */
enum CopgStatus copg_walks_neighbors(const struct CopgWalks *walks,
                                     uint32_t node,
                                     uint32_t *ids,
                                     double *weights,
                                     size_t cap,
                                     size_t *len);

/**
 * Releases a walk table. Null is ignored.
 *
 * # Safety
 * `walks` must be null or a handle not yet freed.
 */
void copg_walks_free(struct CopgWalks *walks);

/**
 * ROC AUC with tied scores counted as half.
 *
 * # Safety
 * `scores` and `labels` must hold `n` values; `out` must be writable.
 */
enum CopgStatus copg_auc(const double *scores, const double *labels, size_t n, double *out);

/**
 * Average precision over the ranking by descending score.
 *
 * # Safety
 * `scores` and `labels` must hold `n` values; `out` must be writable.
 */
enum CopgStatus copg_average_precision(const double *scores,
                                       const double *labels,
                                       size_t n,
                                       double *out);

/**
 * Runs the `copg` command line with `argc` arguments (including the
 * program name) and returns its exit code.
 *
 * # Safety
 * `argv` must hold `argc` NUL-terminated strings.
 */
int copg_cli_main(int argc, const char *const *argv);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COPG_H */
