#ifndef DPDP_H
#define DPDP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DpdpPolicy {
  DPDP_POLICY_HEAT_POTENTIAL = 0,
  DPDP_POLICY_HEAT = 1,
  DPDP_POLICY_COST_HEAT_POTENTIAL = 2,
  DPDP_POLICY_COST_HEAT = 3,
  DPDP_POLICY_COST = 4,
} DpdpPolicy;

typedef enum DpdpProblem {
  DPDP_PROBLEM_TSP = 0,
  DPDP_PROBLEM_VRP = 1,
  DPDP_PROBLEM_TSPTW = 2,
} DpdpProblem;

typedef enum DpdpSparsity {
  /**
   * Keep edges whose heat is at least `threshold`.
   */
  DPDP_SPARSITY_THRESHOLD = 0,
  /**
   * Keep each node's `knn` nearest neighbours.
   */
  DPDP_SPARSITY_KNN = 1,
  DPDP_SPARSITY_COMPLETE = 2,
} DpdpSparsity;

/**
 * Result code of every fallible call.
 */
typedef enum DpdpStatus {
  DPDP_STATUS_OK = 0,
  /**
   * The solve finished without a feasible solution.
   */
  DPDP_STATUS_NO_SOLUTION = 1,
  /**
   * A null pointer, out-of-range value or inconsistent argument.
   */
  DPDP_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Malformed or invalid instance or heatmap data.
   */
  DPDP_STATUS_INVALID_INPUT = 3,
  DPDP_STATUS_IO = 4,
  DPDP_STATUS_INTERNAL = 5,
} DpdpStatus;

typedef struct DpdpHeatmap DpdpHeatmap;

typedef struct DpdpInstance DpdpInstance;

typedef struct DpdpSolution DpdpSolution;

/**
 * Solver settings; start from [`dpdp_config_default`].
 */
typedef struct DpdpConfig {
  size_t beam_size;
  enum DpdpPolicy policy;
  bool invert_cost_heat;
  enum DpdpSparsity sparsity;
  double threshold;
  size_t knn;
  bool dominance;
  bool score_bound_prefilter;
} DpdpConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next call into this library on the same thread.
 */
const char *dpdp_last_error(void);

/**
 * Defaults: beam 1000, heat + potential, threshold 1e-5, dominance on,
 * prefilter off.
 */
struct DpdpConfig dpdp_config_default(void);

/**
 * Reads a JSON instance file into `*out`.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a writable pointer.
 */
enum DpdpStatus dpdp_instance_read(const char *path, struct DpdpInstance **out);

/**
 * Generates a random instance. `n` counts customers for VRP and all nodes
 * otherwise; `max_window` is only used for TSPTW.
 *
 * # Safety
 * `out` must be a writable pointer.
 */
enum DpdpStatus dpdp_instance_generate(enum DpdpProblem problem,
                                       size_t n,
                                       uint64_t seed,
                                       double max_window,
                                       struct DpdpInstance **out);

/**
 * Number of nodes, depot included; 0 for a null handle.
 *
 * # Safety
 * `instance` must be null or a live handle.
 */
size_t dpdp_instance_len(const struct DpdpInstance *instance);

/**
 * # Safety
 * `instance` must be a live handle.
 */
enum DpdpProblem dpdp_instance_problem(const struct DpdpInstance *instance);

/**
 * # Safety
 * `instance` must be null or a handle not yet freed.
 */
void dpdp_instance_free(struct DpdpInstance *instance);

/**
 * Reads a dense or sparse heatmap file for an `n`-node instance.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a writable pointer.
 */
enum DpdpStatus dpdp_heatmap_read(const char *path, size_t n, struct DpdpHeatmap **out);

/**
 * # Safety
 * `heatmap` must be null or a handle not yet freed.
 */
void dpdp_heatmap_free(struct DpdpHeatmap *heatmap);

/**
 * Solves `instance`. `heatmap` may be null to use the cost heuristic and
 * `config` may be null for the defaults. Returns `NoSolution` (with `*out`
 * null) when no feasible solution was found.
 *
 * # Safety
 * Handles must be live; `out` must be a writable pointer.
 */
enum DpdpStatus dpdp_solve(const struct DpdpInstance *instance,
                           const struct DpdpHeatmap *heatmap,
                           const struct DpdpConfig *config,
                           struct DpdpSolution **out);

/**
 * Total cost; NaN for a null handle.
 *
 * # Safety
 * `solution` must be null or a live handle.
 */
double dpdp_solution_cost(const struct DpdpSolution *solution);

/**
 * Copies the action sequence into `buf` (which may be null) and returns
 * its length.
 *
 * # Safety
 * `solution` must be a live handle; `buf` must hold `capacity` elements.
 */
size_t dpdp_solution_actions(const struct DpdpSolution *solution, size_t *buf, size_t capacity);

/**
 * # Safety
 * `solution` must be null or a live handle.
 */
size_t dpdp_solution_route_count(const struct DpdpSolution *solution);

/**
 * Copies route `index` (depot first and last) into `buf` and returns its
 * length; 0 if `index` is out of range.
 *
 * # Safety
 * `solution` must be a live handle; `buf` must hold `capacity` elements.
 */
size_t dpdp_solution_route(const struct DpdpSolution *solution,
                           size_t index,
                           size_t *buf,
                           size_t capacity);

/**
 * # Safety
 * `solution` must be null or a handle not yet freed.
 */
void dpdp_solution_free(struct DpdpSolution *solution);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DPDP_H */
