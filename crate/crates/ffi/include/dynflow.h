#ifndef DYNFLOW_H
#define DYNFLOW_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Result codes of fallible calls.
 */
typedef enum DfStatus {
  DF_STATUS_OK = 0,
  DF_STATUS_NULL_POINTER = 1,
  DF_STATUS_INVALID_ARGUMENT = 2,
  DF_STATUS_IO = 3,
  DF_STATUS_INVALID_INSTANCE = 4,
  DF_STATUS_SOLVER_FAILED = 5,
  DF_STATUS_TIMED_OUT = 6,
  DF_STATUS_OUT_OF_RANGE = 7,
  DF_STATUS_BUFFER_TOO_SMALL = 8,
  DF_STATUS_PANIC = 9,
} DfStatus;

/**
 * A problem instance.
 */
typedef struct DfInstance DfInstance;

/**
 * The result of one solver run.
 */
typedef struct DfSolution DfSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty if none. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *df_last_error(void);

/**
 * Static description of a status code.
 */
const char *df_status_name(enum DfStatus status);

/**
 * Reads an instance file.
 *
 * # Safety
 * `path` must be a valid C string and `out` a valid pointer.
 */
enum DfStatus df_instance_read(const char *path, struct DfInstance **out);

/**
 * Parses an instance from its JSON text.
 *
 * # Safety
 * `json` must be a valid C string and `out` a valid pointer.
 */
enum DfStatus df_instance_from_json(const char *json, struct DfInstance **out);

/**
 * Generates an instance from a named preset.
 *
 * # Safety
 * `preset` must be a valid C string and `out` a valid pointer.
 */
enum DfStatus df_instance_generate(const char *preset,
                                   size_t size,
                                   uint64_t seed,
                                   struct DfInstance **out);

/**
 * Serializes an instance to JSON. Release the string with `df_string_free`.
 *
 * # Safety
 * `instance` must come from this library; `out` must be a valid pointer.
 */
enum DfStatus df_instance_to_json(const struct DfInstance *instance, char **out);

/**
 * # Safety
 * `instance` must be null or come from this library, and not be used after.
 */
void df_instance_free(struct DfInstance *instance);

/**
 * Number of nodes, or 0 for a null handle.
 *
 * # Safety
 * `instance` must be null or come from this library.
 */
size_t df_instance_node_count(const struct DfInstance *instance);

/**
 * Number of commodities, or 0 for a null handle.
 *
 * # Safety
 * `instance` must be null or come from this library.
 */
size_t df_instance_commodity_count(const struct DfInstance *instance);

/**
 * Number of decision steps, or 0 for a null handle.
 *
 * # Safety
 * `instance` must be null or come from this library.
 */
size_t df_instance_horizon(const struct DfInstance *instance);

/**
 * Solves `instance` with the named solver. `config_toml` holds solver
 * settings in TOML and may be null for defaults.
 *
 * # Safety
 * `instance` must come from this library; strings must be valid C strings;
 * `out` must be a valid pointer.
 */
enum DfStatus df_solve(const struct DfInstance *instance,
                       const char *solver,
                       const char *config_toml,
                       struct DfSolution **out);

/**
 * # Safety
 * `solution` must be null or come from this library, and not be used after.
 */
void df_solution_free(struct DfSolution *solution);

/**
 * Objective value (path changes times the change penalty plus penalized
 * overflow); NaN for a null handle.
 *
 * # Safety
 * `solution` must be null or come from this library.
 */
double df_solution_objective(const struct DfSolution *solution);

/**
 * Total number of path changes; 0 for a null handle.
 *
 * # Safety
 * `solution` must be null or come from this library.
 */
size_t df_solution_changes(const struct DfSolution *solution);

/**
 * True when the solver proved optimality.
 *
 * # Safety
 * `solution` must be null or come from this library.
 */
bool df_solution_optimal(const struct DfSolution *solution);

/**
 * True when some step used a fallback path.
 *
 * # Safety
 * `solution` must be null or come from this library.
 */
bool df_solution_degraded(const struct DfSolution *solution);

/**
 * Solver wall time in seconds; NaN for a null handle.
 *
 * # Safety
 * `solution` must be null or come from this library.
 */
double df_solution_wall_time(const struct DfSolution *solution);

/**
 * Overflow ratio; NaN when the instance budget is 0 or the handle is null.
 *
 * # Safety
 * `solution` must be null or come from this library.
 */
double df_solution_overflow_ratio(const struct DfSolution *solution);

/**
 * Path changes over the fewest possible, minus one; NaN for a null handle.
 *
 * # Safety
 * `solution` must be null or come from this library.
 */
double df_solution_path_change_ratio_minus_one(const struct DfSolution *solution);

/**
 * Copies the arc ids of the path of `commodity` at `step` (1-based) into
 * `arcs`. `len` receives the path length; when `capacity` is too small
 * nothing is copied and `BufferTooSmall` is returned.
 *
 * # Safety
 * `solution` must come from this library; `arcs` must point to `capacity`
 * writable elements (or be null when `capacity` is 0); `len` must be valid.
 */
enum DfStatus df_solution_path(const struct DfSolution *solution,
                               size_t commodity,
                               size_t step,
                               size_t *arcs,
                               size_t capacity,
                               size_t *len);

/**
 * The solver report as JSON. Release the string with `df_string_free`.
 *
 * # Safety
 * `solution` must come from this library; `out` must be a valid pointer.
 */
enum DfStatus df_solution_to_json(const struct DfSolution *solution, char **out);

/**
 * # Safety
 * `s` must be null or a string returned by this library, not used after.
 */
void df_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DYNFLOW_H */
