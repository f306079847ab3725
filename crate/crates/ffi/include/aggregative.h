#ifndef AGGREGATIVE_H
#define AGGREGATIVE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result codes of every fallible call.
 */
typedef enum AggStatus {
  AGG_STATUS_OK = 0,
  AGG_STATUS_NULL_POINTER = 1,
  AGG_STATUS_INVALID_ARGUMENT = 2,
  AGG_STATUS_DIMENSION_MISMATCH = 3,
  AGG_STATUS_INFEASIBLE = 4,
  AGG_STATUS_NOT_STRONGLY_MONOTONE = 5,
  AGG_STATUS_SOLVER_FAILURE = 6,
  AGG_STATUS_PANIC = 7,
} AggStatus;

typedef enum AggAlgorithm {
  /*
   Two-level scheme (Wardrop).
   */
  AGG_ALGORITHM_TWO_LEVEL = 0,
  /*
   Asymmetric projection algorithm on the Nash operator.
   */
  AGG_ALGORITHM_APA_NASH = 1,
  /*
   Asymmetric projection algorithm on the Wardrop operator.
   */
  AGG_ALGORITHM_APA_WARDROP = 2,
  AGG_ALGORITHM_EXTRAGRADIENT_NASH = 3,
  AGG_ALGORITHM_EXTRAGRADIENT_WARDROP = 4,
} AggAlgorithm;

/*
 Opaque game handle.
 */
typedef struct AggGame AggGame;

/*
 Opaque solver result handle.
 */
typedef struct AggResult AggResult;

typedef struct AggSolverOptions {
  double tol;
  size_t max_iter;
  /*
   Fixed step size; zero or negative selects it from the operator constants.
   */
  double tau;
  uint64_t seed;
} AggSolverOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread, or NULL. The pointer stays
 valid until the next call into this library from the same thread.
 */
const char *agg_last_error(void);

struct AggSolverOptions agg_solver_options_default(void);

/*
 Quadratic game J_i = 1/2 x'Qx + (C sigma + offset_i)'x on boxes
 lo_i <= x_i <= hi_i. `q` and `c` are n x n; `offsets`, `lo`, `hi` are
 m x n. `cap` (length n, may be NULL for no coupling) bounds the average
 strategy componentwise.

 # Safety
 Every non-null pointer must reference the stated number of readable values;
 `out` must be writable.
 */
enum AggStatus agg_game_quadratic(size_t m,
                                  size_t n,
                                  const double *q,
                                  const double *c,
                                  const double *offsets,
                                  const double *lo,
                                  const double *hi,
                                  const double *cap,
                                  struct AggGame **out);

/*
 EV charging game with `m` randomly drawn vehicles over 24 hourly slots and
 the bundled demand profile; `cap` bounds the average charging rate per slot.

 # Safety
 `out` must be writable.
 */
enum AggStatus agg_game_ev(size_t m, uint64_t seed, double cap, struct AggGame **out);

/*
 # Safety
 `game` must be NULL or a handle from this library that was not yet freed.
 */
void agg_game_free(struct AggGame *game);

/*
 Number of agents, or 0 for NULL.

 # Safety
 `game` must be NULL or a live handle.
 */
size_t agg_game_agents(const struct AggGame *game);

/*
 Strategy dimension per agent, or 0 for NULL.

 # Safety
 `game` must be NULL or a live handle.
 */
size_t agg_game_components(const struct AggGame *game);

/*
 Number of coupling constraints, or 0 for NULL.

 # Safety
 `game` must be NULL or a live handle.
 */
size_t agg_game_constraints(const struct AggGame *game);

/*
 Solves `game`. `options` may be NULL for the defaults. Running out of
 iterations is not an error: check [`agg_result_converged`].

 # Safety
 `game` must be a live handle, `options` NULL or readable, `out` writable.
 */
enum AggStatus agg_solve(const struct AggGame *game,
                         enum AggAlgorithm algorithm,
                         const struct AggSolverOptions *options,
                         struct AggResult **out);

/*
 # Safety
 `result` must be NULL or a handle from this library that was not yet freed.
 */
void agg_result_free(struct AggResult *result);

/*
 1 when the stopping rule was met, 0 otherwise (and for NULL).

 # Safety
 `result` must be NULL or a live handle.
 */
int agg_result_converged(const struct AggResult *result);

/*
 # Safety
 `result` must be NULL or a live handle.
 */
size_t agg_result_iterations(const struct AggResult *result);

/*
 Copies the m x n strategy profile (agent-major) into `out`; `len` must be m n.

 # Safety
 `result` must be a live handle and `out` writable for `len` values.
 */
enum AggStatus agg_result_strategies(const struct AggResult *result, double *out, size_t len);

/*
 Copies the average strategy (length n) into `out`.

 # Safety
 `result` must be a live handle and `out` writable for `len` values.
 */
enum AggStatus agg_result_aggregate(const struct AggResult *result, double *out, size_t len);

/*
 Copies the coupling multipliers into `out`; `len` must equal
 [`agg_game_constraints`].

 # Safety
 `result` must be a live handle and `out` writable for `len` values.
 */
enum AggStatus agg_result_multipliers(const struct AggResult *result, double *out, size_t len);

/*
 Largest gain any agent gets from a unilateral feasible deviation.

 # Safety
 `game` and `result` must be live handles and `epsilon` writable.
 */
enum AggStatus agg_epsilon_nash(const struct AggGame *game,
                                const struct AggResult *result,
                                double *epsilon);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AGGREGATIVE_H */
