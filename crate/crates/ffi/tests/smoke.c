#include <math.h>
#include <stdio.h>
#include "aggregative.h"

int main(void) {
    double q = 1.0, c = 1.0, offsets[2] = {-2.0, -2.0};
    double lo[2] = {0.0, 0.0}, hi[2] = {2.0, 2.0}, cap = 0.5;
    AggGame *game = NULL;
    if (agg_game_quadratic(2, 1, &q, &c, offsets, lo, hi, &cap, &game) != AGG_STATUS_OK) {
        fprintf(stderr, "build: %s\n", agg_last_error());
        return 1;
    }
    AggSolverOptions opts = agg_solver_options_default();
    opts.tol = 1e-9;
    AggResult *res = NULL;
    if (agg_solve(game, AGG_ALGORITHM_APA_NASH, &opts, &res) != AGG_STATUS_OK) {
        fprintf(stderr, "solve: %s\n", agg_last_error());
        return 1;
    }
    double x[2], lambda[1];
    agg_result_strategies(res, x, 2);
    agg_result_multipliers(res, lambda, 1);
    printf("x = %.6f %.6f lambda = %.6f\n", x[0], x[1], lambda[0]);
    int ok = agg_result_converged(res) && fabs(x[0] - 0.5) < 1e-6 && fabs(lambda[0] - 1.5) < 1e-5;
    if (agg_result_strategies(res, x, 1) != AGG_STATUS_DIMENSION_MISMATCH || agg_last_error() == NULL) {
        ok = 0;
    }
    agg_result_free(res);
    agg_game_free(game);
    return ok ? 0 : 1;
}
