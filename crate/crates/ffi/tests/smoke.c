#include <math.h>
#include <stdio.h>
#include "vecchia.h"

#define CHECK(cond)                                                  \
    do {                                                             \
        if (!(cond)) {                                               \
            const char *msg = vecchia_last_error();                  \
            fprintf(stderr, "failed: %s (%s)\n", #cond, msg ? msg : ""); \
            return 1;                                                \
        }                                                            \
    } while (0)

int main(void) {
    double x[5] = {0.1, 0.4, 0.3, 0.8, 0.6};
    double y[5] = {0.1, 0.2, 0.7, 0.9, 0.4};
    double v[5] = {1.5, -0.3, 0.8, 2.0, 0.1};
    VecchiaDataset *ds = NULL;
    VecchiaPlanHandle *plan = NULL;
    VecchiaKernel k = {VECCHIA_KERNEL_MATERN, 1.0, 0.2, 0.5};
    double ll = 0.0, exact = 0.0;

    CHECK(vecchia_dataset_new(x, y, v, 5, VECCHIA_METRIC_EUCLIDEAN, 0.0, &ds) == VECCHIA_STATUS_OK);
    CHECK(vecchia_dataset_len(ds) == 5);
    CHECK(vecchia_plan_new(ds, 4, VECCHIA_ORDERING_MORTON, 0, &plan) == VECCHIA_STATUS_OK);
    CHECK(vecchia_loglik(ds, plan, &k, &ll) == VECCHIA_STATUS_OK);
    CHECK(vecchia_exact_loglik(ds, &k, 100, &exact) == VECCHIA_STATUS_OK);
    CHECK(fabs(ll - exact) <= 1e-10 * fabs(exact));

    vecchia_plan_free(plan);
    plan = NULL;
    CHECK(vecchia_plan_new(ds, 0, VECCHIA_ORDERING_RANDOM, 0, &plan) == VECCHIA_STATUS_SIZE_ERROR);
    CHECK(vecchia_last_error() != NULL);
    CHECK(vecchia_loglik(ds, NULL, &k, &ll) == VECCHIA_STATUS_NULL_POINTER);

    vecchia_plan_free(plan);
    vecchia_dataset_free(ds);
    printf("ok %.6f\n", ll);
    return 0;
}
