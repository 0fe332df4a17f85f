#include <stdio.h>
#include "dpdp.h"

int main(void) {
    DpdpInstance *inst = NULL;
    if (dpdp_instance_generate(DPDP_PROBLEM_VRP, 10, 7, 0.0, &inst) != DPDP_STATUS_OK) {
        fprintf(stderr, "generate: %s\n", dpdp_last_error());
        return 1;
    }
    DpdpConfig cfg = dpdp_config_default();
    cfg.beam_size = 100;
    cfg.policy = DPDP_POLICY_COST_HEAT_POTENTIAL;
    DpdpSolution *sol = NULL;
    if (dpdp_solve(inst, NULL, &cfg, &sol) != DPDP_STATUS_OK) {
        fprintf(stderr, "solve: %s\n", dpdp_last_error());
        return 1;
    }
    size_t routes = dpdp_solution_route_count(sol);
    size_t visited = 0;
    for (size_t r = 0; r < routes; r++) {
        size_t buf[32];
        size_t len = dpdp_solution_route(sol, r, buf, 32);
        if (len < 3 || buf[0] != 0 || buf[len - 1] != 0) return 2;
        visited += len - 2;
    }
    printf("cost=%.9f routes=%zu visited=%zu\n", dpdp_solution_cost(sol), routes, visited);
    dpdp_solution_free(sol);
    dpdp_instance_free(inst);
    return visited == 10 ? 0 : 3;
}
