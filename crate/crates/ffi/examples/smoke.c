/* Solve the folded-normal preset and print u(0, x = 1, ray 2, l = 0). */
#include <stdio.h>
#include "spider_hjb.h"

int main(void) {
    const char *config = "[instance]\npreset = \"folded_normal\"\n";
    SpiderProblem *problem = NULL;
    SpiderSolution *solution = NULL;
    double value = 0.0;
    if (spider_problem_from_toml(config, &problem) != SPIDER_STATUS_OK ||
        spider_solve(problem, &solution) != SPIDER_STATUS_OK ||
        spider_solution_eval(solution, 0.0, 1.0, 2, 0.0, &value) != SPIDER_STATUS_OK) {
        fprintf(stderr, "spider-hjb: %s\n", spider_last_error());
        spider_problem_free(problem);
        return 1;
    }
    printf("u(0, 1, ray 2, 0) = %.6f\n", value);
    spider_solution_free(solution);
    spider_problem_free(problem);
    return 0;
}
