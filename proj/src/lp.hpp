#pragma once

// Small dense two-phase simplex for the feasibility and support analyses.
// Standard form: maximize c.x subject to A x = b, x >= 0. Bland's rule.

#include <vector>

namespace tsallis::detail {

struct LpProblem {
    std::vector<std::vector<double>> a;  // m rows of n coefficients
    std::vector<double> b;               // m
    std::vector<double> c;               // n, maximized
};

struct LpResult {
    enum class Status { optimal, infeasible, unbounded, iteration_limit };
    Status status = Status::infeasible;
    std::vector<double> x;
    double objective = 0.0;
    /// Phase-1 optimum: total L1 violation of A x = b over x >= 0.
    double infeasibility = 0.0;
};

LpResult solve_lp(const LpProblem& problem);

}  // namespace tsallis::detail
