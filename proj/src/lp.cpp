#include "lp.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>

namespace tsallis::detail {

namespace {

constexpr double kPivotEps = 1e-11;

struct Tableau {
    Eigen::MatrixXd t;  // m rows, (n + m + 1) columns; last column is the rhs
    std::vector<int> basis;
    int vars = 0;        // original variables
    int rows = 0;

    int rhs() const { return static_cast<int>(t.cols()) - 1; }

    void pivot(int row, int col) {
        t.row(row) /= t(row, col);
        for (int i = 0; i < rows; ++i) {
            if (i == row) continue;
            const double f = t(i, col);
            if (f != 0.0) t.row(i) -= f * t.row(row);
        }
        basis[row] = col;
    }

    // Maximizes cost over columns [0, allowed_cols); returns false when unbounded.
    LpResult::Status run(const std::vector<double>& cost, int allowed_cols, int max_iter) {
        for (int it = 0; it < max_iter; ++it) {
            int enter = -1;
            for (int j = 0; j < allowed_cols; ++j) {
                double d = cost[j];
                for (int i = 0; i < rows; ++i) d -= cost[basis[i]] * t(i, j);
                if (d > kPivotEps) {
                    enter = j;
                    break;
                }
            }
            if (enter < 0) return LpResult::Status::optimal;
            int leave = -1;
            double best = std::numeric_limits<double>::infinity();
            for (int i = 0; i < rows; ++i) {
                if (t(i, enter) > kPivotEps) {
                    const double ratio = t(i, rhs()) / t(i, enter);
                    if (ratio < best - 1e-15 || (std::abs(ratio - best) <= 1e-15 && leave >= 0 && basis[i] < basis[leave])) {
                        best = ratio;
                        leave = i;
                    }
                }
            }
            if (leave < 0) return LpResult::Status::unbounded;
            pivot(leave, enter);
        }
        return LpResult::Status::iteration_limit;
    }
};

}  // namespace

LpResult solve_lp(const LpProblem& problem) {
    const int m = static_cast<int>(problem.b.size());
    const int n = static_cast<int>(problem.c.size());
    Tableau tab;
    tab.rows = m;
    tab.vars = n;
    tab.t = Eigen::MatrixXd::Zero(m, n + m + 1);
    tab.basis.resize(m);
    for (int i = 0; i < m; ++i) {
        const double sign = problem.b[i] < 0.0 ? -1.0 : 1.0;
        for (int j = 0; j < n; ++j) tab.t(i, j) = sign * problem.a[i][j];
        tab.t(i, n + i) = 1.0;
        tab.t(i, n + m) = sign * problem.b[i];
        tab.basis[i] = n + i;
    }
    const int max_iter = 200 * (n + m + 1);

    LpResult out;
    std::vector<double> phase1(n + m, 0.0);
    for (int i = 0; i < m; ++i) phase1[n + i] = -1.0;
    auto st = tab.run(phase1, n + m, max_iter);
    if (st == LpResult::Status::iteration_limit) {
        out.status = st;
        return out;
    }
    double violation = 0.0;
    for (int i = 0; i < m; ++i) {
        if (tab.basis[i] >= n) violation += std::max(0.0, tab.t(i, tab.rhs()));
    }
    out.infeasibility = violation;
    if (violation > 1e-9) {
        out.status = LpResult::Status::infeasible;
        return out;
    }
    // Drive zero-valued artificials out of the basis where possible.
    for (int i = 0; i < m; ++i) {
        if (tab.basis[i] < n) continue;
        for (int j = 0; j < n; ++j) {
            if (std::abs(tab.t(i, j)) > 1e-9) {
                tab.pivot(i, j);
                break;
            }
        }
    }
    std::vector<double> cost(n + m, 0.0);
    for (int j = 0; j < n; ++j) cost[j] = problem.c[j];
    st = tab.run(cost, n, max_iter);
    out.status = st;
    out.x.assign(n, 0.0);
    for (int i = 0; i < m; ++i) {
        if (tab.basis[i] < n) out.x[tab.basis[i]] = std::max(0.0, tab.t(i, tab.rhs()));
    }
    out.objective = 0.0;
    for (int j = 0; j < n; ++j) out.objective += problem.c[j] * out.x[j];
    return out;
}

}  // namespace tsallis::detail
