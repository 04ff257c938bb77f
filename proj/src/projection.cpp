#include "projection.hpp"

#include <algorithm>
#include <cmath>

namespace tsallis::detail {

ProjectionResult project(const PolytopeRows& rows, const Eigen::VectorXd& y, const Eigen::VectorXd& start) {
    const Eigen::Index n = y.size();
    const Eigen::Index n_eq = rows.eq.rows();
    const Eigen::Index n_in = rows.ineq.rows();
    ProjectionResult out;
    out.x = start;
    out.ineq_multipliers = Eigen::VectorXd::Zero(n_in);
    out.eq_multipliers = Eigen::VectorXd::Zero(n_eq);

    std::vector<bool> working(static_cast<std::size_t>(n_in), false);
    const double scale = std::max(1.0, (start - y).lpNorm<Eigen::Infinity>());
    const double active_tol = 1e-14 * std::max(1.0, start.lpNorm<Eigen::Infinity>());
    for (Eigen::Index j = 0; j < n_in; ++j) {
        if (std::abs(rows.ineq.row(j).dot(start) - rows.ineq_rhs(j)) <= active_tol) working[j] = true;
    }

    const int max_iter = 10 * static_cast<int>(n + n_in) + 50;
    for (int it = 0; it < max_iter; ++it) {
        out.iterations = it + 1;
        std::vector<Eigen::Index> wrows;
        for (Eigen::Index j = 0; j < n_in; ++j) {
            if (working[j]) wrows.push_back(j);
        }
        const Eigen::Index k = n_eq + static_cast<Eigen::Index>(wrows.size());
        Eigen::MatrixXd a(k, n);
        if (n_eq) a.topRows(n_eq) = rows.eq;
        for (std::size_t w = 0; w < wrows.size(); ++w) a.row(n_eq + static_cast<Eigen::Index>(w)) = rows.ineq.row(wrows[w]);

        const Eigen::VectorXd gap = out.x - y;
        Eigen::VectorXd lambda = Eigen::VectorXd::Zero(k);
        if (k > 0) lambda = a.transpose().completeOrthogonalDecomposition().solve(gap);
        const Eigen::VectorXd d = (k > 0 ? Eigen::VectorXd(a.transpose() * lambda) : Eigen::VectorXd::Zero(n)) - gap;

        if (d.lpNorm<Eigen::Infinity>() <= 1e-15 * scale) {
            Eigen::Index worst = -1;
            double worst_val = -1e-14 * scale;
            for (std::size_t w = 0; w < wrows.size(); ++w) {
                const double mu = lambda(n_eq + static_cast<Eigen::Index>(w));
                if (mu < worst_val) {
                    worst_val = mu;
                    worst = wrows[w];
                }
            }
            if (worst < 0) {
                out.eq_multipliers = lambda.head(n_eq);
                out.ineq_multipliers.setZero();
                for (std::size_t w = 0; w < wrows.size(); ++w) {
                    out.ineq_multipliers(wrows[w]) = std::max(0.0, lambda(n_eq + static_cast<Eigen::Index>(w)));
                }
                out.converged = true;
                return out;
            }
            working[worst] = false;
            continue;
        }

        double step = 1.0;
        Eigen::Index blocking = -1;
        for (Eigen::Index j = 0; j < n_in; ++j) {
            if (working[j]) continue;
            const double slope = rows.ineq.row(j).dot(d);
            if (slope < 0.0) {
                const double slack = std::max(0.0, rows.ineq.row(j).dot(out.x) - rows.ineq_rhs(j));
                const double t = slack / -slope;
                if (t < step) {
                    step = t;
                    blocking = j;
                }
            }
        }
        out.x += step * d;
        if (blocking >= 0) {
            working[blocking] = true;
            // Land exactly on the blocking bound to avoid drift below zero.
            const auto row = rows.ineq.row(blocking);
            if ((row.array() != 0.0).count() == 1) {
                Eigen::Index idx;
                row.cwiseAbs().maxCoeff(&idx);
                out.x(idx) = rows.ineq_rhs(blocking) / row(idx);
            }
        }
    }
    return out;
}

}  // namespace tsallis::detail
