#pragma once

// Euclidean projection onto {x : E x = b, G x >= h} by a primal active-set
// method started from a feasible point. Dense and meant for desk-scale sizes.

#include <Eigen/Dense>
#include <vector>

namespace tsallis::detail {

struct PolytopeRows {
    Eigen::MatrixXd eq;   // E, independent rows
    Eigen::VectorXd eq_rhs;
    Eigen::MatrixXd ineq;  // G (bounds x_i >= 0 included as unit rows)
    Eigen::VectorXd ineq_rhs;
};

struct ProjectionResult {
    Eigen::VectorXd x;
    /// Multipliers of the equality rows: x - y = E^T eq_mult + G^T ineq_mult.
    Eigen::VectorXd eq_multipliers;
    /// Multipliers of the inequality rows, >= 0 at a solution; 0 when inactive.
    Eigen::VectorXd ineq_multipliers;
    bool converged = false;
    int iterations = 0;
};

/// `start` must satisfy the rows; the result stays feasible throughout.
ProjectionResult project(const PolytopeRows& rows, const Eigen::VectorXd& y, const Eigen::VectorXd& start);

}  // namespace tsallis::detail
