#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tsallis/distribution.hpp"

namespace tsallis {

enum class ConstraintKind {
    equality,       ///< sum p u = target
    inequality_ge,  ///< sum p w >= target
};

/// Expectation constraint with the function tabulated on the support.
struct MomentConstraint {
    std::vector<double> values;
    double target = 0.0;
    ConstraintKind kind = ConstraintKind::equality;
};

/// Tolerance of the affine-independence check of equality constraints.
inline constexpr double kRankTolerance = 1e-10;
/// Phase-1 violation up to which a constraint set counts as feasible.
inline constexpr double kFeasibilityTolerance = 1e-9;

/// Linear expectation constraints on a labeled support. Normalization and
/// nonnegativity are implicit. The feasible region is the simplex cut by
/// hyperplanes and half-spaces, hence convex.
class ConstraintSet {
public:
    /// Throws ValidationError on a table of the wrong length or a non-finite entry.
    ConstraintSet(std::vector<Label> support, std::vector<MomentConstraint> constraints = {});

    const std::vector<Label>& support() const noexcept { return support_; }
    const std::vector<MomentConstraint>& constraints() const noexcept { return constraints_; }
    std::size_t size() const noexcept { return constraints_.size(); }
    bool empty() const noexcept { return constraints_.empty(); }

    std::size_t equality_count() const noexcept;
    bool has_inequalities() const noexcept;

    /// Copy with one more constraint.
    ConstraintSet with(MomentConstraint c) const;
    /// Constraints of both sets on the same support.
    ConstraintSet conjoin(const ConstraintSet& other) const;
    /// Same constraints with every table permuted by `perm`.
    ConstraintSet relabeled(const Relabeling& perm) const;

    /// Throws DependentConstraintsError when {1, u_1, ..., u_M} (equalities
    /// only) are linearly dependent as vectors over the support.
    void require_independent_equalities() const;

private:
    std::vector<Label> support_;
    std::vector<MomentConstraint> constraints_;
};

/// Equalities report sum p u - target; inequalities report min(0, sum p w - target).
std::vector<double> residuals(const ConstraintSet& c, const DiscreteDistribution& p);
std::vector<double> residuals(const ConstraintSet& c, std::span<const double> p);
double max_abs_residual(const ConstraintSet& c, std::span<const double> p);

struct FeasibilityResult {
    bool feasible = false;
    /// Minimum total (L1) violation over the simplex.
    double violation = 0.0;
    /// Most interior feasible point (maximizes the smallest mass) when feasible.
    std::optional<DiscreteDistribution> witness;
};

FeasibilityResult is_feasible(const ConstraintSet& c);

/// Geometry of the feasible set restricted to states allowed to carry mass.
struct SupportAnalysis {
    bool feasible = false;
    double violation = 0.0;
    /// States some feasible p can weight; a subset of the allowed states.
    std::vector<bool> positive_capable;
    /// Feasible point strictly positive on every positive-capable state.
    std::vector<double> witness;
    /// True when every allowed state is positive-capable.
    bool interior = false;
};

/// `allowed[i] == false` pins p_i = 0.
SupportAnalysis analyze_support(const ConstraintSet& c, const std::vector<bool>& allowed);

/// Indices of a maximal set of equality constraints that is linearly
/// independent together with the all-ones row, restricted to `states`.
/// Greedy in constraint order.
std::vector<std::size_t> independent_equalities(const ConstraintSet& c, std::span<const std::size_t> states);

/// Smallest and largest sum p f over the feasible set (restricted to allowed states).
std::pair<double, double> expectation_range(const ConstraintSet& c, std::span<const double> f,
                                            const std::vector<bool>& allowed);

}  // namespace tsallis
