#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tsallis/constraints.hpp"
#include "tsallis/distribution.hpp"
#include "tsallis/divergence.hpp"
#include "tsallis/qalgebra.hpp"

namespace tsallis {

struct SolverOptions {
    /// Largest constraint residual accepted in a returned posterior.
    double tolerance = 1e-8;
    /// Constraint residual at which the dual Newton iteration counts as converged.
    double dual_tolerance = 1e-10;
    int max_dual_iterations = 200;
    int max_primal_iterations = 50000;
    /// Step halvings per Newton line search.
    int max_halvings = 30;
    double primal_gradient_tolerance = 1e-10;
    double primal_decrease_tolerance = 1e-14;
    /// Central-difference step on targets and multipliers.
    double fd_step = 1e-5;
    /// Retry with the primal path when the dual path does not converge.
    bool allow_primal_fallback = true;
};

enum class SolveMethod { dual, primal };

const char* to_string(SolveMethod m) noexcept;

/// Minimizer of I_q(p||r) over a constraint set, with its multipliers.
///
/// Three views of the same stationarity condition are reported:
///  - tilt form: p(x) = r(x) [1 - (1-q) sum_m beta_m u_m(x)]^(1/(q-1)) / z_hat, with
///    lambda = z_hat^(1-q). Exists only when the bracket is positive at u = 0
///    (`tilt_representable`); otherwise lambda, betas and z_hat are NaN.
///  - Legendre form: ln_q(r/p) = legendre_lambda - sum_m legendre_betas_m u_m on
///    the positive states; always defined. legendre_lambda = ln_q z_hat and
///    legendre_betas = z_hat^(1-q) betas when the tilt form exists.
///  - multipliers: exact Lagrange multipliers dI_min/d<u_m> = q * legendre_betas.
/// All per-constraint vectors are in constraint order. Inactive inequalities
/// get 0, as do equalities made redundant by a degenerate support.
struct MinimizationResult {
    DiscreteDistribution posterior;

    double lambda = 0.0;
    std::vector<double> betas;
    double z_hat = 1.0;
    bool tilt_representable = true;

    double legendre_lambda = 0.0;
    std::vector<double> legendre_betas;
    std::vector<double> multipliers;

    ExtendedReal divergence_value;
    int iterations = 0;
    double max_constraint_residual = 0.0;
    double max_kkt_residual = 0.0;

    /// States zeroed because their bracket went nonpositive.
    std::vector<Label> cutoff_states;
    /// States that every feasible distribution leaves at zero (boundary targets).
    std::vector<Label> forced_zero_states;
    /// States with zero prior mass, held at zero.
    std::vector<Label> frozen_states;

    SolveMethod method = SolveMethod::dual;
    bool fell_back = false;
    /// Posterior fixed by constraint geometry (boundary target or as many
    /// independent constraints as states); multipliers describe the reduced problem.
    bool degenerate = false;
    std::string notes;
};

/// Minimizes I_q(p||r) subject to c. Equality-only sets go through the dual
/// Newton path (exponential-family Newton at q = 1); sets with inequalities
/// go through the primal path.
///
/// Throws InfeasibleError (including infeasibility once zero-prior states are
/// frozen), DependentConstraintsError, SupportMismatchError, and
/// NonconvergenceError when every path exhausts its iterations.
MinimizationResult minimize(const DiscreteDistribution& prior, const ConstraintSet& c, DeformationOrder q,
                            const SolverOptions& opts = {});

/// Projected-gradient oracle over the simplex cut by the constraints,
/// independent of the dual machinery. Starts from `start` when given (must be
/// feasible, and strictly positive on every state a feasible point can weight
/// when q <= 1), else from the most interior feasible point.
MinimizationResult minimize_primal_oracle(const DiscreteDistribution& prior, const ConstraintSet& c,
                                          DeformationOrder q, const SolverOptions& opts = {},
                                          std::optional<std::span<const double>> start = std::nullopt);

/// Euclidean projections onto the feasible set of (prior, c), with zero-prior
/// and forced-zero states pinned at 0. Used to draw feasible points.
class FeasibleSet {
public:
    FeasibleSet(const DiscreteDistribution& prior, const ConstraintSet& c);
    ~FeasibleSet();
    FeasibleSet(FeasibleSet&&) noexcept;
    FeasibleSet& operator=(FeasibleSet&&) noexcept;

    /// Most interior feasible point.
    const std::vector<double>& witness() const;
    std::vector<double> project(std::span<const double> y) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Finite-difference check of the Legendre pairing between targets and multipliers.
struct LegendreEntry {
    std::size_t constraint = 0;
    /// d I_min / d<u_m> by central differences, re-solving per perturbation.
    double fd_divergence_slope = 0.0;
    /// Exact multiplier q * beta_m (Legendre form); equals beta_m at q = 1.
    double multiplier = 0.0;
    /// beta_m of the Legendre form.
    double beta = 0.0;
    /// d ln_q Z_hat / d beta_m by central differences at fixed beta, with lambda
    /// re-solved from normalization.
    double fd_log_normalizer_slope = 0.0;
    /// sum p^(2-q) r^(q-1) u_m / sum p^(2-q) r^(q-1); equals <u_m> at q = 1.
    double escort_mean = 0.0;
    /// <u_m> under the posterior (the target).
    double mean = 0.0;

    /// |FD - multiplier| / (1 + |multiplier|).
    double slope_gap() const;
    /// |FD - escort_mean| / (1 + |escort_mean|).
    double normalizer_gap() const;
    /// The same two comparisons against beta_m and <u_m>; these vanish only at q = 1.
    double unscaled_slope_gap() const;
    double plain_mean_gap() const;
};

struct LegendreDiagnostics {
    bool available = false;
    std::string reason;
    std::vector<LegendreEntry> entries;

    double max_slope_gap() const;
    double max_normalizer_gap() const;
};

/// Requires an equality-only dual result with no cut-off, forced-zero or
/// degenerate states; otherwise returns `available = false` with a reason.
LegendreDiagnostics legendre_diagnostics(const MinimizationResult& result, const DiscreteDistribution& prior,
                                         const ConstraintSet& c, DeformationOrder q, const SolverOptions& opts = {});

struct DualityCheck {
    DeformationOrder solved_order{1.0};
    MinimizationResult solution;
    /// Fit y(x) = ln_q(p(x) Z'/r(x)) ~ a + sum_m b_m u_m(x) over positive states.
    std::vector<double> coefficients;
    /// Max absolute fit residual, including any positive bracket predicted at
    /// a cut-off state.
    double residual = 0.0;
};

/// Solves at order 2 - q and checks that the posterior is a positive-sign
/// q-exponential tilt of the prior: p = r exp_q(a + sum b u) / Z'.
/// Requires 0 < q < 2 and equality-only constraints.
DualityCheck q_duality_check(const DiscreteDistribution& prior, const ConstraintSet& c, DeformationOrder q,
                             const SolverOptions& opts = {});

}  // namespace tsallis
