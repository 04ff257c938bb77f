#include "tsallis/constraints.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "lp.hpp"
#include "tsallis/errors.hpp"

namespace tsallis {

ConstraintSet::ConstraintSet(std::vector<Label> support, std::vector<MomentConstraint> constraints)
    : support_(std::move(support)), constraints_(std::move(constraints)) {
    if (support_.empty()) throw ValidationError("constraint set support is empty");
    for (std::size_t m = 0; m < constraints_.size(); ++m) {
        const auto& c = constraints_[m];
        if (c.values.size() != support_.size()) {
            std::ostringstream os;
            os << "constraint " << m << " has " << c.values.size() << " values for a support of " << support_.size();
            throw ValidationError(os.str());
        }
        if (!std::isfinite(c.target)) throw ValidationError("constraint target must be finite");
        for (double v : c.values) {
            if (!std::isfinite(v)) throw ValidationError("constraint values must be finite");
        }
    }
}

std::size_t ConstraintSet::equality_count() const noexcept {
    return static_cast<std::size_t>(std::count_if(constraints_.begin(), constraints_.end(),
                                                  [](const auto& c) { return c.kind == ConstraintKind::equality; }));
}

bool ConstraintSet::has_inequalities() const noexcept { return equality_count() != constraints_.size(); }

ConstraintSet ConstraintSet::with(MomentConstraint c) const {
    auto cs = constraints_;
    cs.push_back(std::move(c));
    return ConstraintSet(support_, std::move(cs));
}

ConstraintSet ConstraintSet::conjoin(const ConstraintSet& other) const {
    if (other.support_ != support_) throw SupportMismatchError("conjoin: constraint sets have different supports");
    auto cs = constraints_;
    cs.insert(cs.end(), other.constraints_.begin(), other.constraints_.end());
    return ConstraintSet(support_, std::move(cs));
}

ConstraintSet ConstraintSet::relabeled(const Relabeling& perm) const {
    auto cs = constraints_;
    for (auto& c : cs) c.values = relabel_values(support_, c.values, perm);
    return ConstraintSet(support_, std::move(cs));
}

void ConstraintSet::require_independent_equalities() const {
    std::vector<std::size_t> all(support_.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    const auto kept = independent_equalities(*this, all);
    if (kept.size() != equality_count()) {
        std::size_t first_dropped = 0;
        for (std::size_t m = 0, k = 0; m < constraints_.size(); ++m) {
            if (constraints_[m].kind != ConstraintKind::equality) continue;
            if (k < kept.size() && kept[k] == m) {
                ++k;
            } else {
                first_dropped = m;
                break;
            }
        }
        std::ostringstream os;
        os << "equality constraint " << first_dropped
           << " is affinely dependent on normalization and the preceding constraints";
        throw DependentConstraintsError(os.str());
    }
}

std::vector<double> residuals(const ConstraintSet& c, std::span<const double> p) {
    if (p.size() != c.support().size()) throw SupportMismatchError("residuals: support size mismatch");
    std::vector<double> out;
    out.reserve(c.size());
    for (const auto& m : c.constraints()) {
        double e = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) e += p[i] * m.values[i];
        const double r = e - m.target;
        out.push_back(m.kind == ConstraintKind::equality ? r : std::min(0.0, r));
    }
    return out;
}

std::vector<double> residuals(const ConstraintSet& c, const DiscreteDistribution& p) {
    if (p.labels() != c.support()) throw SupportMismatchError("residuals: distribution support differs");
    return residuals(c, p.masses());
}

double max_abs_residual(const ConstraintSet& c, std::span<const double> p) {
    double worst = 0.0;
    for (double r : residuals(c, p)) worst = std::max(worst, std::abs(r));
    return worst;
}

namespace {

using detail::LpProblem;
using detail::LpResult;
using detail::solve_lp;

// Columns: one per allowed state, then (optionally) tau, then one slack per inequality.
struct LpLayout {
    std::vector<std::size_t> states;
    bool with_tau = false;
    std::size_t inequalities = 0;

    std::size_t tau_col() const { return states.size(); }
    std::size_t slack_col(std::size_t k) const { return states.size() + (with_tau ? 1 : 0) + k; }
    std::size_t cols() const { return states.size() + (with_tau ? 1 : 0) + inequalities; }
};

LpProblem build_lp(const ConstraintSet& c, const LpLayout& layout) {
    LpProblem lp;
    const auto n = layout.cols();
    const double k = static_cast<double>(layout.states.size());
    auto add_row = [&](const std::vector<double>* values, double target) -> std::vector<double>& {
        std::vector<double> row(n, 0.0);
        double sum = 0.0;
        for (std::size_t j = 0; j < layout.states.size(); ++j) {
            const double v = values ? (*values)[layout.states[j]] : 1.0;
            row[j] = v;
            sum += v;
        }
        if (layout.with_tau) row[layout.tau_col()] = values ? sum : k;
        lp.a.push_back(std::move(row));
        lp.b.push_back(target);
        return lp.a.back();
    };
    add_row(nullptr, 1.0);
    std::size_t ineq = 0;
    for (const auto& m : c.constraints()) {
        auto& row = add_row(&m.values, m.target);
        if (m.kind == ConstraintKind::inequality_ge) row[layout.slack_col(ineq++)] = -1.0;
    }
    lp.c.assign(n, 0.0);
    return lp;
}

std::size_t count_inequalities(const ConstraintSet& c) { return c.size() - c.equality_count(); }

std::vector<std::size_t> allowed_states(const std::vector<bool>& allowed) {
    std::vector<std::size_t> s;
    for (std::size_t i = 0; i < allowed.size(); ++i) {
        if (allowed[i]) s.push_back(i);
    }
    return s;
}

// Maximizes the smallest mass over the given states; fills the witness on success.
LpResult max_min_mass(const ConstraintSet& c, const std::vector<std::size_t>& states, std::vector<double>& witness) {
    LpLayout layout{states, true, count_inequalities(c)};
    auto lp = build_lp(c, layout);
    lp.c[layout.tau_col()] = 1.0;
    auto res = solve_lp(lp);
    witness.assign(c.support().size(), 0.0);
    if (res.status == LpResult::Status::optimal) {
        const double tau = res.x[layout.tau_col()];
        for (std::size_t j = 0; j < states.size(); ++j) witness[states[j]] = res.x[j] + tau;
        const double total = std::accumulate(witness.begin(), witness.end(), 0.0);
        for (double& w : witness) w /= total;
    }
    return res;
}

}  // namespace

SupportAnalysis analyze_support(const ConstraintSet& c, const std::vector<bool>& allowed) {
    if (allowed.size() != c.support().size()) throw SupportMismatchError("analyze_support: mask size mismatch");
    SupportAnalysis out;
    out.positive_capable.assign(allowed.size(), false);
    const auto states = allowed_states(allowed);
    if (states.empty()) {
        out.violation = 1.0;
        return out;
    }
    auto res = max_min_mass(c, states, out.witness);
    out.violation = res.infeasibility;
    if (res.status == LpResult::Status::infeasible || res.infeasibility > kFeasibilityTolerance) {
        out.witness.clear();
        return out;
    }
    if (res.status != LpResult::Status::optimal) throw Error("feasibility LP did not terminate");
    out.feasible = true;
    constexpr double kPositive = 1e-12;
    if (res.objective > kPositive) {
        for (auto s : states) out.positive_capable[s] = true;
        out.interior = true;
        return out;
    }
    // Boundary: find which states any feasible point can weight.
    LpLayout layout{states, false, count_inequalities(c)};
    const auto base = build_lp(c, layout);
    std::vector<std::size_t> capable;
    for (std::size_t j = 0; j < states.size(); ++j) {
        auto lp = base;
        lp.c[j] = 1.0;
        auto r = solve_lp(lp);
        if (r.status == LpResult::Status::optimal && r.objective > kPositive) {
            out.positive_capable[states[j]] = true;
            capable.push_back(states[j]);
        }
    }
    out.interior = capable.size() == states.size();
    if (capable.empty()) throw Error("feasible constraint set with no positive-capable state");
    auto refined = max_min_mass(c, capable, out.witness);
    if (refined.status != LpResult::Status::optimal) throw Error("witness LP failed on the reduced support");
    return out;
}

FeasibilityResult is_feasible(const ConstraintSet& c) {
    FeasibilityResult out;
    if (c.empty()) {
        out.feasible = true;
        out.witness = DiscreteDistribution::uniform(c.support());
        return out;
    }
    auto a = analyze_support(c, std::vector<bool>(c.support().size(), true));
    out.feasible = a.feasible;
    out.violation = a.violation;
    if (a.feasible) out.witness = DiscreteDistribution::from_weights(c.support(), a.witness);
    return out;
}

std::vector<std::size_t> independent_equalities(const ConstraintSet& c, std::span<const std::size_t> states) {
    std::vector<std::vector<double>> basis;
    auto try_add = [&](std::vector<double> row) {
        const double norm0 = std::sqrt(std::inner_product(row.begin(), row.end(), row.begin(), 0.0));
        if (norm0 == 0.0) return false;
        // Two passes of modified Gram-Schmidt for stability.
        for (int pass = 0; pass < 2; ++pass) {
            for (const auto& b : basis) {
                const double d = std::inner_product(row.begin(), row.end(), b.begin(), 0.0);
                for (std::size_t i = 0; i < row.size(); ++i) row[i] -= d * b[i];
            }
        }
        const double norm = std::sqrt(std::inner_product(row.begin(), row.end(), row.begin(), 0.0));
        if (norm <= kRankTolerance * std::max(1.0, norm0)) return false;
        for (double& x : row) x /= norm;
        basis.push_back(std::move(row));
        return true;
    };
    try_add(std::vector<double>(states.size(), 1.0));
    std::vector<std::size_t> kept;
    for (std::size_t m = 0; m < c.size(); ++m) {
        const auto& con = c.constraints()[m];
        if (con.kind != ConstraintKind::equality) continue;
        std::vector<double> row(states.size());
        for (std::size_t j = 0; j < states.size(); ++j) row[j] = con.values[states[j]];
        if (try_add(std::move(row))) kept.push_back(m);
    }
    return kept;
}

std::pair<double, double> expectation_range(const ConstraintSet& c, std::span<const double> f,
                                            const std::vector<bool>& allowed) {
    const auto states = allowed_states(allowed);
    LpLayout layout{states, false, count_inequalities(c)};
    auto lp = build_lp(c, layout);
    for (std::size_t j = 0; j < states.size(); ++j) lp.c[j] = f[states[j]];
    auto hi = solve_lp(lp);
    for (auto& x : lp.c) x = -x;
    auto lo = solve_lp(lp);
    if (hi.status != LpResult::Status::optimal || lo.status != LpResult::Status::optimal) {
        throw InfeasibleError("expectation_range: constraint set is infeasible", hi.infeasibility);
    }
    return {-lo.objective, hi.objective};
}

}  // namespace tsallis
