#include "tsallis/solver.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <numeric>
#include <sstream>

#include "projection.hpp"
#include "tsallis/errors.hpp"

namespace tsallis {

const char* to_string(SolveMethod m) noexcept {
    switch (m) {
        case SolveMethod::dual: return "dual";
        case SolveMethod::primal: return "primal";
    }
    return "unknown";
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kActiveTolerance = 1e-9;

// The states a feasible posterior can weight, with the equality constraints
// that stay independent on them.
struct Reduced {
    std::vector<std::size_t> states;
    std::vector<double> r;
    std::vector<std::size_t> kept;
    std::vector<std::size_t> inequalities;
    Eigen::MatrixXd u;  // states x kept
    Eigen::VectorXd t;
    Eigen::MatrixXd w;  // states x inequalities
    Eigen::VectorXd s;
    std::vector<double> witness;  // on states
    std::vector<bool> frozen;
    std::vector<bool> forced_zero;
};

Reduced reduce(const DiscreteDistribution& prior, const ConstraintSet& c) {
    if (prior.labels() != c.support()) throw SupportMismatchError("prior and constraint set have different supports");
    c.require_independent_equalities();

    const std::size_t n = prior.size();
    std::vector<bool> allowed(n);
    for (std::size_t i = 0; i < n; ++i) allowed[i] = prior[i] > 0.0;
    const SupportAnalysis sa = analyze_support(c, allowed);
    if (!sa.feasible) {
        const bool any_frozen = std::find(allowed.begin(), allowed.end(), false) != allowed.end();
        if (any_frozen && is_feasible(c).feasible)
            throw InfeasibleError("constraints cannot be met once zero-prior states are held at zero", sa.violation);
        throw InfeasibleError("constraint set is infeasible", sa.violation);
    }

    Reduced red;
    red.frozen.assign(n, false);
    red.forced_zero.assign(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        red.frozen[i] = !allowed[i];
        red.forced_zero[i] = allowed[i] && !sa.positive_capable[i];
        if (sa.positive_capable[i]) {
            red.states.push_back(i);
            red.r.push_back(prior[i]);
            red.witness.push_back(sa.witness[i]);
        }
    }
    red.kept = independent_equalities(c, red.states);
    for (std::size_t k = 0; k < c.size(); ++k)
        if (c.constraints()[k].kind == ConstraintKind::inequality_ge) red.inequalities.push_back(k);

    const auto ns = static_cast<Eigen::Index>(red.states.size());
    red.u.resize(ns, static_cast<Eigen::Index>(red.kept.size()));
    red.t.resize(static_cast<Eigen::Index>(red.kept.size()));
    for (std::size_t m = 0; m < red.kept.size(); ++m) {
        const auto& mc = c.constraints()[red.kept[m]];
        red.t[static_cast<Eigen::Index>(m)] = mc.target;
        for (Eigen::Index j = 0; j < ns; ++j) red.u(j, static_cast<Eigen::Index>(m)) = mc.values[red.states[j]];
    }
    red.w.resize(ns, static_cast<Eigen::Index>(red.inequalities.size()));
    red.s.resize(static_cast<Eigen::Index>(red.inequalities.size()));
    for (std::size_t m = 0; m < red.inequalities.size(); ++m) {
        const auto& mc = c.constraints()[red.inequalities[m]];
        red.s[static_cast<Eigen::Index>(m)] = mc.target;
        for (Eigen::Index j = 0; j < ns; ++j) red.w(j, static_cast<Eigen::Index>(m)) = mc.values[red.states[j]];
    }
    return red;
}

detail::PolytopeRows polytope(const Reduced& red) {
    const auto ns = static_cast<Eigen::Index>(red.states.size());
    const auto ne = red.u.cols();
    const auto ni = red.w.cols();
    detail::PolytopeRows rows;
    rows.eq.resize(ne + 1, ns);
    rows.eq.row(0).setOnes();
    rows.eq.bottomRows(ne) = red.u.transpose();
    rows.eq_rhs.resize(ne + 1);
    rows.eq_rhs[0] = 1.0;
    rows.eq_rhs.tail(ne) = red.t;
    rows.ineq.resize(ni + ns, ns);
    rows.ineq.topRows(ni) = red.w.transpose();
    rows.ineq.bottomRows(ns).setIdentity();
    rows.ineq_rhs.resize(ni + ns);
    rows.ineq_rhs.head(ni) = red.s;
    rows.ineq_rhs.tail(ns).setZero();
    return rows;
}

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// ln_{2-q}(x) = (x^(q-1) - 1)/(q - 1) = -ln_q(1/x) for x > 0.
double ratio_log(double p, double r, DeformationOrder q) {
    const double l = std::log(p) - std::log(r);
    if (q.is_classical()) return l;
    return std::expm1((q.value() - 1.0) * l) / (q.value() - 1.0);
}

// Legendre form ln_q(r/p) = lambda - beta . features on the positive states.
struct LegendreForm {
    double lambda = 0.0;
    Eigen::VectorXd beta;
};

LegendreForm fit_legendre(const Eigen::MatrixXd& features, const std::vector<double>& p, const Reduced& red,
                          DeformationOrder q) {
    std::vector<Eigen::Index> pos;
    for (std::size_t j = 0; j < p.size(); ++j)
        if (p[j] > 0.0) pos.push_back(static_cast<Eigen::Index>(j));
    const auto k = features.cols();
    Eigen::MatrixXd design(static_cast<Eigen::Index>(pos.size()), k + 1);
    Eigen::VectorXd y(static_cast<Eigen::Index>(pos.size()));
    for (std::size_t i = 0; i < pos.size(); ++i) {
        const auto row = static_cast<Eigen::Index>(i);
        design(row, 0) = 1.0;
        design.row(row).tail(k) = features.row(pos[i]);
        y[row] = ratio_log(p[static_cast<std::size_t>(pos[i])], red.r[static_cast<std::size_t>(pos[i])], q);
    }
    const Eigen::VectorXd coef = design.completeOrthogonalDecomposition().solve(y);
    return {-coef[0], coef.tail(k)};
}

// Largest violation of stationarity: fit error on positive states and a
// positive bracket predicted at a zeroed state.
double kkt_residual(const LegendreForm& form, const Eigen::MatrixXd& features, const std::vector<double>& p,
                    const Reduced& red, DeformationOrder q) {
    double worst = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) {
        const double predicted = -form.lambda + features.row(static_cast<Eigen::Index>(j)).dot(form.beta);
        if (p[j] > 0.0) {
            worst = std::max(worst, std::abs(ratio_log(p[j], red.r[j], q) - predicted));
        } else if (q.value() > 1.0 && !q.is_classical()) {
            const double bracket = 1.0 + (q.value() - 1.0) * predicted;
            worst = std::max(worst, std::max(0.0, bracket) / (q.value() - 1.0));
        } else {
            worst = std::max(worst, 1.0);
        }
    }
    return worst;
}

struct SolvedState {
    std::vector<double> p;  // on reduced states
    SolveMethod method = SolveMethod::dual;
    int iterations = 0;
    bool degenerate = false;
    std::optional<LegendreForm> legendre;  // over the kept equalities, when known exactly
};

MinimizationResult assemble(const DiscreteDistribution& prior, const ConstraintSet& c, DeformationOrder q,
                            const Reduced& red, SolvedState solved) {
    const std::size_t n = prior.size();
    std::vector<double> full(n, 0.0);
    for (std::size_t j = 0; j < red.states.size(); ++j) full[red.states[j]] = std::max(0.0, solved.p[j]);
    DiscreteDistribution posterior = DiscreteDistribution::from_weights(prior.labels(), full);
    std::vector<double> p(red.states.size());
    for (std::size_t j = 0; j < red.states.size(); ++j) p[j] = posterior[red.states[j]];

    // Fit features: kept equalities, then inequalities active at the posterior.
    std::vector<std::size_t> feature_constraints = red.kept;
    for (std::size_t m = 0; m < red.inequalities.size(); ++m) {
        const double slack = to_eigen(p).dot(red.w.col(static_cast<Eigen::Index>(m))) - red.s[static_cast<Eigen::Index>(m)];
        if (slack <= kActiveTolerance) feature_constraints.push_back(red.inequalities[m]);
    }
    Eigen::MatrixXd features(static_cast<Eigen::Index>(red.states.size()),
                             static_cast<Eigen::Index>(feature_constraints.size()));
    for (std::size_t f = 0; f < feature_constraints.size(); ++f)
        for (std::size_t j = 0; j < red.states.size(); ++j)
            features(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(f)) =
                c.constraints()[feature_constraints[f]].values[red.states[j]];

    const LegendreForm form = solved.legendre && feature_constraints.size() == red.kept.size()
                                  ? *solved.legendre
                                  : fit_legendre(features, p, red, q);

    const double qv = q.value();
    MinimizationResult res{.posterior = posterior};
    res.legendre_betas.assign(c.size(), 0.0);
    for (std::size_t f = 0; f < feature_constraints.size(); ++f)
        res.legendre_betas[feature_constraints[f]] = form.beta[static_cast<Eigen::Index>(f)];
    res.legendre_lambda = form.lambda;
    res.multipliers.resize(c.size());
    for (std::size_t k = 0; k < c.size(); ++k) res.multipliers[k] = qv * res.legendre_betas[k];

    // Tilt form: lambda = 1 + (1-q) lambda_L, z_hat = exp_q(lambda_L), beta = beta_L / lambda.
    if (q.is_classical()) {
        res.tilt_representable = true;
        res.lambda = 1.0;
        res.z_hat = std::exp(form.lambda);
        res.betas = res.legendre_betas;
    } else {
        const double bracket = 1.0 + (1.0 - qv) * form.lambda;
        res.tilt_representable = bracket > 0.0 && std::isfinite(bracket);
        if (res.tilt_representable) {
            res.lambda = bracket;
            res.z_hat = std::exp(std::log1p((1.0 - qv) * form.lambda) / (1.0 - qv));
            res.betas.resize(c.size());
            for (std::size_t k = 0; k < c.size(); ++k) res.betas[k] = res.legendre_betas[k] / bracket;
        } else {
            res.lambda = kNaN;
            res.z_hat = kNaN;
            res.betas.assign(c.size(), kNaN);
        }
    }

    res.divergence_value = tsallis_divergence(posterior, prior, q);
    res.iterations = solved.iterations;
    res.max_constraint_residual = max_abs_residual(c, posterior.masses());
    res.max_kkt_residual = kkt_residual(form, features, p, red, q);
    for (std::size_t f = red.kept.size(); f < feature_constraints.size(); ++f)
        res.max_kkt_residual = std::max(res.max_kkt_residual, -res.multipliers[feature_constraints[f]]);

    for (std::size_t j = 0; j < red.states.size(); ++j)
        if (p[j] == 0.0) res.cutoff_states.push_back(prior.labels()[red.states[j]]);
    for (std::size_t i = 0; i < n; ++i) {
        if (red.forced_zero[i]) res.forced_zero_states.push_back(prior.labels()[i]);
        if (red.frozen[i]) res.frozen_states.push_back(prior.labels()[i]);
    }
    res.method = solved.method;
    res.degenerate = solved.degenerate || !res.forced_zero_states.empty();
    if (!res.tilt_representable) res.notes += "tilt form not representable (1 + (1-q) lambda <= 0); ";
    if (!res.forced_zero_states.empty()) res.notes += "boundary target: forced-zero states removed before solving; ";
    return res;
}

// ---------------------------------------------------------------------------
// Dual path. Centered coordinates v = u - t, potential
//   Phi(b) = (1/q) sum r [1 + (q-1) b.v]_+^(q/(q-1))   (sum r exp(b.v) at q = 1),
// convex with gradient sum r h v, h = [1 + (q-1) b.v]_+^(1/(q-1)). Its minimizer
// puts the tilted family's mean at t; states with a nonpositive bracket (q > 1)
// drop out as the cut-off.

struct DualPoint {
    bool valid = false;
    double log_phi = kInf;
    double log_s = -kInf;              // log sum r h
    double phi_over_s = 0.0;           // Phi / S
    std::vector<double> p;             // normalized r h
    Eigen::VectorXd mean;              // sum p v (constraint residual)
    Eigen::MatrixXd hess;              // Hessian / S
    double residual = kInf;
};

class DualPotential {
public:
    DualPotential(const Reduced& red, DeformationOrder q) : red_(red), q_(q) {
        v_ = red.u.rowwise() - red.t.transpose();
    }

    DualPoint eval(const Eigen::VectorXd& b) const {
        const auto ns = v_.rows();
        const double qv = q_.value();
        const bool classical = q_.is_classical();
        std::vector<double> logw(static_cast<std::size_t>(ns), -kInf);
        std::vector<double> bracket(static_cast<std::size_t>(ns), 1.0);
        DualPoint out;
        for (Eigen::Index j = 0; j < ns; ++j) {
            const double a = v_.row(j).dot(b);
            const auto sj = static_cast<std::size_t>(j);
            if (classical) {
                logw[sj] = std::log(red_.r[sj]) + a;
                continue;
            }
            const double x = (qv - 1.0) * a;
            bracket[sj] = 1.0 + x;
            if (bracket[sj] <= 0.0) {
                if (qv < 1.0) return out;  // outside the domain
                continue;                  // cut off
            }
            logw[sj] = std::log(red_.r[sj]) + std::log1p(x) / (qv - 1.0);
        }
        const double top = *std::max_element(logw.begin(), logw.end());
        if (!std::isfinite(top)) return out;
        double total = 0.0;
        for (double lw : logw) total += std::exp(lw - top);
        out.log_s = top + std::log(total);
        out.p.resize(static_cast<std::size_t>(ns));
        for (std::size_t j = 0; j < out.p.size(); ++j) out.p[j] = std::exp(logw[j] - out.log_s);

        const auto m = v_.cols();
        out.mean = Eigen::VectorXd::Zero(m);
        out.hess = Eigen::MatrixXd::Zero(m, m);
        double phi_over_s = 0.0;
        for (Eigen::Index j = 0; j < ns; ++j) {
            const auto sj = static_cast<std::size_t>(j);
            const double pj = out.p[sj];
            if (pj == 0.0) continue;
            out.mean += pj * v_.row(j).transpose();
            const double curvature = classical ? pj : pj / bracket[sj];
            out.hess.noalias() += curvature * v_.row(j).transpose() * v_.row(j);
            phi_over_s += classical ? pj : pj * bracket[sj] / qv;
        }
        out.phi_over_s = phi_over_s;
        out.log_phi = out.log_s + std::log(phi_over_s);
        out.residual = out.mean.size() ? out.mean.cwiseAbs().maxCoeff() : 0.0;
        out.valid = std::isfinite(out.log_phi) && std::isfinite(out.residual);
        return out;
    }

private:
    const Reduced& red_;
    DeformationOrder q_;
    Eigen::MatrixXd v_;
};

Eigen::VectorXd newton_direction(const DualPoint& pt) {
    const auto m = pt.hess.rows();
    const double scale = pt.hess.trace() / static_cast<double>(std::max<Eigen::Index>(m, 1)) + 1e-300;
    for (double mu = 0.0; mu < 1e6 * scale; mu = mu == 0.0 ? 1e-12 * scale : mu * 100.0) {
        const Eigen::MatrixXd h = pt.hess + mu * Eigen::MatrixXd::Identity(m, m);
        Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) continue;
        Eigen::VectorXd d = ldlt.solve(-pt.mean);
        if (d.allFinite() && d.dot(pt.mean) < 0.0) return d;
    }
    return -pt.mean;
}

struct DualOutcome {
    bool converged = false;
    int iterations = 0;
    DualPoint point;
    Eigen::VectorXd b;
};

DualOutcome dual_newton(const Reduced& red, DeformationOrder q, const SolverOptions& opts) {
    const DualPotential potential(red, q);
    DualOutcome out;
    out.b = Eigen::VectorXd::Zero(red.u.cols());
    out.point = potential.eval(out.b);
    if (!out.point.valid) return out;
    constexpr double armijo = 1e-4;
    for (int it = 0; it < opts.max_dual_iterations; ++it) {
        if (out.point.residual <= opts.dual_tolerance) {
            out.converged = true;
            return out;
        }
        const Eigen::VectorXd d = newton_direction(out.point);
        // Relative directional derivative: (grad . d) / Phi.
        const double slope = d.dot(out.point.mean) / out.point.phi_over_s;
        double alpha = 1.0;
        bool accepted = false;
        for (int h = 0; h <= opts.max_halvings; ++h, alpha *= 0.5) {
            const Eigen::VectorXd candidate = out.b + alpha * d;
            DualPoint next = potential.eval(candidate);
            if (!next.valid) continue;
            const double bound = 1.0 + armijo * alpha * slope;
            const bool sufficient = bound > 0.0 && next.log_phi - out.point.log_phi <= std::log(bound);
            if (sufficient || next.residual < out.point.residual) {
                out.b = candidate;
                out.point = std::move(next);
                accepted = true;
                break;
            }
        }
        out.iterations = it + 1;
        if (!accepted) break;
    }
    out.converged = out.point.residual <= opts.dual_tolerance;
    return out;
}

// Legendre form from the centered solution: beta_L = S^(1-q) b and
// lambda_L = (1 - S^(1-q) (1 - (q-1) b.t)) / (q-1), S = sum r h.
LegendreForm legendre_from_dual(const DualOutcome& d, const Reduced& red, DeformationOrder q) {
    const double bt = d.b.dot(red.t);
    if (q.is_classical()) return {d.point.log_s + bt, d.b};
    const double qv = q.value();
    const double c0 = 1.0 - (qv - 1.0) * bt;
    const double s_pow = std::exp((1.0 - qv) * d.point.log_s);
    double lambda = 0.0;
    if (c0 > 0.0) {
        lambda = -std::expm1((1.0 - qv) * d.point.log_s + std::log1p(-(qv - 1.0) * bt)) / (qv - 1.0);
    } else {
        lambda = (1.0 - s_pow * c0) / (qv - 1.0);
    }
    return {lambda, s_pow * d.b};
}

// ---------------------------------------------------------------------------
// Primal path: spectral projected gradient with a nonmonotone Armijo search.

struct PrimalOutcome {
    bool converged = false;
    int iterations = 0;
    std::vector<double> p;
};

double primal_objective(const Eigen::VectorXd& x, const Reduced& red, DeformationOrder q) {
    double total = 0.0;
    for (Eigen::Index j = 0; j < x.size(); ++j)
        if (x[j] > 0.0) total += x[j] * ratio_log(x[j], red.r[static_cast<std::size_t>(j)], q);
    return total;
}

// Gradient up to the constant 1 absorbed by normalization: q ln_{2-q}(x/r).
Eigen::VectorXd primal_gradient(const Eigen::VectorXd& x, const Reduced& red, DeformationOrder q) {
    Eigen::VectorXd g(x.size());
    const double qv = q.value();
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        const double r = red.r[static_cast<std::size_t>(j)];
        if (x[j] > 0.0) {
            g[j] = qv * ratio_log(x[j], r, q);
        } else {
            g[j] = qv > 1.0 && !q.is_classical() ? -qv / (qv - 1.0) : -kInf;
        }
    }
    return g;
}

// Active-set Newton over the positive states. Each step first restores
// feasibility in the Hessian metric, then takes a null-space Newton step; for
// q > 1 a state the step would drive negative is set to zero and leaves the
// free set. Returns true once the Newton decrement is negligible and the zero
// states' multipliers have the optimal sign.
bool newton_polish(const detail::PolytopeRows& rows, const Reduced& red, DeformationOrder q, Eigen::VectorXd& x) {
    if (rows.ineq.rows() != x.size()) return false;
    const double qv = q.value();
    const bool zeros_allowed = qv > 1.0 && !q.is_classical();
    if (!zeros_allowed && (x.array() <= 0.0).any()) return false;
    // Projection roundoff can leave tiny negatives; restoration below repairs feasibility.
    x = x.cwiseMax(0.0);

    for (int it = 0; it < 100; ++it) {
        std::vector<Eigen::Index> free;
        for (Eigen::Index j = 0; j < x.size(); ++j)
            if (x[j] > 0.0) free.push_back(j);
        const auto nf = static_cast<Eigen::Index>(free.size());
        if (nf == 0) return false;
        Eigen::MatrixXd e(rows.eq.rows(), nf);
        Eigen::VectorXd xf(nf), hinv(nf);
        for (Eigen::Index k = 0; k < nf; ++k) {
            const Eigen::Index j = free[static_cast<std::size_t>(k)];
            e.col(k) = rows.eq.col(j);
            xf[k] = x[j];
            const double r = red.r[static_cast<std::size_t>(j)];
            hinv[k] = q.is_classical() ? x[j] : std::pow(x[j], 2.0 - qv) * std::pow(r, qv - 1.0) / qv;
        }
        const auto schur = (e * hinv.asDiagonal() * e.transpose()).eval().ldlt();
        const Eigen::VectorXd restore = hinv.cwiseProduct(e.transpose() * schur.solve(rows.eq_rhs - e * xf));
        if ((xf + restore).minCoeff() > 0.0) {
            xf += restore;
            for (Eigen::Index k = 0; k < nf; ++k) x[free[static_cast<std::size_t>(k)]] = xf[k];
        }

        const Eigen::VectorXd g_full = primal_gradient(x, red, q);
        Eigen::VectorXd g(nf);
        for (Eigen::Index k = 0; k < nf; ++k) g[k] = g_full[free[static_cast<std::size_t>(k)]];
        const Eigen::VectorXd mu = schur.solve(e * hinv.cwiseProduct(g));
        const Eigen::VectorXd d = hinv.cwiseProduct(e.transpose() * mu - g);
        if (!d.allFinite()) return false;
        const double decrement = d.dot(d.cwiseQuotient(hinv));
        const auto zeros_ok = [&] {
            const Eigen::VectorXd reduced = g_full - rows.eq.transpose() * mu;
            for (Eigen::Index j = 0; j < x.size(); ++j)
                if (x[j] == 0.0 && reduced[j] < -1e-8) return false;
            return true;
        };
        if (decrement <= 1e-24) return zeros_ok();

        double alpha_max = kInf;
        Eigen::Index blocking = -1;
        for (Eigen::Index k = 0; k < nf; ++k) {
            if (d[k] < 0.0 && xf[k] / -d[k] < alpha_max) {
                alpha_max = xf[k] / -d[k];
                blocking = k;
            }
        }
        const double f = primal_objective(x, red, q);
        const double gd = g.dot(d);
        // Zeroing a state shrinks the free set, so roundoff slack cannot cycle.
        const double slack = 1e-15 * (1.0 + std::abs(f));
        const auto try_step = [&](double alpha, Eigen::Index zero) {
            Eigen::VectorXd trial = x;
            for (Eigen::Index k = 0; k < nf; ++k) {
                const Eigen::Index j = free[static_cast<std::size_t>(k)];
                trial[j] = k == zero ? 0.0 : xf[k] + alpha * d[k];
                if (k != zero && !(trial[j] > 0.0)) return false;
            }
            if (primal_objective(trial, red, q) > f + 1e-4 * alpha * gd + (zero >= 0 ? slack : 0.0)) return false;
            x = trial;
            return true;
        };
        bool accepted = false;
        if (decrement <= 1e-12 * (1.0 + std::abs(f))) {
            // Changes in f are below roundoff here; take the local Newton step unchecked.
            Eigen::VectorXd trial = x;
            const double alpha = alpha_max <= 1.0 ? (zeros_allowed ? alpha_max : 0.99 * alpha_max) : 1.0;
            for (Eigen::Index k = 0; k < nf; ++k) {
                const Eigen::Index j = free[static_cast<std::size_t>(k)];
                trial[j] = zeros_allowed && k == blocking && alpha_max <= 1.0 ? 0.0 : std::max(0.0, xf[k] + alpha * d[k]);
            }
            x = trial;
            continue;
        }
        if (zeros_allowed && alpha_max <= 1.0) accepted = try_step(alpha_max, blocking);
        double alpha = std::min(1.0, 0.99 * alpha_max);
        for (int k = 0; k < 60 && !accepted; ++k, alpha *= 0.5) accepted = try_step(alpha, -1);
        // Below roundoff in f the decrement decides.
        if (!accepted) return decrement <= 1e-18 && zeros_ok();
    }
    return false;
}

PrimalOutcome primal_spg(const Reduced& red, DeformationOrder q, const SolverOptions& opts, Eigen::VectorXd x) {
    const detail::PolytopeRows rows = polytope(red);
    const bool keep_positive = q.value() <= 1.0 || q.is_classical();
    constexpr double armijo = 1e-4;
    constexpr std::size_t memory = 10;
    constexpr double min_step = 1e-10;
    constexpr double max_step = 1e10;

    PrimalOutcome out;
    double f = primal_objective(x, red, q);
    Eigen::VectorXd g = primal_gradient(x, red, q);
    std::deque<double> history{f};

    Eigen::VectorXd first = detail::project(rows, x - g, x).x - x;
    double step = first.cwiseAbs().maxCoeff() > 0.0 ? std::clamp(1.0 / first.cwiseAbs().maxCoeff(), min_step, max_step) : 1.0;

    for (int it = 0; it < opts.max_primal_iterations; ++it) {
        out.iterations = it;
        const Eigen::VectorXd d = detail::project(rows, x - step * g, x).x - x;
        const double dnorm = d.cwiseAbs().maxCoeff();
        // ||P(x - g) - x|| <= ||P(x - s g) - x|| / min(s, 1).
        const double pg_bound = dnorm / std::min(step, 1.0);
        if (pg_bound <= opts.primal_gradient_tolerance) {
            out.converged = true;
            break;
        }
        const double gd = g.dot(d);
        if (!(gd < 0.0)) {
            out.converged = pg_bound <= std::sqrt(opts.primal_gradient_tolerance);
            break;
        }

        double alpha = 1.0;
        if (keep_positive) {
            for (Eigen::Index j = 0; j < x.size(); ++j)
                if (d[j] < 0.0) alpha = std::min(alpha, 0.99 * x[j] / -d[j]);
        }
        const double reference = *std::max_element(history.begin(), history.end());
        const double slack = 1e-15 * (1.0 + std::abs(reference));
        Eigen::VectorXd trial;
        double f_trial = kInf;
        bool accepted = false;
        for (int h = 0; h < 60; ++h) {
            trial = x + alpha * d;
            if (keep_positive) trial = trial.cwiseMax(0.0);
            f_trial = primal_objective(trial, red, q);
            if (f_trial <= reference + armijo * alpha * gd + slack) {
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted) {
            out.converged = pg_bound <= std::sqrt(opts.primal_gradient_tolerance);
            break;
        }
        if (keep_positive && (trial.array() <= 0.0).any()) {
            out.converged = false;
            break;
        }

        const Eigen::VectorXd g_trial = primal_gradient(trial, red, q);
        const Eigen::VectorXd sdiff = trial - x;
        const Eigen::VectorXd ydiff = g_trial - g;
        const double sy = sdiff.dot(ydiff);
        step = sy > 0.0 ? std::clamp(sdiff.squaredNorm() / sy, min_step, max_step) : max_step;

        const double decrease = f - f_trial;
        x = trial;
        g = g_trial;
        f = f_trial;
        history.push_back(f);
        if (history.size() > memory) history.pop_front();
        if (std::abs(decrease) <= opts.primal_decrease_tolerance && pg_bound <= 1e-8) {
            out.converged = true;
            break;
        }
        out.iterations = it + 1;
    }
    Eigen::VectorXd polished = x;
    if (newton_polish(rows, red, q, polished)) {
        x = polished;
        out.converged = true;
    }
    out.p.assign(x.data(), x.data() + x.size());
    return out;
}

SolvedState solve_primal(const Reduced& red, DeformationOrder q, const SolverOptions& opts, Eigen::VectorXd start) {
    const PrimalOutcome po = primal_spg(red, q, opts, std::move(start));
    if (!po.converged) {
        throw NonconvergenceError("primal projected gradient did not converge", po.p, kNaN);
    }
    return {po.p, SolveMethod::primal, po.iterations, false, std::nullopt};
}

std::vector<double> scatter(const Reduced& red, const std::vector<double>& p, std::size_t n) {
    std::vector<double> full(n, 0.0);
    for (std::size_t j = 0; j < red.states.size() && j < p.size(); ++j) full[red.states[j]] = p[j];
    return full;
}

// Posterior fixed by the constraints alone (no freedom left on the reduced support).
std::optional<SolvedState> solve_determined(const Reduced& red) {
    const std::size_t ns = red.states.size();
    if (!red.inequalities.empty()) return std::nullopt;
    if (red.kept.empty()) {
        const double total = std::accumulate(red.r.begin(), red.r.end(), 0.0);
        std::vector<double> p(ns);
        for (std::size_t j = 0; j < ns; ++j) p[j] = red.r[j] / total;
        return SolvedState{p, SolveMethod::dual, 0, false, std::nullopt};
    }
    if (ns != red.kept.size() + 1) return std::nullopt;
    const detail::PolytopeRows rows = polytope(red);
    const Eigen::VectorXd x = rows.eq.fullPivLu().solve(rows.eq_rhs);
    return SolvedState{{x.data(), x.data() + x.size()}, SolveMethod::dual, 0, true, std::nullopt};
}

}  // namespace

MinimizationResult minimize(const DiscreteDistribution& prior, const ConstraintSet& c, DeformationOrder q,
                            const SolverOptions& opts) {
    const Reduced red = reduce(prior, c);
    if (auto direct = solve_determined(red)) return assemble(prior, c, q, red, std::move(*direct));

    if (red.inequalities.empty()) {
        DualOutcome d = dual_newton(red, q, opts);
        if (d.converged) {
            SolvedState solved{d.point.p, SolveMethod::dual, d.iterations, false, legendre_from_dual(d, red, q)};
            return assemble(prior, c, q, red, std::move(solved));
        }
        if (!opts.allow_primal_fallback) {
            throw NonconvergenceError("dual Newton did not converge", scatter(red, d.point.p, prior.size()),
                                      d.point.residual);
        }
        try {
            MinimizationResult res = assemble(prior, c, q, red, solve_primal(red, q, opts, to_eigen(red.witness)));
            res.fell_back = true;
            std::ostringstream note;
            note << "dual Newton stopped after " << d.iterations << " iterations at residual " << d.point.residual
                 << "; primal fallback used; ";
            res.notes += note.str();
            return res;
        } catch (const NonconvergenceError& e) {
            throw NonconvergenceError("dual and primal paths both failed to converge",
                                      scatter(red, e.best_iterate(), prior.size()), d.point.residual);
        }
    }
    try {
        return assemble(prior, c, q, red, solve_primal(red, q, opts, to_eigen(red.witness)));
    } catch (const NonconvergenceError& e) {
        throw NonconvergenceError(e.what(), scatter(red, e.best_iterate(), prior.size()), e.residual());
    }
}

MinimizationResult minimize_primal_oracle(const DiscreteDistribution& prior, const ConstraintSet& c,
                                          DeformationOrder q, const SolverOptions& opts,
                                          std::optional<std::span<const double>> start) {
    const Reduced red = reduce(prior, c);
    Eigen::VectorXd x0 = to_eigen(red.witness);
    if (start) {
        if (start->size() != prior.size()) throw ValidationError("start point has the wrong length");
        if (max_abs_residual(c, *start) > 1e-8) throw ValidationError("start point is not feasible");
        for (std::size_t j = 0; j < red.states.size(); ++j) x0[static_cast<Eigen::Index>(j)] = (*start)[red.states[j]];
        if ((q.value() <= 1.0 || q.is_classical()) && (x0.array() <= 0.0).any())
            throw ValidationError("start point must be positive on every state a feasible point can weight");
        if ((x0.array() < 0.0).any()) throw ValidationError("start point has negative mass");
    }
    try {
        return assemble(prior, c, q, red, solve_primal(red, q, opts, std::move(x0)));
    } catch (const NonconvergenceError& e) {
        throw NonconvergenceError(e.what(), scatter(red, e.best_iterate(), prior.size()), e.residual());
    }
}

struct FeasibleSet::Impl {
    Reduced red;
    detail::PolytopeRows rows;
    std::vector<double> witness;
    std::size_t n = 0;
};

FeasibleSet::FeasibleSet(const DiscreteDistribution& prior, const ConstraintSet& c) : impl_(std::make_unique<Impl>()) {
    impl_->red = reduce(prior, c);
    impl_->rows = polytope(impl_->red);
    impl_->n = prior.size();
    impl_->witness = scatter(impl_->red, impl_->red.witness, impl_->n);
}

FeasibleSet::~FeasibleSet() = default;
FeasibleSet::FeasibleSet(FeasibleSet&&) noexcept = default;
FeasibleSet& FeasibleSet::operator=(FeasibleSet&&) noexcept = default;

const std::vector<double>& FeasibleSet::witness() const { return impl_->witness; }

std::vector<double> FeasibleSet::project(std::span<const double> y) const {
    if (y.size() != impl_->n) throw ValidationError("point has the wrong length");
    const Reduced& red = impl_->red;
    Eigen::VectorXd yr(static_cast<Eigen::Index>(red.states.size()));
    for (std::size_t j = 0; j < red.states.size(); ++j) yr[static_cast<Eigen::Index>(j)] = y[red.states[j]];
    const auto pr = detail::project(impl_->rows, yr, to_eigen(red.witness));
    std::vector<double> p(pr.x.data(), pr.x.data() + pr.x.size());
    for (double& v : p) v = std::max(0.0, v);
    return scatter(red, p, impl_->n);
}

// ---------------------------------------------------------------------------
// Legendre diagnostics.

double LegendreEntry::slope_gap() const {
    return std::abs(fd_divergence_slope - multiplier) / (1.0 + std::abs(multiplier));
}
double LegendreEntry::normalizer_gap() const {
    return std::abs(fd_log_normalizer_slope - escort_mean) / (1.0 + std::abs(escort_mean));
}
double LegendreEntry::unscaled_slope_gap() const {
    return std::abs(fd_divergence_slope - beta) / (1.0 + std::abs(beta));
}
double LegendreEntry::plain_mean_gap() const {
    return std::abs(fd_log_normalizer_slope - mean) / (1.0 + std::abs(mean));
}

double LegendreDiagnostics::max_slope_gap() const {
    double worst = 0.0;
    for (const auto& e : entries) worst = std::max(worst, e.slope_gap());
    return worst;
}
double LegendreDiagnostics::max_normalizer_gap() const {
    double worst = 0.0;
    for (const auto& e : entries) worst = std::max(worst, e.normalizer_gap());
    return worst;
}

namespace {

// lambda solving sum r / exp_q(lambda - beta.u) = 1, i.e. ln_q Z_hat as a function of beta.
double normalizer_lambda(const DiscreteDistribution& prior, const ConstraintSet& c, const std::vector<double>& beta,
                         DeformationOrder q, double guess) {
    const std::size_t n = prior.size();
    std::vector<double> a(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < c.size(); ++k) a[i] += beta[k] * c.constraints()[k].values[i];
    if (q.is_classical()) {
        double top = -kInf;
        for (std::size_t i = 0; i < n; ++i)
            if (prior[i] > 0.0) top = std::max(top, a[i] + std::log(prior[i]));
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (prior[i] > 0.0) total += std::exp(a[i] + std::log(prior[i]) - top);
        return top + std::log(total);
    }
    const double qv = q.value();
    auto excess = [&](double lambda) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (prior[i] == 0.0) continue;
            const double bracket = 1.0 + (1.0 - qv) * (lambda - a[i]);
            if (bracket <= 0.0) {
                if (qv < 1.0) return kInf;
                continue;
            }
            total += prior[i] * std::exp(std::log(bracket) / (qv - 1.0));
        }
        return total - 1.0;
    };
    // excess is decreasing in lambda; widen a bracket around the guess.
    double lo = guess;
    double hi = guess;
    double width = 1e-3 * (1.0 + std::abs(guess));
    for (int i = 0; i < 200 && !(excess(lo) > 0.0); ++i, width *= 2.0) lo = guess - width;
    width = 1e-3 * (1.0 + std::abs(guess));
    for (int i = 0; i < 200 && !(excess(hi) < 0.0); ++i, width *= 2.0) hi = guess + width;
    const double flo = excess(lo);
    const double fhi = excess(hi);
    if (!(flo > 0.0) || !(fhi < 0.0)) throw Error("could not bracket the normalization multiplier");
    if (!std::isfinite(flo)) throw Error("normalization bracket left the domain");
    std::uintmax_t iters = 200;
    const auto root = boost::math::tools::toms748_solve(excess, lo, hi, flo, fhi,
                                                        boost::math::tools::eps_tolerance<double>(52), iters);
    return 0.5 * (root.first + root.second);
}

}  // namespace

LegendreDiagnostics legendre_diagnostics(const MinimizationResult& result, const DiscreteDistribution& prior,
                                         const ConstraintSet& c, DeformationOrder q, const SolverOptions& opts) {
    LegendreDiagnostics diag;
    if (c.has_inequalities()) {
        diag.reason = "inequality constraints present";
        return diag;
    }
    if (result.method != SolveMethod::dual) {
        diag.reason = "result did not come from the dual path";
        return diag;
    }
    if (!result.cutoff_states.empty()) {
        diag.reason = "cut-off active (non-smooth regime)";
        return diag;
    }
    if (result.degenerate || !result.forced_zero_states.empty()) {
        diag.reason = "posterior fixed by the constraint geometry";
        return diag;
    }
    const double h = opts.fd_step;
    const double qv = q.value();
    const auto& p = result.posterior.masses();
    try {
        for (std::size_t m = 0; m < c.size(); ++m) {
            LegendreEntry e;
            e.constraint = m;
            e.beta = result.legendre_betas[m];
            e.multiplier = result.multipliers[m];
            const auto& values = c.constraints()[m].values;

            auto shifted = [&](double delta) {
                std::vector<MomentConstraint> cs = c.constraints();
                cs[m].target += delta;
                const ConstraintSet moved(c.support(), std::move(cs));
                return minimize(prior, moved, q, opts).divergence_value.value();
            };
            e.fd_divergence_slope = (shifted(h) - shifted(-h)) / (2.0 * h);

            std::vector<double> beta = result.legendre_betas;
            beta[m] = result.legendre_betas[m] + h;
            const double up = normalizer_lambda(prior, c, beta, q, result.legendre_lambda);
            beta[m] = result.legendre_betas[m] - h;
            const double down = normalizer_lambda(prior, c, beta, q, result.legendre_lambda);
            e.fd_log_normalizer_slope = (up - down) / (2.0 * h);

            double weight = 0.0;
            double weighted = 0.0;
            for (std::size_t i = 0; i < p.size(); ++i) {
                if (p[i] <= 0.0) continue;
                const double escort = std::exp((2.0 - qv) * std::log(p[i]) + (qv - 1.0) * std::log(prior[i]));
                weight += escort;
                weighted += escort * values[i];
                e.mean += p[i] * values[i];
            }
            e.escort_mean = weighted / weight;
            diag.entries.push_back(e);
        }
    } catch (const Error& err) {
        diag.entries.clear();
        diag.reason = std::string("perturbed solve failed: ") + err.what();
        return diag;
    }
    diag.available = true;
    return diag;
}

DualityCheck q_duality_check(const DiscreteDistribution& prior, const ConstraintSet& c, DeformationOrder q,
                             const SolverOptions& opts) {
    if (!(q.value() < 2.0)) throw DomainError("q-duality check needs 0 < q < 2");
    if (c.has_inequalities()) throw ValidationError("q-duality check needs equality-only constraints");
    const DeformationOrder dual = dual_order(q);
    MinimizationResult sol = minimize(prior, c, dual, opts);

    const double normalizer = sol.tilt_representable ? sol.z_hat : 1.0;
    const auto& p = sol.posterior.masses();
    std::vector<std::size_t> positive;
    std::vector<std::size_t> zeroed;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] > 0.0) {
            positive.push_back(i);
        } else if (std::find(sol.cutoff_states.begin(), sol.cutoff_states.end(), prior.labels()[i]) !=
                   sol.cutoff_states.end()) {
            zeroed.push_back(i);
        }
    }
    const auto k = static_cast<Eigen::Index>(c.size());
    auto design_row = [&](std::size_t i) {
        Eigen::RowVectorXd row(k + 1);
        row[0] = 1.0;
        for (Eigen::Index m = 0; m < k; ++m) row[m + 1] = c.constraints()[static_cast<std::size_t>(m)].values[i];
        return row;
    };
    Eigen::MatrixXd design(static_cast<Eigen::Index>(positive.size()), k + 1);
    Eigen::VectorXd y(static_cast<Eigen::Index>(positive.size()));
    for (std::size_t j = 0; j < positive.size(); ++j) {
        const std::size_t i = positive[j];
        design.row(static_cast<Eigen::Index>(j)) = design_row(i);
        y[static_cast<Eigen::Index>(j)] = q_log(p[i] * normalizer / prior[i], q);
    }
    const Eigen::VectorXd coef = design.completeOrthogonalDecomposition().solve(y);
    double residual = positive.empty() ? 0.0 : (design * coef - y).cwiseAbs().maxCoeff();
    for (std::size_t i : zeroed) {
        const double predicted = design_row(i).dot(coef);
        residual = std::max(residual, 1.0 + (1.0 - q.value()) * predicted);
    }
    return DualityCheck{.solved_order = dual,
                        .solution = std::move(sol),
                        .coefficients = {coef.data(), coef.data() + coef.size()},
                        .residual = residual};
}

}  // namespace tsallis
