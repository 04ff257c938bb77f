#include <cmath>
#include <random>

#include "doctest.h"
#include "tsallis/errors.hpp"
#include "tsallis/solver.hpp"

using namespace tsallis;

namespace {

const std::vector<Label> kThree{"0", "1", "2"};

MomentConstraint eq(std::vector<double> v, double t) { return {std::move(v), t, ConstraintKind::equality}; }
MomentConstraint ge(std::vector<double> v, double t) { return {std::move(v), t, ConstraintKind::inequality_ge}; }

std::vector<Label> labels(std::size_t n) {
    std::vector<Label> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back("x" + std::to_string(i));
    return out;
}

struct Instance {
    DiscreteDistribution prior;
    ConstraintSet constraints;
};

// Targets are means under a random interior point, so the instance is feasible.
Instance random_instance(std::mt19937_64& rng, std::size_t n, std::size_t m) {
    std::gamma_distribution<double> g(1.0);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::vector<double> w(n), z(n);
    for (double& x : w) x = g(rng) + 0.05;
    for (double& x : z) x = g(rng) + 0.05;
    const auto names = labels(n);
    auto prior = DiscreteDistribution::from_weights(names, w);
    const auto point = DiscreteDistribution::from_weights(names, z);
    std::vector<MomentConstraint> cs;
    for (std::size_t k = 0; k < m; ++k) {
        std::vector<double> v(n);
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            v[i] = unit(rng);
            mean += point[i] * v[i];
        }
        cs.push_back(eq(std::move(v), mean));
    }
    return {std::move(prior), ConstraintSet(names, std::move(cs))};
}

// KL minimizer by cyclic coordinate updates on the exponential-family
// parameters, each a 1-D bisection on the moment equation.
std::vector<double> kl_iterative_scaling(const DiscreteDistribution& r, const ConstraintSet& c) {
    const std::size_t n = r.size();
    std::vector<double> theta(c.size(), 0.0);
    auto tilt = [&](const std::vector<double>& th) {
        std::vector<double> logw(n);
        double top = -INFINITY;
        for (std::size_t i = 0; i < n; ++i) {
            logw[i] = std::log(r[i]);
            for (std::size_t k = 0; k < c.size(); ++k) logw[i] += th[k] * c.constraints()[k].values[i];
            top = std::max(top, logw[i]);
        }
        double total = 0.0;
        std::vector<double> p(n);
        for (std::size_t i = 0; i < n; ++i) total += p[i] = std::exp(logw[i] - top);
        for (double& x : p) x /= total;
        return p;
    };
    for (int sweep = 0; sweep < 2000; ++sweep) {
        double worst = 0.0;
        for (std::size_t k = 0; k < c.size(); ++k) {
            const auto& u = c.constraints()[k];
            auto moment = [&](double value) {
                auto th = theta;
                th[k] = value;
                const auto p = tilt(th);
                double s = 0.0;
                for (std::size_t i = 0; i < n; ++i) s += p[i] * u.values[i];
                return s - u.target;
            };
            double lo = theta[k] - 1.0;
            double hi = theta[k] + 1.0;
            while (moment(lo) > 0.0) lo -= 2.0 * (hi - lo);
            while (moment(hi) < 0.0) hi += 2.0 * (hi - lo);
            for (int it = 0; it < 200; ++it) {
                const double mid = 0.5 * (lo + hi);
                (moment(mid) < 0.0 ? lo : hi) = mid;
            }
            theta[k] = 0.5 * (lo + hi);
            worst = std::max(worst, std::abs(moment(theta[k])));
        }
        bool done = true;
        const auto p = tilt(theta);
        for (std::size_t k = 0; k < c.size(); ++k) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += p[i] * c.constraints()[k].values[i];
            if (std::abs(s - c.constraints()[k].target) > 1e-13) done = false;
        }
        if (done) break;
    }
    return tilt(theta);
}

}  // namespace

TEST_CASE("no moment constraints returns the prior") {
    const DiscreteDistribution r(kThree, {0.2, 0.3, 0.5});
    for (double q : {0.5, 1.0, 2.0}) {
        const auto res = minimize(r, ConstraintSet(kThree), DeformationOrder(q));
        CHECK(res.posterior == r);
        CHECK(res.divergence_value.value() == 0.0);
        const auto oracle = minimize_primal_oracle(r, ConstraintSet(kThree), DeformationOrder(q));
        CHECK(l1_distance(oracle.posterior.masses(), r.masses()) < 1e-9);
    }
}

TEST_CASE("two states are fixed by one constraint") {
    const std::vector<Label> two{"a", "b"};
    for (double t : {0.1, 0.5, 0.83}) {
        for (double q : {0.3, 1.0, 1.7, 3.0}) {
            for (const auto& prior : {DiscreteDistribution(two, {0.5, 0.5}), DiscreteDistribution(two, {0.9, 0.1})}) {
                const ConstraintSet cs(two, {eq({0, 1}, t)});
                const auto res = minimize(prior, cs, DeformationOrder(q));
                CHECK(res.posterior[0] == doctest::Approx(1.0 - t).epsilon(1e-14));
                CHECK(res.posterior[1] == doctest::Approx(t).epsilon(1e-14));
                CHECK(res.degenerate);
                const auto oracle = minimize_primal_oracle(prior, cs, DeformationOrder(q));
                CHECK(l1_distance(oracle.posterior.masses(), res.posterior.masses()) < 1e-12);
            }
        }
    }
}

TEST_CASE("three-state mean constraint at q = 0.5 matches the primal oracle") {
    const auto r = DiscreteDistribution::uniform(kThree);
    const ConstraintSet cs(kThree, {eq({0, 1, 2}, 1.5)});
    const DeformationOrder q(0.5);
    const auto dual = minimize(r, cs, q);
    const auto primal = minimize_primal_oracle(r, cs, q);
    CHECK(dual.method == SolveMethod::dual);
    CHECK(primal.method == SolveMethod::primal);
    for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(dual.posterior[i] - primal.posterior[i]) <= 1e-6);
    CHECK(dual.max_constraint_residual <= 1e-8);
    CHECK(dual.cutoff_states.empty());
    CHECK(dual.tilt_representable);
}

TEST_CASE("feasible prior is its own posterior") {
    const auto r = DiscreteDistribution::from_weights(kThree, std::vector<double>{1, 2, 1});
    const ConstraintSet cs(kThree, {eq({0, 1, 2}, 1.0)});
    for (double q : {0.5, 1.0, 1.5}) {
        const auto res = minimize(r, cs, DeformationOrder(q));
        CHECK(l1_distance(res.posterior.masses(), r.masses()) < 1e-14);
        CHECK(std::abs(res.betas[0]) < 1e-12);
        CHECK(std::abs(res.multipliers[0]) < 1e-12);
        CHECK(res.divergence_value.value() < 1e-15);
    }
}

TEST_CASE("dual solutions sit in the tilted family") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t n = 3 + trial % 6;
        const auto inst = random_instance(rng, n, 1 + trial % std::min<std::size_t>(3, n - 2));
        for (double qv : {0.3, 0.7, 1.0, 1.4, 2.0}) {
            const DeformationOrder q(qv);
            const auto res = minimize(inst.prior, inst.constraints, q);
            CHECK(res.max_constraint_residual <= 1e-8);
            if (!res.cutoff_states.empty() || !res.tilt_representable || res.method != SolveMethod::dual) continue;
            double z = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                double a = 0.0;
                for (std::size_t k = 0; k < inst.constraints.size(); ++k)
                    a += res.betas[k] * inst.constraints.constraints()[k].values[i];
                const double rebuilt = res.posterior[i] * res.z_hat * q_exp(-a, q);
                CHECK(std::abs(rebuilt - inst.prior[i]) <= 1e-9 * inst.prior[i]);
                const double bracket = 1.0 - q.deficit() * a;
                z += inst.prior[i] * (q.is_classical() ? std::exp(a) : std::pow(bracket, 1.0 / (qv - 1.0)));
            }
            CHECK(std::abs(z - res.z_hat) <= 1e-10 * res.z_hat);
            CHECK(res.lambda == doctest::Approx(std::pow(res.z_hat, 1.0 - qv)).epsilon(1e-12));
        }
    }
}

TEST_CASE("primal oracle agrees with the dual path") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 40; ++trial) {
        const auto inst = random_instance(rng, 5, 1 + trial % 2);
        for (double qv : {0.5, 0.8, 1.2, 2.0}) {
            const DeformationOrder q(qv);
            const auto dual = minimize(inst.prior, inst.constraints, q);
            const auto primal = minimize_primal_oracle(inst.prior, inst.constraints, q);
            CHECK(l1_distance(dual.posterior.masses(), primal.posterior.masses()) <= 1e-6);
            CHECK(primal.max_constraint_residual <= 1e-8);
        }
    }
}

TEST_CASE("q = 1 matches iterative scaling and nearby orders") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        const auto inst = random_instance(rng, 6, 1 + trial % 3);
        const auto kl = kl_iterative_scaling(inst.prior, inst.constraints);
        const auto res = minimize(inst.prior, inst.constraints, DeformationOrder(1.0));
        CHECK(l1_distance(res.posterior.masses(), kl) <= 1e-9);
        for (double h : {1e-4, -1e-4}) {
            const auto near = minimize(inst.prior, inst.constraints, DeformationOrder(1.0 + h));
            CHECK(l1_distance(near.posterior.masses(), kl) <= 1e-3);
        }
    }
}

TEST_CASE("optimality certificate against random feasible points") {
    std::mt19937_64 rng(17);
    std::gamma_distribution<double> g(1.0);
    for (int trial = 0; trial < 10; ++trial) {
        const auto inst = random_instance(rng, 6, 2);
        const FeasibleSet set(inst.prior, inst.constraints);
        for (double qv : {0.4, 1.0, 1.8}) {
            const DeformationOrder q(qv);
            const auto best = minimize(inst.prior, inst.constraints, q);
            const double floor = best.divergence_value.value();
            for (int k = 0; k < 100; ++k) {
                std::vector<double> y(6);
                for (double& v : y) v = g(rng);
                const auto p = set.project(y);
                CHECK(max_abs_residual(inst.constraints, p) <= 1e-9);
                const auto d = DiscreteDistribution::from_weights(inst.prior.labels(), p);
                CHECK(tsallis_divergence(d, inst.prior, q).value() >= floor - 1e-9);
            }
        }
    }
}

TEST_CASE("boundary target collapses the support without iterating") {
    const std::vector<Label> four{"a", "b", "c", "d"};
    const DiscreteDistribution r(four, {0.1, 0.2, 0.3, 0.4});
    const ConstraintSet cs(four, {eq({0, 1, 2, 2}, 2.0)});
    for (double q : {0.5, 1.0, 2.0}) {
        const auto res = minimize(r, cs, DeformationOrder(q));
        CHECK(res.posterior[0] == 0.0);
        CHECK(res.posterior[1] == 0.0);
        CHECK(res.posterior[2] == doctest::Approx(3.0 / 7.0).epsilon(1e-12));
        CHECK(res.forced_zero_states == std::vector<Label>{"a", "b"});
        CHECK(res.degenerate);
        CHECK(res.iterations == 0);
        CHECK(res.max_constraint_residual <= 1e-12);
    }
}

TEST_CASE("cut-off at q > 1 matches the primal oracle") {
    const std::vector<Label> four{"a", "b", "c", "d"};
    const DiscreteDistribution r(four, {0.4, 0.3, 0.2, 0.1});
    const ConstraintSet cs(four, {eq({0, 1, 2, 3}, 2.4)});
    const DeformationOrder q(2.0);
    const auto dual = minimize(r, cs, q);
    const auto primal = minimize_primal_oracle(r, cs, q);
    CHECK_FALSE(dual.cutoff_states.empty());
    CHECK(dual.method == SolveMethod::dual);
    for (double m : dual.posterior.masses()) CHECK(m >= 0.0);
    CHECK(dual.max_constraint_residual <= 1e-8);
    CHECK(l1_distance(dual.posterior.masses(), primal.posterior.masses()) <= 1e-5);
    CHECK(dual.max_kkt_residual <= 1e-8);
}

TEST_CASE("inequality constraints go through the primal path") {
    const DiscreteDistribution r(kThree, {0.5, 0.3, 0.2});
    const ConstraintSet active(kThree, {ge({0, 1, 2}, 1.2)});
    const auto res = minimize(r, active, DeformationOrder(0.7));
    CHECK(res.method == SolveMethod::primal);
    CHECK(res.max_constraint_residual <= 1e-8);
    double mean = 0.0;
    for (std::size_t i = 0; i < 3; ++i) mean += res.posterior[i] * i;
    CHECK(mean == doctest::Approx(1.2).epsilon(1e-8));
    CHECK(res.multipliers[0] >= -1e-9);
    CHECK(res.multipliers[0] > 0.0);

    const ConstraintSet slack(kThree, {ge({0, 1, 2}, 0.2)});
    const auto free = minimize(r, slack, DeformationOrder(0.7));
    CHECK(l1_distance(free.posterior.masses(), r.masses()) < 1e-8);
    CHECK(free.multipliers[0] == 0.0);
}

TEST_CASE("errors") {
    const DiscreteDistribution r(kThree, {0.2, 0.3, 0.5});
    const ConstraintSet impossible(kThree, {eq({0, 1, 2}, 3.0)});
    try {
        minimize(r, impossible, DeformationOrder(0.5));
        FAIL("expected infeasibility");
    } catch (const InfeasibleError& e) {
        CHECK(e.violation() == doctest::Approx(1.0).epsilon(1e-9));
    }
    const DiscreteDistribution holes(kThree, {0.5, 0.5, 0.0});
    const ConstraintSet needs_two(kThree, {eq({0, 1, 2}, 1.5)});
    CHECK_THROWS_AS(minimize(holes, needs_two, DeformationOrder(1.5)), InfeasibleError);
    CHECK_THROWS_AS(minimize(r, ConstraintSet(kThree, {eq({0, 1, 2}, 1.0), eq({0, 2, 4}, 2.0)}), DeformationOrder(1.0)),
                    DependentConstraintsError);
    CHECK_THROWS_AS(minimize(r, ConstraintSet({"a", "b", "c"}), DeformationOrder(1.0)), SupportMismatchError);

    SolverOptions opts;
    opts.max_dual_iterations = 1;
    opts.allow_primal_fallback = false;
    const ConstraintSet hard(kThree, {eq({0, 1, 2}, 1.9)});
    CHECK_THROWS_AS(minimize(r, hard, DeformationOrder(0.5), opts), NonconvergenceError);
    opts.allow_primal_fallback = true;
    const auto fallback = minimize(r, hard, DeformationOrder(0.5), opts);
    CHECK(fallback.fell_back);
    CHECK(fallback.method == SolveMethod::primal);
}

TEST_CASE("zero-prior states are frozen") {
    const std::vector<Label> four{"a", "b", "c", "d"};
    const DiscreteDistribution r(four, {0.3, 0.0, 0.3, 0.4});
    const ConstraintSet cs(four, {eq({0, 1, 2, 3}, 1.5)});
    for (double q : {0.5, 1.0, 1.5}) {
        const auto res = minimize(r, cs, DeformationOrder(q));
        CHECK(res.posterior[1] == 0.0);
        CHECK(res.frozen_states == std::vector<Label>{"b"});
        CHECK(res.max_constraint_residual <= 1e-8);
    }
}

TEST_CASE("solves are deterministic") {
    std::mt19937_64 rng(99);
    const auto inst = random_instance(rng, 7, 3);
    const auto a = minimize(inst.prior, inst.constraints, DeformationOrder(0.6));
    const auto b = minimize(inst.prior, inst.constraints, DeformationOrder(0.6));
    CHECK(a.posterior == b.posterior);
    CHECK(a.betas == b.betas);
    CHECK(a.iterations == b.iterations);
}

TEST_CASE("primal oracle from a chosen start") {
    const auto r = DiscreteDistribution::uniform(kThree);
    const ConstraintSet cs(kThree, {eq({0, 1, 2}, 1.5)});
    const std::vector<double> start{0.2, 0.1, 0.7};
    const auto res = minimize_primal_oracle(r, cs, DeformationOrder(0.5), {}, start);
    const auto ref = minimize(r, cs, DeformationOrder(0.5));
    CHECK(l1_distance(res.posterior.masses(), ref.posterior.masses()) <= 1e-7);
    const std::vector<double> infeasible{0.3, 0.3, 0.4};
    CHECK_THROWS_AS(minimize_primal_oracle(r, cs, DeformationOrder(0.5), {}, infeasible), ValidationError);
}

TEST_CASE("legendre diagnostics") {
    const auto r = DiscreteDistribution::from_weights(kThree, std::vector<double>{1, 2, 1});
    const ConstraintSet at_mean(kThree, {eq({0, 1, 2}, 1.0)});
    const DeformationOrder half(0.5);
    const auto flat = minimize(r, at_mean, half);
    const auto d0 = legendre_diagnostics(flat, r, at_mean, half);
    REQUIRE(d0.available);
    CHECK(std::abs(d0.entries[0].fd_divergence_slope) < 1e-8);
    CHECK(std::abs(d0.entries[0].beta) < 1e-12);

    const auto u = DiscreteDistribution::uniform(kThree);
    const ConstraintSet cs(kThree, {eq({0, 1, 2}, 1.5)});
    for (double qv : {0.5, 1.0, 1.5}) {
        const DeformationOrder q(qv);
        const auto res = minimize(u, cs, q);
        const auto diag = legendre_diagnostics(res, u, cs, q);
        REQUIRE(diag.available);
        const auto& e = diag.entries[0];
        CHECK(e.slope_gap() <= 1e-4);
        CHECK(e.normalizer_gap() <= 1e-4);
        CHECK(e.mean == doctest::Approx(1.5).epsilon(1e-9));
        if (qv == 1.0) {
            CHECK(e.unscaled_slope_gap() <= 1e-4);
            CHECK(e.plain_mean_gap() <= 1e-4);
        } else {
            CHECK(e.unscaled_slope_gap() > 1e-3);
            CHECK(e.plain_mean_gap() > 1e-3);
        }
    }

    // Moving a target away from the prior mean raises the minimum.
    const auto low = minimize(u, ConstraintSet(kThree, {eq({0, 1, 2}, 1.3)}), half);
    const auto high = minimize(u, ConstraintSet(kThree, {eq({0, 1, 2}, 1.6)}), half);
    CHECK(high.divergence_value.value() > low.divergence_value.value());

    const DiscreteDistribution r4({"a", "b", "c", "d"}, {0.4, 0.3, 0.2, 0.1});
    const ConstraintSet cut({"a", "b", "c", "d"}, {eq({0, 1, 2, 3}, 2.4)});
    const auto cut_res = minimize(r4, cut, DeformationOrder(2.0));
    const auto skipped = legendre_diagnostics(cut_res, r4, cut, DeformationOrder(2.0));
    CHECK_FALSE(skipped.available);
    CHECK_FALSE(skipped.reason.empty());
}

TEST_CASE("q-duality check") {
    const auto u = DiscreteDistribution::uniform(kThree);
    const ConstraintSet cs(kThree, {eq({0, 1, 2}, 1.5)});
    CHECK(q_duality_check(u, cs, DeformationOrder(1.0)).residual <= 1e-9);
    const auto half = q_duality_check(u, cs, DeformationOrder(0.5));
    CHECK(half.solved_order.value() == 1.5);
    CHECK(half.residual <= 1e-8);
    CHECK(q_duality_check(u, ConstraintSet(kThree), DeformationOrder(0.7)).residual == 0.0);
    CHECK_THROWS_AS(q_duality_check(u, cs, DeformationOrder(2.0)), DomainError);

    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 30; ++trial) {
        const auto inst = random_instance(rng, 6, 2);
        for (double qv : {0.3, 0.5, 0.75, 1.25}) {
            const auto check = q_duality_check(inst.prior, inst.constraints, DeformationOrder(qv));
            CHECK(check.residual <= 1e-8);
        }
    }
}
