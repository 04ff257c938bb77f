#include <cmath>
#include <random>

#include "doctest.h"
#include "tsallis/errors.hpp"
#include "tsallis/qalgebra.hpp"

using namespace tsallis;

namespace {

DeformationOrder Q(double q) { return DeformationOrder(q); }

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace

TEST_CASE("deformation order rejects nonpositive and non-finite values") {
    CHECK_THROWS_AS(Q(0.0), DomainError);
    CHECK_THROWS_AS(Q(-0.5), DomainError);
    CHECK_THROWS_AS(Q(std::nan("")), DomainError);
    CHECK_THROWS_AS(Q(INFINITY), DomainError);
    CHECK(Q(1.0).is_classical());
    CHECK(Q(1.0 + 1e-15).is_classical());
    CHECK_FALSE(Q(1.0 + 1e-12).is_classical());
    CHECK(Q(0.3).deficit() == doctest::Approx(0.7));
}

TEST_CASE("q_log examples") {
    for (double q : {0.1, 0.5, 1.0, 1.5, 2.0, 3.0}) CHECK(q_log(1.0, Q(q)) == 0.0);
    CHECK(q_log(2.0, Q(2.0)) == doctest::Approx(0.5).epsilon(1e-15));
    // q -> 0+ limit of (3 - 1)/1.
    CHECK(std::abs(q_log(3.0, Q(1e-12)) - 2.0) < 1e-11);
    for (double x : {0.1, 1.0, 10.0}) {
        CHECK(std::abs(q_log(x, Q(1.0 + 1e-12)) - std::log(x)) < 1e-9);
        CHECK(std::abs(q_log(x, Q(1.0 - 1e-12)) - std::log(x)) < 1e-9);
    }
}

TEST_CASE("q_log domain") {
    CHECK_THROWS_AS(q_log(0.0, Q(0.5)), DomainError);
    CHECK_THROWS_AS(q_log(-1.0, Q(1.0)), DomainError);
}

TEST_CASE("q_log is continuous at q = 1") {
    for (double x : {0.01, 0.5, 2.0, 50.0}) {
        for (double h : {1e-6, -1e-6}) {
            CHECK(std::abs(q_log(x, Q(1.0 + h)) - std::log(x)) <= 1e-5 * (1.0 + std::abs(std::log(x))));
        }
    }
}

TEST_CASE("q_exp examples") {
    for (double q : {0.2, 0.5, 1.0, 1.7, 3.0}) CHECK(q_exp(0.0, Q(q)) == 1.0);
    CHECK(q_exp(-5.0, Q(0.5)) == 0.0);
    CHECK(q_exp(q_log(0.3, Q(0.7)), Q(0.7)) == doctest::Approx(0.3).epsilon(1e-14));
    CHECK(q_exp(1.0, Q(1.0)) == doctest::Approx(std::exp(1.0)).epsilon(1e-15));
}

TEST_CASE("q_exp at and beyond the pole raises") {
    CHECK_THROWS_AS(q_exp(2.0, Q(1.5)), SingularityError);
    CHECK_THROWS_AS(q_exp(3.0, Q(1.5)), SingularityError);
    CHECK_NOTHROW(q_exp(1.99, Q(1.5)));
    CHECK(std::isfinite(q_exp(1.99, Q(1.5))));
}

TEST_CASE("q_add examples") {
    CHECK(q_add(0.7, 0.0, Q(0.3)) == 0.7);
    CHECK(q_add(1.0, 1.0, Q(0.5)) == 2.5);
    CHECK(q_add(0.4, -1.3, Q(1.8)) == q_add(-1.3, 0.4, Q(1.8)));
    CHECK(q_add(q_log(2.0, Q(0.6)), q_log(5.0, Q(0.6)), Q(0.6)) == doctest::Approx(q_log(10.0, Q(0.6))).epsilon(1e-14));
}

TEST_CASE("dual_order") {
    CHECK(dual_order(Q(1.0)).value() == 1.0);
    CHECK(dual_order(Q(0.5)).value() == 1.5);
    CHECK(dual_order(dual_order(Q(0.3))).value() == doctest::Approx(0.3).epsilon(1e-15));
    CHECK_THROWS_AS(dual_order(Q(2.0)), DomainError);
    CHECK_THROWS_AS(dual_order(Q(2.5)), DomainError);
}

TEST_CASE("randomized identities") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> xs(1e-3, 10.0);
    std::uniform_real_distribution<double> qs(0.05, 1.95);
    for (int i = 0; i < 2000; ++i) {
        const double x = xs(rng);
        const double y = xs(rng);
        const DeformationOrder q(qs(rng));
        const double d = q.deficit();
        // Product rule.
        CHECK(rel(q_log(x * y, q), q_add(q_log(x, q), q_log(y, q), q)) < 1e-12);
        // Ratio rule.
        CHECK(rel(q_log(x / y, q), std::pow(y, q.value() - 1.0) * (q_log(x, q) - q_log(y, q))) < 1e-11);
        // Reciprocal log duality (with the sign that makes it hold).
        CHECK(rel(q_log(1.0 / x, q), -q_log(x, dual_order(q))) < 1e-12);
        // Round trip.
        CHECK(rel(q_exp(q_log(x, q), q), x) < 1e-12);
        // exp duality and reciprocal identity where brackets are positive.
        const double z = std::uniform_real_distribution<double>(-2.0, 2.0)(rng);
        if (1.0 + d * z > 0.0 && 1.0 - d * z > 0.0 && 1.0 + (1.0 - dual_order(q).deficit()) * z > 0.0) {
            const double lhs = q_exp(-z, q);
            const double rhs = q_exp(z, dual_order(q));
            if (lhs > 0.0 && rhs > 0.0) CHECK(std::abs(lhs * rhs - 1.0) < 1e-12);
            const double shifted = -z / (1.0 + d * z);
            if (1.0 + d * shifted > 0.0) CHECK(rel(1.0 / q_exp(z, q), q_exp(shifted, q)) < 1e-12);
        }
    }
}

TEST_CASE("monotonicity") {
    for (double q : {0.3, 1.0, 1.8}) {
        double prev_log = -INFINITY;
        double prev_exp = 0.0;
        for (double x = 0.05; x < 5.0; x += 0.05) {
            const double l = q_log(x, Q(q));
            CHECK(l > prev_log);
            prev_log = l;
        }
        for (double x = -4.0; x < 1.0; x += 0.05) {
            const double e = q_exp(x, Q(q));
            CHECK(e >= prev_exp);
            prev_exp = e;
        }
    }
}
