#include <chrono>
#include <cmath>

#include "doctest.h"
#include "tsallis/errors.hpp"
#include "tsallis/instance_io.hpp"
#include "tsallis/properties.hpp"

using namespace tsallis;

namespace {

MomentConstraint eq(std::vector<double> v, double t) { return {std::move(v), t, ConstraintKind::equality}; }

double residual_of(const CheckOutcome& out, const std::string& report) {
    for (const auto& e : out.entries)
        if (e.report == report) return e.residual;
    FAIL("no entry for " << report);
    return 0.0;
}

CheckInstance base(const std::string& check, double q) {
    CheckInstance inst;
    inst.check = check;
    inst.q = q;
    inst.support = {"a", "b", "c", "d"};
    inst.prior = {0.1, 0.2, 0.3, 0.4};
    return inst;
}

SuiteConfig small_config(std::size_t instances) {
    SuiteConfig cfg;
    cfg.instances = instances;
    return cfg;
}

}  // namespace

TEST_CASE("check names") {
    const auto& names = check_names();
    CHECK(names.size() == 11);
    CHECK(std::find(names.begin(), names.end(), "subset_aggregation") != names.end());
}

TEST_CASE("generator is deterministic per seed and index") {
    InstanceGenerator gen;
    for (const auto& name : check_names()) {
        CAPTURE(name);
        const auto a = io::dump(io::check_instance_to_json(gen.generate(name, 7)));
        const auto b = io::dump(io::check_instance_to_json(gen.generate(name, 7)));
        CHECK(a == b);
        const auto c = io::dump(io::check_instance_to_json(gen.generate(name, 8)));
        CHECK(a != c);
    }
    InstanceGenerator other;
    other.seed = 43;
    CHECK(other.generate("uniqueness", 7).prior != gen.generate("uniqueness", 7).prior);
}

TEST_CASE("generator rejects unknown checks and empty q lists") {
    InstanceGenerator gen;
    CHECK_THROWS_AS(gen.generate("no_such_check", 0), ValidationError);
    gen.q_values.clear();
    CHECK_THROWS_AS(gen.generate("uniqueness", 0), ValidationError);
}

TEST_CASE("generated problems are feasible with interior targets") {
    InstanceGenerator gen;
    for (std::uint64_t i = 0; i < 50; ++i) {
        const auto inst = gen.generate("idempotence", i);
        CHECK(inst.support.size() >= gen.min_support);
        CHECK(inst.support.size() <= gen.max_support);
        CHECK(inst.constraints.size() >= 1);
        CHECK(inst.constraints.size() + 2 <= inst.support.size());
        const ConstraintSet c(inst.support, inst.constraints);
        CHECK(is_feasible(c).feasible);
        for (double m : inst.prior) CHECK(m > 0.0);
    }
}

TEST_CASE("identity relabeling gives zero residual") {
    auto inst = base("relabel_invariance", 0.5);
    inst.constraints = {eq({0, 1, 2, 3}, 2.4)};
    for (const auto& l : inst.support) inst.permutation[l] = l;
    const auto out = evaluate_instance(inst);
    CHECK(out.error.empty());
    CHECK(residual_of(out, "relabel_invariance") == 0.0);
}

TEST_CASE("subset independence with one block reduces to plain minimization") {
    auto inst = base("subset_independence", 0.5);
    inst.partition = {inst.support};
    inst.block_constraints = {{eq({-1.0, 0.0, 1.0, 2.0}, 0.0)}};
    inst.block_masses = {1.0};
    const auto out = evaluate_instance(inst);
    REQUIRE(out.error.empty());
    CHECK(residual_of(out, "subset_independence.conditionals") <= 1e-7);
    CHECK(residual_of(out, "subset_independence.decomposition") <= 1e-10);
}

TEST_CASE("subset independence without block constraints recovers block-rescaled prior") {
    auto inst = base("subset_independence", 0.3);
    inst.partition = {{"a", "b"}, {"c", "d"}};
    inst.block_constraints = {{}, {}};
    inst.block_masses = {0.6, 0.4};
    const auto out = evaluate_instance(inst);
    REQUIRE(out.error.empty());
    CHECK(residual_of(out, "subset_independence.conditionals") <= 1e-9);
}

TEST_CASE("weak subset independence without constraints recovers the prior") {
    auto inst = base("weak_subset_independence", 0.7);
    inst.partition = {{"a", "c"}, {"b", "d"}};
    inst.block_constraints = {{}, {}};
    const auto out = evaluate_instance(inst);
    REQUIRE(out.error.empty());
    CHECK(residual_of(out, "weak_subset_independence.conditionals") <= 1e-15);
    CHECK(residual_of(out, "weak_subset_independence.decomposition") <= 1e-15);
}

TEST_CASE("subset observation mode for q >= 1") {
    auto inst = base("subset_independence", 1.5);
    inst.partition = {{"a", "b"}, {"c", "d"}};
    inst.block_constraints = {{eq({-1.0, 1.0}, 0.0)}, {}};
    inst.block_masses = {0.5, 0.5};
    const auto out = evaluate_instance(inst);
    REQUIRE(out.error.empty());
    CHECK(out.entries[0].report == "subset_independence.conditionals.observed_q_ge_1");
}

TEST_CASE("subset aggregation with singleton blocks is the identity lifting") {
    auto inst = base("subset_aggregation", 0.5);
    inst.partition = {{"a"}, {"b"}, {"c"}, {"d"}};
    inst.aggregated_constraints = {eq({0, 1, 2, 3}, 1.7)};
    const auto out = evaluate_instance(inst);
    REQUIRE(out.error.empty());
    CHECK(residual_of(out, "subset_aggregation.conditionals") == 0.0);
    CHECK(residual_of(out, "subset_aggregation.aggregate") <= 1e-12);
    CHECK(residual_of(out, "subset_aggregation.divergence") <= 1e-12);
}

TEST_CASE("reflexiveness modes") {
    auto inst = base("reflexiveness", 0.5);
    inst.mode = "feasible";
    inst.constraints = {eq({0, 1, 2, 3}, 2.0)};
    CHECK(residual_of(evaluate_instance(inst), "reflexiveness") <= 1e-12);
    inst.mode = "violated";
    inst.constraints = {eq({0, 1, 2, 3}, 1.2)};
    CHECK(residual_of(evaluate_instance(inst), "reflexiveness") == 0.0);
}

TEST_CASE("invariance with redundant second set") {
    auto inst = base("invariance", 0.5);
    inst.constraints = {eq({0, 1, 2, 3}, 1.2)};
    inst.extra_constraints = {eq({1, 0, 0, 1}, 0.5)};
    const auto first = minimize(DiscreteDistribution(inst.support, inst.prior),
                                ConstraintSet(inst.support, inst.constraints), DeformationOrder(0.5));
    inst.extra_constraints[0].target = first.posterior.masses()[0] + first.posterior.masses()[3];
    CHECK(residual_of(evaluate_instance(inst), "invariance") <= 1e-8);
}

TEST_CASE("divergence invariants on a fixed pair") {
    auto inst = base("divergence_invariants", 1.5);
    inst.posterior = {0.25, 0.25, 0.25, 0.25};
    inst.partition = {{"a", "b"}, {"c", "d"}};
    inst.support2 = {"y0", "y1"};
    inst.prior2 = {0.3, 0.7};
    inst.posterior2 = {0.6, 0.4};
    const auto out = evaluate_instance(inst);
    REQUIRE(out.error.empty());
    CHECK(residual_of(out, "divergence.pseudo_additivity") <= 1e-12);
    CHECK(residual_of(out, "divergence.decomposition") <= 1e-12);
    CHECK(residual_of(out, "divergence.kl_limit") <= 1e-5);
}

TEST_CASE("solver failures are recorded, not thrown") {
    auto inst = base("idempotence", 0.5);
    inst.constraints = {eq({0, 1, 2, 3}, 7.0)};
    CheckOutcome out;
    CHECK_NOTHROW(out = evaluate_instance(inst));
    CHECK_FALSE(out.error.empty());
}

TEST_CASE("empty q list gives no reports") {
    SuiteConfig cfg = small_config(5);
    cfg.q_values.clear();
    CHECK(run_suite(cfg).empty());
    CHECK(suite_passed({}));
}

TEST_CASE("filters select checks by substring") {
    SuiteConfig cfg = small_config(6);
    cfg.filters = {"reflexiveness"};
    const auto reports = run_suite(cfg);
    REQUIRE(reports.size() == 1);
    CHECK(reports[0].name == "reflexiveness");
    CHECK(reports[0].instances_run == 6);
}

TEST_CASE("serial and parallel policies give identical reports") {
    SuiteConfig cfg = small_config(12);
    cfg.policy = ExecutionPolicy::parallel;
    const auto par = run_suite(cfg);
    cfg.policy = ExecutionPolicy::serial;
    const auto ser = run_suite(cfg);
    REQUIRE(par.size() == ser.size());
    for (std::size_t i = 0; i < par.size(); ++i) {
        CHECK(io::dump(io::report_to_json(par[i])) == io::dump(io::report_to_json(ser[i])));
    }
}

TEST_CASE("runs are deterministic and worst instances replay exactly") {
    const SuiteConfig cfg = small_config(10);
    const auto a = run_suite(cfg);
    const auto b = run_suite(cfg);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CAPTURE(a[i].name);
        CHECK(a[i].max_residual == b[i].max_residual);
        REQUIRE(a[i].worst_instance.has_value());
        const auto restored = io::check_instance_from_json(
            io::parse_json(io::dump(io::check_instance_to_json(*a[i].worst_instance))));
        const auto out = evaluate_instance(restored, cfg.solver);
        CHECK(residual_of(out, a[i].name) == a[i].max_residual);
    }
}

TEST_CASE("subset checks split q values into asserted and observed streams") {
    SuiteConfig cfg = small_config(8);
    cfg.filters = {"weak_subset"};
    const auto reports = run_suite(cfg);
    REQUIRE(reports.size() == 4);
    CHECK(reports[0].instances_run == 8);
    CHECK(reports[0].asserted);
    CHECK(reports[2].instances_run == 2);
    CHECK_FALSE(reports[2].asserted);
    CHECK(reports[0].worst_instance->q < 1.0);
    CHECK(reports[2].worst_instance->q >= 1.0);
}

TEST_CASE("q duality runs on its fixed order list") {
    SuiteConfig cfg = small_config(8);
    cfg.q_values = {1.0};
    cfg.filters = {"q_duality"};
    const auto reports = run_suite(cfg);
    REQUIRE(reports.size() == 1);
    CHECK(reports[0].passed);
    const double q = reports[0].worst_instance->q;
    CHECK((q == 0.3 || q == 0.5 || q == 0.75 || q == 1.25));
}

TEST_CASE("single tiny instance smoke run is fast") {
    SuiteConfig cfg = small_config(1);
    const auto start = std::chrono::steady_clock::now();
    const auto reports = run_suite(cfg);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    CHECK(seconds < 1.0);
    CHECK(suite_passed(reports));
}
