#include <cmath>
#include <limits>

#include "doctest.h"
#include "tsallis/instance_io.hpp"

using namespace tsallis;

namespace {

std::string error_of(const std::string& text) {
    try {
        io::parse_instance(text);
    } catch (const io::SchemaError& e) {
        return e.what();
    }
    return "";
}

bool contains(const std::string& s, const std::string& part) { return s.find(part) != std::string::npos; }

}  // namespace

TEST_CASE("parse a valid instance") {
    const auto parsed = io::parse_instance(R"({
        "support": ["a", "b", "c"],
        "prior": [0.2, 0.3, 0.5],
        "q": 0.5,
        "constraints": [{"kind": "eq", "values": [0, 1, 2], "target": 1.5},
                        {"kind": "ge", "values": [1, 0, 0], "target": 0.1}]
    })");
    const auto& inst = parsed.instance;
    CHECK(parsed.warnings.empty());
    CHECK(inst.support == std::vector<Label>{"a", "b", "c"});
    CHECK(inst.prior == std::vector<double>{0.2, 0.3, 0.5});
    CHECK(inst.q == 0.5);
    REQUIRE(inst.constraints.size() == 2);
    CHECK(inst.constraints[0].kind == ConstraintKind::equality);
    CHECK(inst.constraints[1].kind == ConstraintKind::inequality_ge);
    CHECK(inst.constraints[1].target == 0.1);
}

TEST_CASE("constraints are optional") {
    const auto parsed = io::parse_instance(R"({"support": ["a"], "prior": [1], "q": 2})");
    CHECK(parsed.instance.constraints.empty());
}

TEST_CASE("schema errors name the field") {
    CHECK(contains(error_of(R"({"prior": [1], "q": 1})"), "'support'"));
    CHECK(contains(error_of(R"({"support": ["a", "b"], "prior": [1], "q": 1})"), "'prior'"));
    CHECK(contains(error_of(R"({"support": ["a", "b"], "prior": [0.5, 0.5], "q": 0})"), "'q'"));
    CHECK(contains(error_of(R"({"support": ["a", "b"], "prior": [1.5, -0.5], "q": 1})"), "'prior[1]'"));
    CHECK(contains(error_of(R"({"support": ["a", "b"], "prior": [0.5, 0.5], "q": 1,
        "constraints": [{"kind": "eq", "values": [0, 1], "target": 0.5},
                        {"kind": "eq", "values": [0, 1, 2], "target": 0.5}]})"),
                   "'constraints[1].values'"));
    CHECK(contains(error_of(R"({"support": ["a", "b"], "prior": [0.5, 0.5], "q": 1,
        "constraints": [{"kind": "le", "values": [0, 1], "target": 0.5}]})"),
                   "'constraints[0].kind'"));
    CHECK(contains(error_of(R"({"support": ["a", "b"], "prior": [0.5, 0.5], "q": 1,
        "constraints": [{"kind": "eq", "values": [0, 1]}]})"),
                   "'constraints[0].target'"));
    CHECK(contains(error_of(R"({"support": ["a", "a"], "prior": [0.5, 0.5], "q": 1})"), "duplicate"));
}

TEST_CASE("syntax errors report line and column") {
    const auto msg = error_of("{\n  \"support\": [\"a\"],\n  \"prior\": [1 1]\n}");
    CHECK(contains(msg, "line 3"));
    CHECK(contains(msg, "column"));
}

TEST_CASE("prior renormalization band") {
    const auto exact = io::parse_instance(R"({"support": ["a", "b"], "prior": [0.5, 0.5000000000001], "q": 1})");
    CHECK(exact.warnings.empty());
    const auto near = io::parse_instance(R"({"support": ["a", "b"], "prior": [0.5, 0.5000001], "q": 1})");
    REQUIRE(near.warnings.size() == 1);
    CHECK(std::abs(near.instance.prior[0] + near.instance.prior[1] - 1.0) <= 1e-15);
    CHECK(contains(error_of(R"({"support": ["a", "b"], "prior": [0.5, 0.6], "q": 1})"), "'prior'"));
}

TEST_CASE("instance round trip") {
    io::ProblemInstance inst;
    inst.support = {"x", "y", "z"};
    inst.prior = {0.1, 0.2, 0.7};
    inst.q = 1.25;
    inst.constraints = {{{0.1, 1.0 / 3.0, -2.5}, 0.123456789012345678, ConstraintKind::equality}};
    const auto text = io::dump(io::instance_to_json(inst));
    const auto back = io::parse_instance(text).instance;
    CHECK(back.support == inst.support);
    CHECK(back.prior == inst.prior);
    CHECK(back.q == inst.q);
    CHECK(back.constraints[0].values == inst.constraints[0].values);
    CHECK(back.constraints[0].target == inst.constraints[0].target);
    CHECK(io::dump(io::instance_to_json(back)) == text);
}

TEST_CASE("non-finite numbers") {
    CHECK(io::number(std::numeric_limits<double>::infinity()) == "inf");
    CHECK(io::number(-std::numeric_limits<double>::infinity()) == "-inf");
    CHECK(io::number(std::nan("")) == "nan");
    CHECK(std::isinf(io::to_double(io::Json("inf"), "x")));
    CHECK(std::isnan(io::to_double(io::Json("nan"), "x")));
    CHECK_THROWS_AS(io::to_double(io::Json("abc"), "x"), io::SchemaError);
}

TEST_CASE("check instances round trip byte for byte") {
    InstanceGenerator gen;
    for (const auto& name : check_names()) {
        CAPTURE(name);
        const auto inst = gen.generate(name, 3);
        const auto text = io::dump(io::check_instance_to_json(inst));
        const auto back = io::check_instance_from_json(io::parse_json(text));
        CHECK(io::dump(io::check_instance_to_json(back)) == text);
        const auto a = evaluate_instance(inst);
        const auto b = evaluate_instance(back);
        REQUIRE(a.entries.size() == b.entries.size());
        for (std::size_t i = 0; i < a.entries.size(); ++i) CHECK(a.entries[i].residual == b.entries[i].residual);
    }
}

TEST_CASE("report round trip") {
    PropertyReport r;
    r.name = "uniqueness";
    r.instances_run = 12;
    r.max_residual = std::numeric_limits<double>::infinity();
    r.threshold = 1e-7;
    r.passed = false;
    r.notes = "1 instance(s) failed to solve";
    r.worst_instance = InstanceGenerator{}.generate("uniqueness", 0);
    const auto back = io::report_from_json(io::parse_json(io::dump(io::report_to_json(r))));
    CHECK(back.name == r.name);
    CHECK(back.instances_run == 12);
    CHECK(std::isinf(back.max_residual));
    CHECK_FALSE(back.passed);
    REQUIRE(back.worst_instance.has_value());
    CHECK(back.worst_instance->start_seed == r.worst_instance->start_seed);
}

TEST_CASE("result document fields") {
    const DiscreteDistribution prior({"a", "b", "c"}, {0.2, 0.3, 0.5});
    const ConstraintSet c(prior.labels(), {{{0, 1, 2}, 1.5, ConstraintKind::equality}});
    const auto res = minimize(prior, c, DeformationOrder(0.5));
    const auto j = io::result_to_json(res);
    CHECK(j["posterior"]["masses"].size() == 3);
    CHECK(j["tilt"]["betas"].size() == 1);
    CHECK(j["diagnostics"]["method"] == "dual");
    CHECK(j["cutoff_states"].empty());
}

TEST_CASE("header") {
    const auto with = io::header("solve", io::Json::object(), true);
    CHECK(with["tool"] == "tsallis-mindiv");
    CHECK(with["version"] == "1.0.0");
    CHECK(with.contains("timestamp"));
    const auto without = io::header("solve", io::Json::object(), false);
    CHECK_FALSE(without.contains("timestamp"));
}
