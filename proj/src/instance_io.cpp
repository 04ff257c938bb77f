#include "tsallis/instance_io.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

namespace tsallis::io {

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& what) {
    throw SchemaError("field '" + field + "': " + what);
}

const Json& require(const Json& obj, const std::string& key, const std::string& path) {
    const std::string field = path.empty() ? key : path + "." + key;
    if (!obj.is_object()) fail(path.empty() ? "<root>" : path, "expected an object");
    const auto it = obj.find(key);
    if (it == obj.end()) fail(field, "missing");
    return *it;
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }
std::string at(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

std::vector<double> to_doubles(const Json& j, const std::string& field) {
    if (!j.is_array()) fail(field, "expected an array of numbers");
    std::vector<double> out;
    out.reserve(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(to_double(j[i], at(field, i)));
    return out;
}

std::vector<Label> to_labels(const Json& j, const std::string& field) {
    if (!j.is_array()) fail(field, "expected an array of strings");
    std::vector<Label> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_string()) fail(at(field, i), "expected a string");
        out.push_back(j[i].get<std::string>());
    }
    return out;
}

std::uint64_t to_u64(const Json& j, const std::string& field) {
    if (!j.is_number_unsigned()) fail(field, "expected a nonnegative integer");
    return j.get<std::uint64_t>();
}

std::string to_string_field(const Json& j, const std::string& field) {
    if (!j.is_string()) fail(field, "expected a string");
    return j.get<std::string>();
}

Json numbers(const std::vector<double>& v) {
    Json out = Json::array();
    for (double x : v) out.push_back(number(x));
    return out;
}

Json labels(const std::vector<Label>& v) { return Json(v); }

Json constraint_to_json(const MomentConstraint& c) {
    Json j;
    j["kind"] = c.kind == ConstraintKind::equality ? "eq" : "ge";
    j["values"] = numbers(c.values);
    j["target"] = number(c.target);
    return j;
}

MomentConstraint constraint_from_json(const Json& j, const std::string& path, std::size_t expected_size) {
    const std::string kind = to_string_field(require(j, "kind", path), join(path, "kind"));
    if (kind != "eq" && kind != "ge") fail(join(path, "kind"), "expected \"eq\" or \"ge\", got \"" + kind + "\"");
    auto values = to_doubles(require(j, "values", path), join(path, "values"));
    if (expected_size != 0 && values.size() != expected_size)
        fail(join(path, "values"), "has " + std::to_string(values.size()) + " entries, expected " +
                                       std::to_string(expected_size));
    for (std::size_t i = 0; i < values.size(); ++i)
        if (!std::isfinite(values[i])) fail(at(join(path, "values"), i), "must be finite");
    const double target = to_double(require(j, "target", path), join(path, "target"));
    if (!std::isfinite(target)) fail(join(path, "target"), "must be finite");
    return {std::move(values), target, kind == "eq" ? ConstraintKind::equality : ConstraintKind::inequality_ge};
}

Json constraints_to_json(const std::vector<MomentConstraint>& cs) {
    Json out = Json::array();
    for (const auto& c : cs) out.push_back(constraint_to_json(c));
    return out;
}

std::vector<MomentConstraint> constraints_from_json(const Json& j, const std::string& field, std::size_t expected_size) {
    if (!j.is_array()) fail(field, "expected an array");
    std::vector<MomentConstraint> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(constraint_from_json(j[i], at(field, i), expected_size));
    return out;
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace

DiscreteDistribution ProblemInstance::prior_distribution() const { return DiscreteDistribution(support, prior); }

ConstraintSet ProblemInstance::constraint_set() const { return ConstraintSet(support, constraints); }

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SchemaError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Json parse_json(const std::string& text) {
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        std::size_t line = 1;
        std::size_t column = 1;
        const std::size_t end = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
        for (std::size_t i = 0; i < end; ++i) {
            if (text[i] == '\n') {
                ++line;
                column = 1;
            } else {
                ++column;
            }
        }
        std::string what = e.what();
        const auto colon = what.find("syntax error");
        if (colon != std::string::npos) what = what.substr(colon);
        throw SchemaError("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what);
    }
}

Json number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    return x;
}

double to_double(const Json& j, const std::string& field) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    }
    fail(field, "expected a number");
}

ParsedInstance parse_instance(const std::string& text) {
    const Json j = parse_json(text);
    if (!j.is_object()) fail("<root>", "expected an object");
    ParsedInstance out;
    ProblemInstance& inst = out.instance;
    inst.support = to_labels(require(j, "support", ""), "support");
    if (inst.support.empty()) fail("support", "must not be empty");
    inst.prior = to_doubles(require(j, "prior", ""), "prior");
    if (inst.prior.size() != inst.support.size())
        fail("prior", "has " + std::to_string(inst.prior.size()) + " entries, expected " +
                          std::to_string(inst.support.size()));
    for (std::size_t i = 0; i < inst.prior.size(); ++i)
        if (!std::isfinite(inst.prior[i]) || inst.prior[i] < 0.0) fail(at("prior", i), "must be finite and nonnegative");
    const double total = std::accumulate(inst.prior.begin(), inst.prior.end(), 0.0);
    const double gap = std::abs(total - 1.0);
    if (gap > kPriorRenormalizeBand) {
        std::ostringstream os;
        os.precision(17);
        os << "sums to " << total << ", expected 1";
        fail("prior", os.str());
    }
    if (gap > kPriorSumTolerance) {
        std::ostringstream os;
        os.precision(17);
        os << "prior sums to " << total << "; renormalized";
        out.warnings.push_back(os.str());
    }
    if (gap > kMassSumTolerance)
        for (double& m : inst.prior) m /= total;
    inst.q = to_double(require(j, "q", ""), "q");
    if (!std::isfinite(inst.q) || inst.q <= 0.0) fail("q", "must be a finite positive number");
    if (j.contains("constraints"))
        inst.constraints = constraints_from_json(j["constraints"], "constraints", inst.support.size());
    try {
        (void)inst.prior_distribution();
        (void)inst.constraint_set();
    } catch (const ValidationError& e) {
        throw SchemaError(e.what());
    }
    return out;
}

ParsedInstance load_instance(const std::string& path) { return parse_instance(read_file(path)); }

Json instance_to_json(const ProblemInstance& instance) {
    Json j;
    j["support"] = labels(instance.support);
    j["prior"] = numbers(instance.prior);
    j["q"] = number(instance.q);
    j["constraints"] = constraints_to_json(instance.constraints);
    return j;
}

Json options_to_json(const SolverOptions& opts) {
    Json j;
    j["tolerance"] = opts.tolerance;
    j["dual_tolerance"] = opts.dual_tolerance;
    j["max_dual_iterations"] = opts.max_dual_iterations;
    j["max_primal_iterations"] = opts.max_primal_iterations;
    j["max_halvings"] = opts.max_halvings;
    j["primal_gradient_tolerance"] = opts.primal_gradient_tolerance;
    j["primal_decrease_tolerance"] = opts.primal_decrease_tolerance;
    j["fd_step"] = opts.fd_step;
    j["allow_primal_fallback"] = opts.allow_primal_fallback;
    return j;
}

Json result_to_json(const MinimizationResult& r) {
    Json j;
    Json posterior;
    posterior["support"] = labels(r.posterior.labels());
    posterior["masses"] = numbers(r.posterior.masses());
    j["posterior"] = std::move(posterior);
    j["divergence"] = number(r.divergence_value.value());
    Json tilt;
    tilt["representable"] = r.tilt_representable;
    tilt["lambda"] = number(r.lambda);
    tilt["betas"] = numbers(r.betas);
    tilt["z_hat"] = number(r.z_hat);
    j["tilt"] = std::move(tilt);
    Json legendre;
    legendre["lambda"] = number(r.legendre_lambda);
    legendre["betas"] = numbers(r.legendre_betas);
    legendre["multipliers"] = numbers(r.multipliers);
    j["legendre"] = std::move(legendre);
    j["cutoff_states"] = labels(r.cutoff_states);
    j["forced_zero_states"] = labels(r.forced_zero_states);
    j["frozen_states"] = labels(r.frozen_states);
    Json diag;
    diag["method"] = to_string(r.method);
    diag["fell_back"] = r.fell_back;
    diag["degenerate"] = r.degenerate;
    diag["iterations"] = r.iterations;
    diag["max_constraint_residual"] = number(r.max_constraint_residual);
    diag["max_kkt_residual"] = number(r.max_kkt_residual);
    diag["notes"] = r.notes;
    j["diagnostics"] = std::move(diag);
    return j;
}

Json check_instance_to_json(const CheckInstance& inst) {
    Json j;
    j["check"] = inst.check;
    j["seed"] = inst.seed;
    j["index"] = inst.index;
    j["q"] = number(inst.q);
    j["support"] = labels(inst.support);
    j["prior"] = numbers(inst.prior);
    j["constraints"] = constraints_to_json(inst.constraints);
    j["extra_constraints"] = constraints_to_json(inst.extra_constraints);
    Json partition = Json::array();
    for (const auto& block : inst.partition) partition.push_back(labels(block));
    j["partition"] = std::move(partition);
    Json blocks = Json::array();
    for (const auto& cs : inst.block_constraints) blocks.push_back(constraints_to_json(cs));
    j["block_constraints"] = std::move(blocks);
    j["block_masses"] = numbers(inst.block_masses);
    j["aggregated_constraints"] = constraints_to_json(inst.aggregated_constraints);
    Json perm = Json::object();
    for (const auto& [from, to] : inst.permutation) perm[from] = to;
    j["permutation"] = std::move(perm);
    j["start_seed"] = inst.start_seed;
    j["mode"] = inst.mode;
    j["posterior"] = numbers(inst.posterior);
    j["support2"] = labels(inst.support2);
    j["prior2"] = numbers(inst.prior2);
    j["posterior2"] = numbers(inst.posterior2);
    return j;
}

CheckInstance check_instance_from_json(const Json& j) {
    CheckInstance inst;
    inst.check = to_string_field(require(j, "check", ""), "check");
    inst.seed = to_u64(require(j, "seed", ""), "seed");
    inst.index = to_u64(require(j, "index", ""), "index");
    inst.q = to_double(require(j, "q", ""), "q");
    inst.support = to_labels(require(j, "support", ""), "support");
    const auto optional_field = [&](const char* key) -> const Json* {
        const auto it = j.find(key);
        return it == j.end() ? nullptr : &*it;
    };
    if (const Json* f = optional_field("prior")) inst.prior = to_doubles(*f, "prior");
    if (const Json* f = optional_field("constraints")) inst.constraints = constraints_from_json(*f, "constraints", 0);
    if (const Json* f = optional_field("extra_constraints"))
        inst.extra_constraints = constraints_from_json(*f, "extra_constraints", 0);
    if (const Json* f = optional_field("partition")) {
        if (!f->is_array()) fail("partition", "expected an array");
        for (std::size_t b = 0; b < f->size(); ++b) inst.partition.push_back(to_labels((*f)[b], at("partition", b)));
    }
    if (const Json* f = optional_field("block_constraints")) {
        if (!f->is_array()) fail("block_constraints", "expected an array");
        for (std::size_t b = 0; b < f->size(); ++b)
            inst.block_constraints.push_back(constraints_from_json((*f)[b], at("block_constraints", b), 0));
    }
    if (const Json* f = optional_field("block_masses")) inst.block_masses = to_doubles(*f, "block_masses");
    if (const Json* f = optional_field("aggregated_constraints"))
        inst.aggregated_constraints = constraints_from_json(*f, "aggregated_constraints", 0);
    if (const Json* f = optional_field("permutation")) {
        if (!f->is_object()) fail("permutation", "expected an object");
        for (const auto& [from, to] : f->items()) inst.permutation[from] = to_string_field(to, "permutation." + from);
    }
    if (const Json* f = optional_field("start_seed")) inst.start_seed = to_u64(*f, "start_seed");
    if (const Json* f = optional_field("mode")) inst.mode = to_string_field(*f, "mode");
    if (const Json* f = optional_field("posterior")) inst.posterior = to_doubles(*f, "posterior");
    if (const Json* f = optional_field("support2")) inst.support2 = to_labels(*f, "support2");
    if (const Json* f = optional_field("prior2")) inst.prior2 = to_doubles(*f, "prior2");
    if (const Json* f = optional_field("posterior2")) inst.posterior2 = to_doubles(*f, "posterior2");
    return inst;
}

Json outcome_to_json(const CheckOutcome& outcome) {
    Json j;
    Json entries = Json::array();
    for (const auto& e : outcome.entries) {
        Json entry;
        entry["report"] = e.report;
        entry["residual"] = number(e.residual);
        entry["counted"] = e.counted;
        entries.push_back(std::move(entry));
    }
    j["entries"] = std::move(entries);
    j["error"] = outcome.error;
    return j;
}

Json report_to_json(const PropertyReport& r) {
    Json j;
    j["name"] = r.name;
    j["asserted"] = r.asserted;
    j["passed"] = r.passed;
    j["instances_run"] = r.instances_run;
    j["max_residual"] = number(r.max_residual);
    j["threshold"] = number(r.threshold);
    j["notes"] = r.notes;
    j["worst_instance"] = r.worst_instance ? check_instance_to_json(*r.worst_instance) : Json(nullptr);
    return j;
}

PropertyReport report_from_json(const Json& j) {
    PropertyReport r;
    r.name = to_string_field(require(j, "name", ""), "name");
    r.max_residual = to_double(require(j, "max_residual", ""), "max_residual");
    if (j.contains("threshold")) r.threshold = to_double(j["threshold"], "threshold");
    if (j.contains("asserted") && j["asserted"].is_boolean()) r.asserted = j["asserted"].get<bool>();
    if (j.contains("passed") && j["passed"].is_boolean()) r.passed = j["passed"].get<bool>();
    if (j.contains("instances_run")) r.instances_run = to_u64(j["instances_run"], "instances_run");
    if (j.contains("notes") && j["notes"].is_string()) r.notes = j["notes"].get<std::string>();
    if (j.contains("worst_instance") && !j["worst_instance"].is_null())
        r.worst_instance = check_instance_from_json(j["worst_instance"]);
    return r;
}

Json header(const std::string& command, Json options, bool with_timestamp) {
    Json h;
    h["tool"] = kToolName;
    h["version"] = kToolVersion;
    h["command"] = command;
    h["options"] = std::move(options);
    if (with_timestamp) h["timestamp"] = utc_timestamp();
    return h;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace tsallis::io
