#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tsallis/distribution.hpp"
#include "tsallis/instance_io.hpp"
#include "tsallis/properties.hpp"
#include "tsallis/solver.hpp"

using namespace tsallis;
using io::Json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitSchema = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitNonconvergence = 3;

constexpr double kReplayTolerance = 1e-12;

struct CommonFlags {
    std::optional<double> tolerance;
    std::optional<int> max_iter;
    std::optional<double> q;
    std::string format = "json";
    bool no_timestamp = false;
    std::string output;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--tolerance", f.tolerance, "Solver constraint tolerance (oracle-diff: allowed L1 gap, default 1e-6)");
    cmd->add_option("--max-iter", f.max_iter, "Maximum dual Newton iterations");
    cmd->add_option("--q", f.q, "Override the instance's q")->check(CLI::PositiveNumber);
    cmd->add_option("--format", f.format, "Output format")->check(CLI::IsMember({"json", "table"}));
    cmd->add_flag("--no-timestamp", f.no_timestamp, "Omit the timestamp from the JSON header");
    cmd->add_option("--output", f.output, "Write the document to this file instead of stdout");
}

std::vector<double> parse_q_list(const std::string& text) {
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t end = std::min(text.find(',', start), text.size());
        const std::string token = text.substr(start, end - start);
        const auto first = token.find_first_not_of(" \t");
        if (first != std::string::npos) {
            const std::string trimmed = token.substr(first, token.find_last_not_of(" \t") - first + 1);
            std::size_t used = 0;
            double q = 0.0;
            try {
                q = std::stod(trimmed, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != trimmed.size() || !(q > 0.0) || !std::isfinite(q))
                throw io::SchemaError("field 'q-list': '" + trimmed + "' is not a positive number");
            out.push_back(q);
        } else if (end < text.size() || start > 0) {
            throw io::SchemaError("field 'q-list': empty entry");
        }
        start = end + 1;
    }
    return out;
}

SolverOptions solver_options(const CommonFlags& f, bool tolerance_is_solver) {
    SolverOptions opts;
    if (tolerance_is_solver && f.tolerance) opts.tolerance = *f.tolerance;
    if (f.max_iter) opts.max_dual_iterations = *f.max_iter;
    return opts;
}

void emit(const CommonFlags& f, const std::string& text) {
    if (f.output.empty()) {
        std::cout << text;
        std::cout.flush();
        return;
    }
    std::ofstream out(f.output, std::ios::binary);
    if (!out) throw io::SchemaError("cannot write '" + f.output + "'");
    out << text;
}

std::string fmt(const char* spec, double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, x);
    return buf;
}

std::string join_labels(const std::vector<Label>& v) {
    std::string s;
    for (const auto& l : v) s += (s.empty() ? "" : ", ") + l;
    return s.empty() ? "-" : s;
}

std::string result_table(const MinimizationResult& r) {
    std::string s;
    s += "state                    posterior\n";
    for (std::size_t i = 0; i < r.posterior.size(); ++i) {
        char line[160];
        std::snprintf(line, sizeof line, "%-24s %.17g\n", r.posterior.labels()[i].c_str(), r.posterior.masses()[i]);
        s += line;
    }
    s += "divergence               " + fmt("%.17g", r.divergence_value.value()) + "\n";
    s += "method                   " + std::string(to_string(r.method)) + (r.fell_back ? " (fallback)" : "") + "\n";
    s += "iterations               " + std::to_string(r.iterations) + "\n";
    s += "tilt representable      " + std::string(r.tilt_representable ? " yes" : " no") + "\n";
    s += "lambda                   " + fmt("%.17g", r.lambda) + "\n";
    s += "z_hat                    " + fmt("%.17g", r.z_hat) + "\n";
    for (std::size_t m = 0; m < r.betas.size(); ++m)
        s += "beta[" + std::to_string(m) + "]" + std::string(19 - std::to_string(m).size(), ' ') + fmt("%.17g", r.betas[m]) + "\n";
    s += "cut-off states           " + join_labels(r.cutoff_states) + "\n";
    s += "max constraint residual  " + fmt("%.3e", r.max_constraint_residual) + "\n";
    s += "max KKT residual         " + fmt("%.3e", r.max_kkt_residual) + "\n";
    return s;
}

struct SolveAttempt {
    int code = kExitOk;
    Json doc;
    std::optional<MinimizationResult> result;
    std::string message;
};

SolveAttempt attempt_solve(const DiscreteDistribution& prior, const ConstraintSet& c, double q,
                           const SolverOptions& opts) {
    SolveAttempt a;
    a.doc["q"] = q;
    try {
        a.result = minimize(prior, c, DeformationOrder(q), opts);
        a.doc["status"] = "converged";
        a.doc["result"] = io::result_to_json(*a.result);
    } catch (const InfeasibleError& e) {
        a.code = kExitInfeasible;
        a.message = e.what();
        a.doc["status"] = "infeasible";
        a.doc["violation"] = io::number(e.violation());
        a.doc["message"] = e.what();
    } catch (const NonconvergenceError& e) {
        a.code = kExitNonconvergence;
        a.message = e.what();
        a.doc["status"] = "nonconvergence";
        a.doc["residual"] = io::number(e.residual());
        Json best = Json::array();
        for (double x : e.best_iterate()) best.push_back(io::number(x));
        a.doc["best_iterate"] = std::move(best);
        a.doc["message"] = e.what();
    } catch (const Error& e) {
        a.code = kExitSchema;
        a.message = e.what();
        a.doc["status"] = "invalid";
        a.doc["message"] = e.what();
    }
    return a;
}

Json base_options(const CommonFlags& f, const std::string& instance_path, const SolverOptions& opts) {
    Json o;
    o["instance"] = instance_path;
    o["format"] = f.format;
    o["q_override"] = f.q ? Json(*f.q) : Json(nullptr);
    o["solver"] = io::options_to_json(opts);
    return o;
}

io::ParsedInstance load_or_report(const std::string& path) {
    auto parsed = io::load_instance(path);
    for (const auto& w : parsed.warnings) std::cerr << "warning: " << path << ": " << w << "\n";
    return parsed;
}

int cmd_solve(const CommonFlags& f, const std::string& path) {
    const auto parsed = load_or_report(path);
    const auto& inst = parsed.instance;
    const double q = f.q.value_or(inst.q);
    const SolverOptions opts = solver_options(f, true);
    auto a = attempt_solve(inst.prior_distribution(), inst.constraint_set(), q, opts);
    if (a.code != kExitOk) std::cerr << "error: " << a.message << "\n";
    if (f.format == "table") {
        if (a.result) emit(f, result_table(*a.result));
        else emit(f, "status  " + a.doc["status"].get<std::string>() + "\n" + "message " + a.message + "\n");
        return a.code;
    }
    Json doc;
    doc["header"] = io::header("solve", base_options(f, path, opts), !f.no_timestamp);
    doc["warnings"] = parsed.warnings;
    for (auto& [k, v] : a.doc.items()) doc[k] = v;
    emit(f, io::dump(doc));
    return a.code;
}

int cmd_oracle_diff(const CommonFlags& f, const std::string& path) {
    const auto parsed = load_or_report(path);
    const auto& inst = parsed.instance;
    const double q = f.q.value_or(inst.q);
    const double gap_tolerance = f.tolerance.value_or(1e-6);
    const SolverOptions opts = solver_options(f, false);
    const auto prior = inst.prior_distribution();
    const auto c = inst.constraint_set();

    auto dual = attempt_solve(prior, c, q, opts);
    SolveAttempt primal;
    primal.doc["q"] = q;
    try {
        primal.result = minimize_primal_oracle(prior, c, DeformationOrder(q), opts);
        primal.doc["status"] = "converged";
        primal.doc["result"] = io::result_to_json(*primal.result);
    } catch (const InfeasibleError& e) {
        primal.code = kExitInfeasible;
        primal.doc["status"] = "infeasible";
        primal.doc["message"] = e.what();
    } catch (const NonconvergenceError& e) {
        primal.code = kExitNonconvergence;
        primal.doc["status"] = "nonconvergence";
        primal.doc["message"] = e.what();
    } catch (const Error& e) {
        primal.code = kExitSchema;
        primal.doc["status"] = "invalid";
        primal.doc["message"] = e.what();
    }

    int code = std::max(dual.code, primal.code);
    Json cmp;
    if (dual.result && primal.result) {
        const auto& a = dual.result->posterior.masses();
        const auto& b = primal.result->posterior.masses();
        const double l1 = l1_distance(a, b);
        cmp["l1"] = io::number(l1);
        cmp["linf"] = io::number(linf_distance(a, b));
        cmp["dual_divergence"] = io::number(dual.result->divergence_value.value());
        cmp["primal_divergence"] = io::number(primal.result->divergence_value.value());
        cmp["tolerance"] = gap_tolerance;
        cmp["agree"] = l1 <= gap_tolerance;
        if (!(l1 <= gap_tolerance)) code = kExitNonconvergence;
    }
    if (f.format == "table") {
        std::string s;
        s += "dual status    " + dual.doc["status"].get<std::string>() + "\n";
        s += "primal status  " + primal.doc["status"].get<std::string>() + "\n";
        if (!cmp.empty()) {
            s += "L1 gap         " + fmt("%.3e", cmp["l1"].get<double>()) + "\n";
            s += "Linf gap       " + fmt("%.3e", cmp["linf"].get<double>()) + "\n";
            s += "dual I_q       " + fmt("%.17g", dual.result->divergence_value.value()) + "\n";
            s += "primal I_q     " + fmt("%.17g", primal.result->divergence_value.value()) + "\n";
            s += std::string("agree          ") + (cmp["agree"].get<bool>() ? "yes" : "no") + "\n";
        }
        emit(f, s);
        return code;
    }
    Json options = base_options(f, path, opts);
    options["gap_tolerance"] = gap_tolerance;
    Json doc;
    doc["header"] = io::header("oracle-diff", std::move(options), !f.no_timestamp);
    doc["warnings"] = parsed.warnings;
    doc["dual"] = dual.doc;
    doc["primal"] = primal.doc;
    doc["comparison"] = cmp.empty() ? Json(nullptr) : cmp;
    emit(f, io::dump(doc));
    return code;
}

int cmd_sweep(const CommonFlags& f, const std::string& path, const std::optional<std::vector<double>>& q_list) {
    const auto parsed = load_or_report(path);
    const auto& inst = parsed.instance;
    std::vector<double> qs = q_list ? *q_list : std::vector<double>{f.q.value_or(inst.q)};
    for (double q : qs)
        if (!(q > 0.0) || !std::isfinite(q)) throw io::SchemaError("field 'q-list': every q must be positive");
    const SolverOptions opts = solver_options(f, true);
    const auto prior = inst.prior_distribution();
    const auto c = inst.constraint_set();

    int code = kExitOk;
    Json results = Json::array();
    std::string table;
    for (double q : qs) {
        auto a = attempt_solve(prior, c, q, opts);
        code = std::max(code, a.code);
        table += fmt("q = %-8g ", q) + a.doc["status"].get<std::string>();
        if (a.result) table += "  I_q = " + fmt("%.17g", a.result->divergence_value.value());
        table += "\n";
        results.push_back(std::move(a.doc));
    }
    Json duality = Json::array();
    for (double q : qs) {
        if (!(q < 1.0)) continue;
        bool paired = false;
        for (double other : qs) paired = paired || std::abs(other - (2.0 - q)) <= 1e-12;
        if (!paired) continue;
        Json entry;
        entry["q"] = q;
        entry["paired_q"] = 2.0 - q;
        try {
            const auto d = q_duality_check(prior, c, DeformationOrder(q), opts);
            entry["residual"] = io::number(d.residual);
            table += fmt("duality q = %g", q) + fmt(" <-> %g", 2.0 - q) + "  residual " + fmt("%.3e", d.residual) + "\n";
        } catch (const Error& e) {
            entry["residual"] = nullptr;
            entry["message"] = e.what();
        }
        duality.push_back(std::move(entry));
    }
    if (f.format == "table") {
        emit(f, table);
        return code;
    }
    Json options = base_options(f, path, opts);
    Json q_json = Json::array();
    for (double q : qs) q_json.push_back(q);
    options["q_list"] = std::move(q_json);
    Json doc;
    doc["header"] = io::header("sweep", std::move(options), !f.no_timestamp);
    doc["warnings"] = parsed.warnings;
    doc["results"] = std::move(results);
    doc["duality"] = std::move(duality);
    emit(f, io::dump(doc));
    return code;
}

std::string summary_table(const std::vector<PropertyReport>& reports) {
    std::string s;
    char line[256];
    std::snprintf(line, sizeof line, "%-55s %9s %13s %10s  %s\n", "check", "instances", "max residual", "threshold",
                  "status");
    s += line;
    for (const auto& r : reports) {
        const char* status = r.asserted ? (r.passed ? "PASS" : "FAIL") : (r.passed ? "ok (observed)" : "exceeds (observed)");
        std::snprintf(line, sizeof line, "%-55s %9zu %13.3e %10.0e  %s\n", r.name.c_str(), r.instances_run,
                      r.max_residual, r.threshold, status);
        s += line;
    }
    s += std::string("suite ") + (suite_passed(reports) ? "PASSED" : "FAILED") + "\n";
    return s;
}

struct CheckFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::vector<double>> q_list;
    std::vector<std::string> filters;
    std::optional<std::size_t> instances;
    std::string replay;
    bool serial = false;
};

SuiteConfig resolve_suite(const CommonFlags& f, const CheckFlags& c) {
    SuiteConfig cfg;
    if (!c.config.empty()) {
        const Json j = io::parse_json(io::read_file(c.config));
        if (!j.is_object()) throw io::SchemaError("field '<root>': expected an object");
        for (const auto& [key, value] : j.items()) {
            if (key == "seed") {
                if (!value.is_number_unsigned()) throw io::SchemaError("field 'seed': expected a nonnegative integer");
                cfg.seed = value.get<std::uint64_t>();
            } else if (key == "instances") {
                if (!value.is_number_unsigned()) throw io::SchemaError("field 'instances': expected a nonnegative integer");
                cfg.instances = value.get<std::size_t>();
            } else if (key == "q_values") {
                if (!value.is_array()) throw io::SchemaError("field 'q_values': expected an array");
                cfg.q_values.clear();
                for (std::size_t i = 0; i < value.size(); ++i)
                    cfg.q_values.push_back(io::to_double(value[i], "q_values[" + std::to_string(i) + "]"));
            } else if (key == "filters") {
                if (!value.is_array()) throw io::SchemaError("field 'filters': expected an array");
                cfg.filters.clear();
                for (const auto& v : value) {
                    if (!v.is_string()) throw io::SchemaError("field 'filters': expected strings");
                    cfg.filters.push_back(v.get<std::string>());
                }
            } else if (key == "serial") {
                if (!value.is_boolean()) throw io::SchemaError("field 'serial': expected a boolean");
                if (value.get<bool>()) cfg.policy = ExecutionPolicy::serial;
            } else {
                throw io::SchemaError("field '" + key + "': unknown configuration key");
            }
        }
    }
    if (c.seed) cfg.seed = *c.seed;
    if (c.q_list) cfg.q_values = *c.q_list;
    if (!c.filters.empty()) cfg.filters = c.filters;
    if (c.instances) cfg.instances = *c.instances;
    if (c.serial) cfg.policy = ExecutionPolicy::serial;
    for (double q : cfg.q_values)
        if (!(q > 0.0) || !std::isfinite(q)) throw io::SchemaError("field 'q_values': every q must be positive");
    cfg.solver = solver_options(f, true);
    return cfg;
}

Json suite_options(const SuiteConfig& cfg) {
    Json o;
    o["seed"] = cfg.seed;
    o["instances"] = cfg.instances;
    Json qs = Json::array();
    for (double q : cfg.q_values) qs.push_back(q);
    o["q_values"] = std::move(qs);
    o["filters"] = cfg.filters;
    o["solver"] = io::options_to_json(cfg.solver);
    return o;
}

bool same_residual(double a, double b) {
    if (std::isinf(a) || std::isinf(b)) return a == b;
    return std::abs(a - b) <= kReplayTolerance;
}

int cmd_replay(const CommonFlags& f, const SolverOptions& opts, const std::string& path) {
    const Json j = io::parse_json(io::read_file(path));
    std::vector<PropertyReport> recorded;
    std::optional<CheckInstance> bare;
    if (j.is_object() && j.contains("reports")) {
        for (const auto& r : j["reports"]) recorded.push_back(io::report_from_json(r));
    } else if (j.is_object() && j.contains("worst_instance")) {
        recorded.push_back(io::report_from_json(j));
    } else {
        bare = io::check_instance_from_json(j);
    }

    int code = kExitOk;
    Json replays = Json::array();
    std::string table;
    const auto replay_one = [&](const CheckInstance& inst, const PropertyReport* rep) {
        const auto outcome = evaluate_instance(inst, opts);
        Json entry;
        entry["check"] = inst.check;
        entry["index"] = inst.index;
        entry["q"] = inst.q;
        entry["outcome"] = io::outcome_to_json(outcome);
        if (!outcome.error.empty()) code = kExitNonconvergence;
        if (rep) {
            entry["report"] = rep->name;
            entry["recorded_residual"] = io::number(rep->max_residual);
            std::optional<double> replayed;
            for (const auto& e : outcome.entries)
                if (e.report == rep->name) replayed = e.residual;
            if (!outcome.error.empty()) replayed = std::numeric_limits<double>::infinity();
            entry["replayed_residual"] = replayed ? io::number(*replayed) : Json(nullptr);
            const bool same = replayed && same_residual(*replayed, rep->max_residual);
            entry["reproduced"] = same;
            if (!same) code = kExitNonconvergence;
            table += rep->name + "  recorded " + fmt("%.17g", rep->max_residual) + "  replayed " +
                     (replayed ? fmt("%.17g", *replayed) : std::string("-")) + (same ? "  reproduced\n" : "  MISMATCH\n");
        } else {
            for (const auto& e : outcome.entries) table += e.report + "  " + fmt("%.17g", e.residual) + "\n";
            if (!outcome.error.empty()) table += "error  " + outcome.error + "\n";
        }
        replays.push_back(std::move(entry));
    };
    if (bare) replay_one(*bare, nullptr);
    for (const auto& r : recorded)
        if (r.worst_instance) replay_one(*r.worst_instance, &r);

    if (f.format == "table") {
        emit(f, table);
        return code;
    }
    Json options;
    options["replay"] = path;
    options["solver"] = io::options_to_json(opts);
    Json doc;
    doc["header"] = io::header("check", std::move(options), !f.no_timestamp);
    doc["replays"] = std::move(replays);
    emit(f, io::dump(doc));
    return code;
}

int cmd_check(const CommonFlags& f, const CheckFlags& c) {
    const SuiteConfig cfg = resolve_suite(f, c);
    if (!c.replay.empty()) return cmd_replay(f, cfg.solver, c.replay);
    const auto reports = run_suite(cfg);
    const bool passed = suite_passed(reports);
    const std::string table = summary_table(reports);
    if (f.format == "table") {
        emit(f, table);
    } else {
        Json doc;
        doc["header"] = io::header("check", suite_options(cfg), !f.no_timestamp);
        doc["passed"] = passed;
        Json list = Json::array();
        for (const auto& r : reports) list.push_back(io::report_to_json(r));
        doc["reports"] = std::move(list);
        emit(f, io::dump(doc));
        std::cerr << table;
    }
    return passed ? kExitOk : kExitNonconvergence;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Minimum Tsallis relative entropy updating under moment constraints"};
    app.set_version_flag("--version", std::string(io::kToolName) + " " + io::kToolVersion);
    app.require_subcommand(1);

    CommonFlags flags;
    std::string instance_path;
    std::string q_list_text;
    CheckFlags check;

    auto* solve = app.add_subcommand("solve", "Solve one instance");
    add_common(solve, flags);
    solve->add_option("instance", instance_path, "Instance JSON file")->required();

    auto* oracle = app.add_subcommand("oracle-diff", "Compare the dual solver with the primal oracle");
    add_common(oracle, flags);
    oracle->add_option("instance", instance_path, "Instance JSON file")->required();

    auto* sweep = app.add_subcommand("sweep", "Solve one instance for a list of q values");
    add_common(sweep, flags);
    sweep->add_option("instance", instance_path, "Instance JSON file")->required();
    auto* sweep_q = sweep->add_option("--q-list", q_list_text, "Comma-separated q values; an empty string gives no solves");

    auto* check_cmd = app.add_subcommand("check", "Run the property suite");
    add_common(check_cmd, flags);
    check_cmd->add_option("--config", check.config, "Suite configuration JSON file");
    check_cmd->add_option("--seed", check.seed, "Suite seed (default 42)");
    auto* check_q = check_cmd->add_option("--q-list", q_list_text, "Comma-separated q values");
    check_cmd->add_option("--filter", check.filters, "Run only checks whose name contains this text (repeatable)");
    check_cmd->add_option("--instances", check.instances, "Instances per check");
    check_cmd->add_option("--replay", check.replay, "Re-evaluate the worst instances stored in a report file");
    check_cmd->add_flag("--serial", check.serial, "Evaluate instances serially");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitSchema;
    }

    try {
        if (*solve) return cmd_solve(flags, instance_path);
        if (*oracle) return cmd_oracle_diff(flags, instance_path);
        if (*sweep) {
            std::optional<std::vector<double>> qs;
            if (sweep_q->count() > 0) qs = parse_q_list(q_list_text);
            return cmd_sweep(flags, instance_path, qs);
        }
        if (check_q->count() > 0) check.q_list = parse_q_list(q_list_text);
        return cmd_check(flags, check);
    } catch (const io::SchemaError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitSchema;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitSchema;
    }
}
