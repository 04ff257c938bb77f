#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tsallis/constraints.hpp"
#include "tsallis/distribution.hpp"
#include "tsallis/solver.hpp"

namespace tsallis {

/// Everything needed to re-evaluate one check instance. Fields a check does not
/// use stay empty.
struct CheckInstance {
    std::string check;
    std::uint64_t seed = 0;
    std::uint64_t index = 0;
    double q = 1.0;

    std::vector<Label> support;
    std::vector<double> prior;
    std::vector<MomentConstraint> constraints;
    /// Second constraint set (invariance).
    std::vector<MomentConstraint> extra_constraints;

    std::vector<std::vector<Label>> partition;
    /// Per-block constraints, values tabulated over the block's labels in block order.
    std::vector<std::vector<MomentConstraint>> block_constraints;
    /// Block-mass information m_i (subset independence).
    std::vector<double> block_masses;
    /// Constraints on the aggregated distribution, one value per block.
    std::vector<MomentConstraint> aggregated_constraints;

    Relabeling permutation;
    std::uint64_t start_seed = 0;
    /// "feasible" or "violated" for reflexiveness.
    std::string mode;

    /// Divergence invariants: p against prior on `support`, and a second pair.
    std::vector<double> posterior;
    std::vector<Label> support2;
    std::vector<double> prior2;
    std::vector<double> posterior2;
};

/// Residuals of one instance, keyed by report name. Entries with
/// `counted == false` were skipped (for example diagnostics unavailable).
struct CheckOutcome {
    struct Entry {
        std::string report;
        double residual = 0.0;
        bool counted = true;
    };
    std::vector<Entry> entries;
    std::string error;
};

struct PropertyReport {
    std::string name;
    std::size_t instances_run = 0;
    double max_residual = 0.0;
    double threshold = 0.0;
    bool passed = true;
    /// Observation-mode reports are recorded but never fail the suite.
    bool asserted = true;
    std::optional<CheckInstance> worst_instance;
    std::string notes;
};

/// Seeded stream of random check instances. Identical seed gives identical instances.
struct InstanceGenerator {
    std::uint64_t seed = 42;
    std::size_t min_support = 3;
    std::size_t max_support = 8;
    std::size_t max_constraints = 3;
    std::vector<double> q_values{0.3, 0.5, 0.7, 1.0, 1.5, 2.0};
    /// Priors strictly positive on every state.
    bool strict_positivity = true;

    /// Instance `index` of `check`, with q = q_values[index % size]. Throws
    /// ValidationError for an unknown check or an empty q list.
    CheckInstance generate(const std::string& check, std::uint64_t index) const;
};

enum class ExecutionPolicy { serial, parallel };

struct SuiteConfig {
    std::uint64_t seed = 42;
    std::size_t instances = 200;
    std::vector<double> q_values{0.3, 0.5, 0.7, 1.0, 1.5, 2.0};
    /// Substrings of check names to run; empty runs everything.
    std::vector<std::string> filters;
    ExecutionPolicy policy = ExecutionPolicy::parallel;
    SolverOptions solver;
};

/// Names of the checks run_suite knows, in execution order.
const std::vector<std::string>& check_names();

/// Runs one instance. Never throws for solver failures; they are recorded in
/// `error` with infinite residuals.
CheckOutcome evaluate_instance(const CheckInstance& instance, const SolverOptions& opts = {});

/// Runs one check over its instance stream.
std::vector<PropertyReport> run_check(const std::string& check, const SuiteConfig& config);

/// Runs every selected check. An empty q list gives an empty report set.
std::vector<PropertyReport> run_suite(const SuiteConfig& config);

/// True when every asserted report passed.
bool suite_passed(const std::vector<PropertyReport>& reports);

}  // namespace tsallis
