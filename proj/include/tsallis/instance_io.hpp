#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tsallis/constraints.hpp"
#include "tsallis/distribution.hpp"
#include "tsallis/errors.hpp"
#include "tsallis/properties.hpp"
#include "tsallis/solver.hpp"

namespace tsallis::io {

using Json = nlohmann::ordered_json;

inline constexpr const char* kToolName = "tsallis-mindiv";
inline constexpr const char* kToolVersion = "1.0.0";

/// Malformed instance or report file. The message names the line and column
/// for syntax errors and the field path (e.g. constraints[1].values) otherwise.
class SchemaError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// Problem instance as stored on disk.
struct ProblemInstance {
    std::vector<Label> support;
    std::vector<double> prior;
    double q = 1.0;
    std::vector<MomentConstraint> constraints;

    DiscreteDistribution prior_distribution() const;
    ConstraintSet constraint_set() const;
};

struct ParsedInstance {
    ProblemInstance instance;
    std::vector<std::string> warnings;
};

/// Priors summing to 1 within 1e-9 are accepted as is, within 1e-6 they are
/// renormalized with a warning, beyond that the file is rejected.
inline constexpr double kPriorSumTolerance = 1e-9;
inline constexpr double kPriorRenormalizeBand = 1e-6;

ParsedInstance parse_instance(const std::string& text);
ParsedInstance load_instance(const std::string& path);
Json instance_to_json(const ProblemInstance& instance);

/// Reads a whole file; throws SchemaError when it cannot be opened.
std::string read_file(const std::string& path);
/// Parses JSON text, turning syntax errors into SchemaError with line and column.
Json parse_json(const std::string& text);

/// Finite doubles as numbers, non-finite ones as the strings "inf", "-inf", "nan".
Json number(double x);
double to_double(const Json& j, const std::string& field);

Json options_to_json(const SolverOptions& opts);
Json result_to_json(const MinimizationResult& result);

Json check_instance_to_json(const CheckInstance& instance);
CheckInstance check_instance_from_json(const Json& j);
Json outcome_to_json(const CheckOutcome& outcome);
Json report_to_json(const PropertyReport& report);
PropertyReport report_from_json(const Json& j);

/// Reproducibility header: tool, version, command, resolved options and,
/// unless suppressed, an ISO-8601 UTC timestamp.
Json header(const std::string& command, Json options, bool with_timestamp);

/// Two-space indented text with a trailing newline.
std::string dump(const Json& j);

}  // namespace tsallis::io
