#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace tsallis {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation (x <= 0 for ln_q, q <= 0, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// q_exp evaluated at or beyond its pole (bracket <= 0 with a negative exponent).
class SingularityError : public Error {
public:
    using Error::Error;
};

/// Conditioning on a block that carries no mass.
class ConditioningError : public Error {
public:
    using Error::Error;
};

/// Two objects that must share a support do not.
class SupportMismatchError : public Error {
public:
    using Error::Error;
};

/// Malformed distribution, partition, relabeling or constraint.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Equality constraints are affinely dependent together with normalization.
class DependentConstraintsError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class InfeasibleError : public Error {
public:
    InfeasibleError(const std::string& what, double violation)
        : Error(what), violation_(violation) {}

    /// Minimum total (L1) constraint violation found by phase 1.
    double violation() const noexcept { return violation_; }

private:
    double violation_;
};

class NonconvergenceError : public Error {
public:
    NonconvergenceError(const std::string& what, std::vector<double> best_iterate, double residual)
        : Error(what), best_(std::move(best_iterate)), residual_(residual) {}

    const std::vector<double>& best_iterate() const noexcept { return best_; }
    double residual() const noexcept { return residual_; }

private:
    std::vector<double> best_;
    double residual_;
};

}  // namespace tsallis
