#pragma once

// Scalar q-deformed algebra: q-logarithm, q-exponential, q-addition and the
// q <-> 2-q duality. All functions are pure and thread-safe.

namespace tsallis {

/// Width of the band around q = 1 inside which the exact classical branch is used.
inline constexpr double kClassicalBand = 1e-14;

/// The deformation order q. Always strictly positive and finite.
class DeformationOrder {
public:
    explicit DeformationOrder(double q);

    double value() const noexcept { return q_; }

    /// 1 - q, the coefficient that appears throughout the deformed algebra.
    double deficit() const noexcept { return 1.0 - q_; }

    /// True when |1 - q| is inside the classical band, where ln_q = ln and exp_q = exp.
    bool is_classical() const noexcept;

    friend bool operator==(DeformationOrder a, DeformationOrder b) noexcept { return a.q_ == b.q_; }

private:
    double q_;
};

/// ln_q x = (x^(1-q) - 1) / (1 - q), natural log at q = 1. Throws DomainError for x <= 0.
double q_log(double x, DeformationOrder q);

/// exp_q x = [1 + (1-q) x]^(1/(1-q)) with the Tsallis cut-off (0) when the
/// bracket is nonpositive and the exponent positive. A nonpositive bracket with
/// a negative exponent (q > 1, x >= 1/(q-1)) throws SingularityError.
/// Every non-error return is finite.
double q_exp(double x, DeformationOrder q);

/// x (+)_q y = x + y + (1-q) x y.
double q_add(double x, double y, DeformationOrder q) noexcept;

/// 2 - q. Requires 0 < q < 2 so that the dual order is itself a valid order.
DeformationOrder dual_order(DeformationOrder q);

}  // namespace tsallis
