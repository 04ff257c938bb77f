#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "tsallis/distribution.hpp"
#include "tsallis/qalgebra.hpp"

namespace tsallis {

/// Nonnegative extended real used for divergence values. Infinity marks an
/// absolute-continuity violation; reading it as a number requires an explicit
/// check (value() throws, as_double() returns +inf).
class ExtendedReal {
public:
    constexpr ExtendedReal() = default;
    constexpr ExtendedReal(double v) : value_(v) {}  // NOLINT(google-explicit-constructor)
    static constexpr ExtendedReal infinity() { return ExtendedReal(std::numeric_limits<double>::infinity()); }

    bool is_infinite() const noexcept { return value_ == std::numeric_limits<double>::infinity(); }
    bool is_finite() const noexcept { return !is_infinite(); }

    /// Throws DomainError when infinite.
    double value() const;
    double as_double() const noexcept { return value_; }

    friend ExtendedReal operator+(ExtendedReal a, ExtendedReal b) noexcept { return {a.value_ + b.value_}; }
    friend bool operator==(ExtendedReal a, ExtendedReal b) noexcept { return a.value_ == b.value_; }
    friend bool operator<(ExtendedReal a, ExtendedReal b) noexcept { return a.value_ < b.value_; }
    friend bool operator<=(ExtendedReal a, ExtendedReal b) noexcept { return a.value_ <= b.value_; }

private:
    double value_ = 0.0;
};

/// Convex f on (0, inf) with f(1) = 0, defining D_f(p||r) = sum r f(p/r).
struct CsiszarGenerator {
    std::function<double(double)> f;
    /// lim_{t->0} f(t); may be +inf.
    ExtendedReal f_at_zero;
    /// lim_{t->inf} f(t)/t, used for states with r = 0 < p; may be +inf.
    ExtendedReal growth_at_infinity;
    std::string name;

    /// Checks f(1) = 0 to 1e-12 and convexity on a log grid over [1e-3, 1e3];
    /// throws ValidationError otherwise.
    void validate() const;
};

/// f(t) = t ln t.
CsiszarGenerator kl_generator();

/// f(t) = t ln_{2-q}(t) = (t^q - t)/(q - 1), the generator whose f-divergence
/// is exactly -sum p ln_q(r/p). Convex for every q > 0.
CsiszarGenerator tsallis_generator(DeformationOrder q);

/// sum_x r(x) f(p(x)/r(x)) with 0 f(0/0) = 0, r f(0) for p = 0 and
/// p * lim f(t)/t for r = 0 < p. Throws SupportMismatchError for differing supports.
ExtendedReal f_divergence(const DiscreteDistribution& p, const DiscreteDistribution& r,
                          const CsiszarGenerator& gen);

struct DivergenceReport {
    ExtendedReal value;
    /// False when some state has p > 0 = r. For q < 1 the value stays finite.
    bool absolutely_continuous = true;
};

/// I_q(p||r) = -sum p ln_q(r/p). States with p = 0 contribute 0.
DivergenceReport tsallis_divergence_report(const DiscreteDistribution& p, const DiscreteDistribution& r,
                                           DeformationOrder q);
ExtendedReal tsallis_divergence(const DiscreteDistribution& p, const DiscreteDistribution& r, DeformationOrder q);
ExtendedReal kl_divergence(const DiscreteDistribution& p, const DiscreteDistribution& r);

/// Same sum on raw aligned mass vectors (no validation); used by solver kernels.
double tsallis_divergence_raw(const std::vector<double>& p, const std::vector<double>& r, DeformationOrder q);

/// Pseudo-additivity of Tsallis divergence under independent products:
/// I_q(pX x pY || rX x rY) = a + b + (q - 1) a b.
double pseudo_additive_sum(double a, double b, DeformationOrder q) noexcept;

/// Three-term decomposition of I_q(p||r) over a partition:
///   sum m_i D_i  +  sum (-m_i ln_q(s_i/m_i))  +  (1-q) sum m_i ln_q(s_i/m_i) D_i
/// with m_i, s_i the block masses of p and r and D_i = I_q(p_i||r_i) of the conditionals.
struct DecompositionTerms {
    std::vector<double> posterior_block_masses;  // m_i
    std::vector<double> prior_block_masses;      // s_i
    std::vector<double> block_divergences;       // D_i
    std::vector<double> mixing_terms;            // -m_i ln_q(s_i/m_i)
    double cross_term = 0.0;

    double weighted_block_sum() const;
    double total() const;
};

/// Throws ConditioningError when a block has zero mass under p or r, and
/// DomainError when a conditional divergence is infinite.
DecompositionTerms decomposition_terms(const DiscreteDistribution& p, const DiscreteDistribution& r,
                                       const Partition& part, DeformationOrder q);

}  // namespace tsallis
