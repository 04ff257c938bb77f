#include "tsallis/qalgebra.hpp"

#include <cmath>
#include <sstream>

#include "tsallis/errors.hpp"

namespace tsallis {

DeformationOrder::DeformationOrder(double q) : q_(q) {
    if (!std::isfinite(q) || q <= 0.0) {
        std::ostringstream os;
        os << "deformation order must be finite and > 0, got " << q;
        throw DomainError(os.str());
    }
}

bool DeformationOrder::is_classical() const noexcept {
    return std::abs(1.0 - q_) < kClassicalBand;
}

double q_log(double x, DeformationOrder q) {
    if (!(x > 0.0)) {
        std::ostringstream os;
        os << "q_log requires x > 0, got " << x;
        throw DomainError(os.str());
    }
    if (q.is_classical()) return std::log(x);
    // expm1 keeps full relative precision when (1-q) ln x is small.
    const double d = q.deficit();
    return std::expm1(d * std::log(x)) / d;
}

double q_exp(double x, DeformationOrder q) {
    if (q.is_classical()) return std::exp(x);
    const double d = q.deficit();
    const double bracket = 1.0 + d * x;
    if (bracket > 0.0) return std::exp(std::log1p(d * x) / d);
    if (d > 0.0) return 0.0;  // cut-off
    std::ostringstream os;
    os << "q_exp singular: bracket 1 + (1-q)x = " << bracket << " <= 0 at q = " << q.value()
       << ", x = " << x;
    throw SingularityError(os.str());
}

double q_add(double x, double y, DeformationOrder q) noexcept {
    return x + y + q.deficit() * (x * y);
}

DeformationOrder dual_order(DeformationOrder q) {
    if (!(q.value() < 2.0)) {
        std::ostringstream os;
        os << "dual order 2 - q requires q < 2, got " << q.value();
        throw DomainError(os.str());
    }
    return DeformationOrder(2.0 - q.value());
}

}  // namespace tsallis
