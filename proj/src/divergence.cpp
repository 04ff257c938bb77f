#include "tsallis/divergence.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "tsallis/errors.hpp"

namespace tsallis {

double ExtendedReal::value() const {
    if (is_infinite()) throw DomainError("divergence is infinite (absolute continuity violated)");
    return value_;
}

void CsiszarGenerator::validate() const {
    const double at_one = f(1.0);
    if (!(std::abs(at_one) <= 1e-12)) {
        std::ostringstream os;
        os << "generator '" << name << "' has f(1) = " << at_one << ", expected 0";
        throw ValidationError(os.str());
    }
    constexpr int kGrid = 121;
    std::vector<double> t(kGrid), ft(kGrid);
    for (int i = 0; i < kGrid; ++i) {
        t[i] = std::pow(10.0, -3.0 + 6.0 * i / (kGrid - 1));
        ft[i] = f(t[i]);
    }
    for (int i = 1; i + 1 < kGrid; ++i) {
        const double left = (ft[i] - ft[i - 1]) / (t[i] - t[i - 1]);
        const double right = (ft[i + 1] - ft[i]) / (t[i + 1] - t[i]);
        if (right - left < -1e-9 * (1.0 + std::abs(left) + std::abs(right))) {
            std::ostringstream os;
            os << "generator '" << name << "' is not convex near t = " << t[i];
            throw ValidationError(os.str());
        }
    }
}

CsiszarGenerator kl_generator() {
    return CsiszarGenerator{[](double t) { return t * std::log(t); }, 0.0, ExtendedReal::infinity(), "t ln t"};
}

CsiszarGenerator tsallis_generator(DeformationOrder q) {
    std::ostringstream name;
    name << "t ln_{2-q} t, q = " << q.value();
    if (q.is_classical()) {
        auto g = kl_generator();
        g.name = name.str();
        return g;
    }
    const double a = q.value() - 1.0;
    // f(t) = t (t^(q-1) - 1)/(q-1); f(t)/t -> 1/(1-q) for q < 1 and +inf for q > 1.
    ExtendedReal growth = a < 0.0 ? ExtendedReal(-1.0 / a) : ExtendedReal::infinity();
    return CsiszarGenerator{[a](double t) { return t * std::expm1(a * std::log(t)) / a; }, 0.0, growth,
                            name.str()};
}

ExtendedReal f_divergence(const DiscreteDistribution& p, const DiscreteDistribution& r,
                          const CsiszarGenerator& gen) {
    if (!p.same_support(r)) throw SupportMismatchError("f_divergence: p and r have different supports");
    double sum = 0.0;
    bool infinite = false;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double pi = p[i], ri = r[i];
        if (pi == 0.0 && ri == 0.0) continue;
        if (ri == 0.0) {
            if (gen.growth_at_infinity.is_infinite()) infinite = true;
            else sum += pi * gen.growth_at_infinity.as_double();
        } else if (pi == 0.0) {
            if (gen.f_at_zero.is_infinite()) infinite = true;
            else sum += ri * gen.f_at_zero.as_double();
        } else {
            sum += ri * gen.f(pi / ri);
        }
    }
    return infinite ? ExtendedReal::infinity() : ExtendedReal(sum);
}

namespace {

// -p ln_q(r/p) for p > 0; flags r = 0.
double tsallis_term(double p, double r, DeformationOrder q, bool& infinite, bool& non_ac) {
    if (r == 0.0) {
        non_ac = true;
        // ln_q(0+) = -1/(1-q) for q < 1 and -inf otherwise.
        if (q.deficit() > 0.0 && !q.is_classical()) return p / q.deficit();
        infinite = true;
        return 0.0;
    }
    return -p * q_log(r / p, q);
}

}  // namespace

DivergenceReport tsallis_divergence_report(const DiscreteDistribution& p, const DiscreteDistribution& r,
                                           DeformationOrder q) {
    if (!p.same_support(r)) throw SupportMismatchError("tsallis_divergence: p and r have different supports");
    bool infinite = false, non_ac = false;
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] == 0.0) continue;
        sum += tsallis_term(p[i], r[i], q, infinite, non_ac);
    }
    DivergenceReport rep;
    rep.value = infinite ? ExtendedReal::infinity() : ExtendedReal(sum);
    rep.absolutely_continuous = !non_ac;
    return rep;
}

ExtendedReal tsallis_divergence(const DiscreteDistribution& p, const DiscreteDistribution& r, DeformationOrder q) {
    return tsallis_divergence_report(p, r, q).value;
}

ExtendedReal kl_divergence(const DiscreteDistribution& p, const DiscreteDistribution& r) {
    return tsallis_divergence(p, r, DeformationOrder(1.0));
}

double tsallis_divergence_raw(const std::vector<double>& p, const std::vector<double>& r, DeformationOrder q) {
    bool infinite = false, non_ac = false;
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] <= 0.0) continue;
        sum += tsallis_term(p[i], r[i], q, infinite, non_ac);
    }
    return infinite ? std::numeric_limits<double>::infinity() : sum;
}

double pseudo_additive_sum(double a, double b, DeformationOrder q) noexcept {
    return a + b + (q.value() - 1.0) * a * b;
}

double DecompositionTerms::weighted_block_sum() const {
    double s = 0.0;
    for (std::size_t i = 0; i < block_divergences.size(); ++i) s += posterior_block_masses[i] * block_divergences[i];
    return s;
}

double DecompositionTerms::total() const {
    return weighted_block_sum() + std::accumulate(mixing_terms.begin(), mixing_terms.end(), 0.0) + cross_term;
}

DecompositionTerms decomposition_terms(const DiscreteDistribution& p, const DiscreteDistribution& r,
                                       const Partition& part, DeformationOrder q) {
    if (!p.same_support(r)) throw SupportMismatchError("decomposition_terms: p and r have different supports");
    DecompositionTerms out;
    out.posterior_block_masses = block_masses(p, part);
    out.prior_block_masses = block_masses(r, part);
    const std::size_t n = part.block_count();
    out.block_divergences.resize(n);
    out.mixing_terms.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double m = out.posterior_block_masses[i], s = out.prior_block_masses[i];
        if (!(m > 0.0) || !(s > 0.0)) {
            std::ostringstream os;
            os << "decomposition_terms: block " << i << " has zero mass (posterior " << m << ", prior " << s << ")";
            throw ConditioningError(os.str());
        }
        const auto& block = part.blocks()[i];
        const auto pi = condition(p, block);
        const auto ri = condition(r, block);
        const double d = tsallis_divergence(pi, ri, q).value();
        const double a = q_log(s / m, q);
        out.block_divergences[i] = d;
        out.mixing_terms[i] = -m * a;
        out.cross_term += m * a * d;
    }
    out.cross_term *= q.deficit();
    return out;
}

}  // namespace tsallis
