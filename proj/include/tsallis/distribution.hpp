#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tsallis {

using Label = std::string;

/// Tolerance on the total mass of a distribution.
inline constexpr double kMassSumTolerance = 1e-12;

/// Finite distribution over opaque labels. Zero-mass states stay in the support.
class DiscreteDistribution {
public:
    /// Throws ValidationError unless labels are unique, masses are nonnegative
    /// and finite, and the masses sum to 1 within kMassSumTolerance.
    DiscreteDistribution(std::vector<Label> labels, std::vector<double> masses);

    /// Normalizes nonnegative weights with a positive total.
    static DiscreteDistribution from_weights(std::vector<Label> labels, std::span<const double> weights);
    static DiscreteDistribution uniform(std::vector<Label> labels);

    std::size_t size() const noexcept { return masses_.size(); }
    const std::vector<Label>& labels() const noexcept { return labels_; }
    const std::vector<double>& masses() const noexcept { return masses_; }
    double operator[](std::size_t i) const { return masses_[i]; }

    std::optional<std::size_t> index_of(const Label& label) const;
    /// Mass of a label; throws ValidationError for an unknown label.
    double mass(const Label& label) const;

    /// Same labels in the same order.
    bool same_support(const DiscreteDistribution& other) const noexcept { return labels_ == other.labels_; }

    friend bool operator==(const DiscreteDistribution&, const DiscreteDistribution&) = default;

private:
    std::vector<Label> labels_;
    std::vector<double> masses_;
};

/// Partition of a support into nonempty, disjoint blocks covering every label.
class Partition {
public:
    /// Throws ValidationError when blocks are empty, overlap, name unknown labels
    /// or fail to cover the support.
    Partition(const std::vector<Label>& support, std::vector<std::vector<Label>> blocks);

    /// One block per label.
    static Partition singletons(const std::vector<Label>& support);
    /// A single block holding the whole support.
    static Partition whole(const std::vector<Label>& support);

    std::size_t block_count() const noexcept { return blocks_.size(); }
    const std::vector<std::vector<Label>>& blocks() const noexcept { return blocks_; }
    /// Support indices of the states in block i, in support order.
    const std::vector<std::size_t>& block_indices(std::size_t i) const { return indices_[i]; }
    /// Block holding the state at a support index.
    std::size_t block_of(std::size_t state) const { return owner_[state]; }
    const std::vector<Label>& support() const noexcept { return support_; }

    /// Display label of an aggregated block state, e.g. "{a,b}".
    std::string block_label(std::size_t i) const;

private:
    std::vector<Label> support_;
    std::vector<std::vector<Label>> blocks_;
    std::vector<std::vector<std::size_t>> indices_;
    std::vector<std::size_t> owner_;
};

/// Per-block masses: s_i from the prior, u_i from the posterior and, when
/// block-mass information is given, m_i.
struct SubsetStats {
    std::vector<double> prior_masses;
    std::vector<double> posterior_masses;
    std::optional<std::vector<double>> constrained_masses;
};

/// Block masses of d.
std::vector<double> block_masses(const DiscreteDistribution& d, const Partition& part);
SubsetStats subset_stats(const DiscreteDistribution& prior, const DiscreteDistribution& posterior,
                         const Partition& part);

/// Restriction of d to `block`, renormalized. Labels keep d's order.
/// Throws ConditioningError when the block has zero mass.
DiscreteDistribution condition(const DiscreteDistribution& d, std::span<const Label> block);

/// One state per block carrying the block's total mass.
DiscreteDistribution aggregate(const DiscreteDistribution& d, const Partition& part);

/// Independent product; labels are "(x,y)" in row-major order.
DiscreteDistribution product(const DiscreteDistribution& d1, const DiscreteDistribution& d2);

/// Bijection on labels. Labels missing from the map are fixed points.
using Relabeling = std::map<Label, Label>;

/// Moves the mass of x to perm(x). The result keeps d's label order.
/// Throws ValidationError when perm is not a bijection on d's support.
DiscreteDistribution relabel(const DiscreteDistribution& d, const Relabeling& perm);

/// Applies `perm` to a per-label table aligned with `support`.
std::vector<double> relabel_values(const std::vector<Label>& support, std::span<const double> values,
                                   const Relabeling& perm);

Relabeling inverse(const Relabeling& perm);

double l1_distance(std::span<const double> a, std::span<const double> b);
double linf_distance(std::span<const double> a, std::span<const double> b);

}  // namespace tsallis
