#include "tsallis/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "tsallis/errors.hpp"

namespace tsallis {

namespace {

void require_unique(const std::vector<Label>& labels) {
    std::unordered_set<Label> seen;
    for (const auto& l : labels) {
        if (!seen.insert(l).second) throw ValidationError("duplicate label '" + l + "'");
    }
}

std::unordered_map<Label, std::size_t> index_map(const std::vector<Label>& labels) {
    std::unordered_map<Label, std::size_t> idx;
    idx.reserve(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) idx.emplace(labels[i], i);
    return idx;
}

}  // namespace

DiscreteDistribution::DiscreteDistribution(std::vector<Label> labels, std::vector<double> masses)
    : labels_(std::move(labels)), masses_(std::move(masses)) {
    if (labels_.size() != masses_.size()) {
        std::ostringstream os;
        os << "distribution has " << labels_.size() << " labels but " << masses_.size() << " masses";
        throw ValidationError(os.str());
    }
    if (labels_.empty()) throw ValidationError("distribution support is empty");
    require_unique(labels_);
    double total = 0.0;
    for (std::size_t i = 0; i < masses_.size(); ++i) {
        if (!std::isfinite(masses_[i]) || masses_[i] < 0.0) {
            std::ostringstream os;
            os << "mass of '" << labels_[i] << "' is " << masses_[i] << "; masses must be finite and >= 0";
            throw ValidationError(os.str());
        }
        total += masses_[i];
    }
    if (std::abs(total - 1.0) > kMassSumTolerance) {
        std::ostringstream os;
        os.precision(17);
        os << "masses sum to " << total << ", expected 1";
        throw ValidationError(os.str());
    }
}

DiscreteDistribution DiscreteDistribution::from_weights(std::vector<Label> labels,
                                                        std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) {
        if (!std::isfinite(w) || w < 0.0) throw ValidationError("weights must be finite and >= 0");
        total += w;
    }
    if (!(total > 0.0)) throw ValidationError("weights have zero total");
    std::vector<double> masses(weights.size());
    std::transform(weights.begin(), weights.end(), masses.begin(), [total](double w) { return w / total; });
    return DiscreteDistribution(std::move(labels), std::move(masses));
}

DiscreteDistribution DiscreteDistribution::uniform(std::vector<Label> labels) {
    std::vector<double> w(labels.size(), 1.0);
    return from_weights(std::move(labels), w);
}

std::optional<std::size_t> DiscreteDistribution::index_of(const Label& label) const {
    auto it = std::find(labels_.begin(), labels_.end(), label);
    if (it == labels_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - labels_.begin());
}

double DiscreteDistribution::mass(const Label& label) const {
    auto i = index_of(label);
    if (!i) throw ValidationError("unknown label '" + label + "'");
    return masses_[*i];
}

Partition::Partition(const std::vector<Label>& support, std::vector<std::vector<Label>> blocks)
    : support_(support), blocks_(std::move(blocks)), owner_(support.size(), 0) {
    require_unique(support_);
    const auto idx = index_map(support_);
    std::vector<bool> covered(support_.size(), false);
    indices_.resize(blocks_.size());
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
        if (blocks_[b].empty()) throw ValidationError("partition has an empty block");
        for (const auto& l : blocks_[b]) {
            auto it = idx.find(l);
            if (it == idx.end()) throw ValidationError("partition names unknown label '" + l + "'");
            if (covered[it->second]) throw ValidationError("label '" + l + "' appears in two blocks");
            covered[it->second] = true;
            owner_[it->second] = b;
            indices_[b].push_back(it->second);
        }
        std::sort(indices_[b].begin(), indices_[b].end());
    }
    for (std::size_t i = 0; i < covered.size(); ++i) {
        if (!covered[i]) throw ValidationError("partition does not cover label '" + support_[i] + "'");
    }
}

Partition Partition::singletons(const std::vector<Label>& support) {
    std::vector<std::vector<Label>> blocks;
    blocks.reserve(support.size());
    for (const auto& l : support) blocks.push_back({l});
    return Partition(support, std::move(blocks));
}

Partition Partition::whole(const std::vector<Label>& support) { return Partition(support, {support}); }

std::string Partition::block_label(std::size_t i) const {
    std::string s = "{";
    for (std::size_t k = 0; k < blocks_[i].size(); ++k) {
        if (k) s += ',';
        s += blocks_[i][k];
    }
    return s + "}";
}

std::vector<double> block_masses(const DiscreteDistribution& d, const Partition& part) {
    if (d.labels() != part.support()) throw SupportMismatchError("partition and distribution supports differ");
    std::vector<double> m(part.block_count(), 0.0);
    for (std::size_t i = 0; i < d.size(); ++i) m[part.block_of(i)] += d[i];
    return m;
}

SubsetStats subset_stats(const DiscreteDistribution& prior, const DiscreteDistribution& posterior,
                         const Partition& part) {
    return SubsetStats{block_masses(prior, part), block_masses(posterior, part), std::nullopt};
}

DiscreteDistribution condition(const DiscreteDistribution& d, std::span<const Label> block) {
    std::vector<bool> in(d.size(), false);
    for (const auto& l : block) {
        auto i = d.index_of(l);
        if (!i) throw ValidationError("conditioning block names unknown label '" + l + "'");
        in[*i] = true;
    }
    std::vector<Label> labels;
    std::vector<double> w;
    double total = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (!in[i]) continue;
        labels.push_back(d.labels()[i]);
        w.push_back(d[i]);
        total += d[i];
    }
    if (labels.empty()) throw ConditioningError("conditioning block is empty");
    if (!(total > 0.0)) throw ConditioningError("conditioning block has zero mass");
    for (double& x : w) x /= total;
    return DiscreteDistribution(std::move(labels), std::move(w));
}

DiscreteDistribution aggregate(const DiscreteDistribution& d, const Partition& part) {
    std::vector<Label> labels;
    for (std::size_t b = 0; b < part.block_count(); ++b) labels.push_back(part.block_label(b));
    return DiscreteDistribution(std::move(labels), block_masses(d, part));
}

DiscreteDistribution product(const DiscreteDistribution& d1, const DiscreteDistribution& d2) {
    std::vector<Label> labels;
    std::vector<double> masses;
    labels.reserve(d1.size() * d2.size());
    masses.reserve(d1.size() * d2.size());
    for (std::size_t i = 0; i < d1.size(); ++i) {
        for (std::size_t j = 0; j < d2.size(); ++j) {
            labels.push_back("(" + d1.labels()[i] + "," + d2.labels()[j] + ")");
            masses.push_back(d1[i] * d2[j]);
        }
    }
    // Products of normalized masses can drift from 1 by a few ulps per term.
    double total = std::accumulate(masses.begin(), masses.end(), 0.0);
    if (std::abs(total - 1.0) > kMassSumTolerance) {
        for (double& m : masses) m /= total;
    }
    return DiscreteDistribution(std::move(labels), std::move(masses));
}

namespace {

std::vector<std::size_t> permutation_indices(const std::vector<Label>& support, const Relabeling& perm) {
    const auto idx = index_map(support);
    std::vector<std::size_t> target(support.size());
    std::vector<bool> hit(support.size(), false);
    for (std::size_t i = 0; i < support.size(); ++i) {
        auto it = perm.find(support[i]);
        const Label& image = it == perm.end() ? support[i] : it->second;
        auto j = idx.find(image);
        if (j == idx.end()) throw ValidationError("relabeling maps '" + support[i] + "' outside the support");
        if (hit[j->second]) throw ValidationError("relabeling is not injective at '" + image + "'");
        hit[j->second] = true;
        target[i] = j->second;
    }
    for (const auto& [from, to] : perm) {
        if (!idx.count(from)) throw ValidationError("relabeling names unknown label '" + from + "'");
    }
    return target;
}

}  // namespace

std::vector<double> relabel_values(const std::vector<Label>& support, std::span<const double> values,
                                   const Relabeling& perm) {
    if (values.size() != support.size()) throw SupportMismatchError("value table does not match support");
    const auto target = permutation_indices(support, perm);
    std::vector<double> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) out[target[i]] = values[i];
    return out;
}

DiscreteDistribution relabel(const DiscreteDistribution& d, const Relabeling& perm) {
    return DiscreteDistribution(d.labels(), relabel_values(d.labels(), d.masses(), perm));
}

Relabeling inverse(const Relabeling& perm) {
    Relabeling inv;
    for (const auto& [from, to] : perm) {
        if (!inv.emplace(to, from).second) throw ValidationError("relabeling is not injective at '" + to + "'");
    }
    return inv;
}

double l1_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw SupportMismatchError("l1_distance: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return s;
}

double linf_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw SupportMismatchError("linf_distance: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s = std::max(s, std::abs(a[i] - b[i]));
    return s;
}

}  // namespace tsallis
