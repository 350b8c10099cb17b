#ifndef DUALCAL_DATASET_HPP
#define DUALCAL_DATASET_HPP

// Synthetic classification data for desk-scale training runs.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "dualcal/error.hpp"
#include "dualcal/random.hpp"

namespace dualcal {

enum class SyntheticKind { GaussianMixture, Rings };

struct SyntheticSpec {
    SyntheticKind kind = SyntheticKind::GaussianMixture;
    std::size_t num_classes = 3;
    std::size_t dimension = 10;
    double overlap = 1.25;  // noise scale; larger means a higher Bayes error
    std::size_t n_train = 1000;
    std::size_t n_val = 1000;
    std::size_t n_test = 3000;
    std::uint64_t seed = 1;

    void validate() const {
        if (num_classes < 2) throw InvalidInput("dataset: need k >= 2");
        if (dimension < 2) throw InvalidInput("dataset: need dim >= 2");
        if (!(overlap >= 0.0) || !std::isfinite(overlap)) throw InvalidInput("dataset: overlap must be >= 0");
        if (n_train == 0 || n_val == 0 || n_test == 0) throw InvalidInput("dataset: every split needs samples");
    }

    /// Canonical key=value form, accepted back by parse().
    std::string to_string() const {
        std::ostringstream out;
        out.precision(17);
        out << "kind=" << (kind == SyntheticKind::Rings ? "rings" : "gaussian") << ",k=" << num_classes
            << ",dim=" << dimension << ",overlap=" << overlap << ",train=" << n_train << ",val=" << n_val
            << ",test=" << n_test << ",seed=" << seed;
        return out.str();
    }

    /// Parses comma-separated key=value pairs; unspecified keys keep defaults.
    static SyntheticSpec parse(std::string_view text) {
        SyntheticSpec spec;
        for (std::size_t start = 0; start < text.size();) {
            const std::size_t end = std::min(text.find(',', start), text.size());
            const std::string_view item = text.substr(start, end - start);
            start = end + 1;
            if (item.empty()) continue;
            const std::size_t eq = item.find('=');
            if (eq == std::string_view::npos) throw InvalidInput("dataset spec: expected key=value, got '" + std::string(item) + "'");
            const std::string key(item.substr(0, eq));
            const std::string value(item.substr(eq + 1));
            try {
                std::size_t used = 0;
                auto as_count = [&] {
                    if (value.empty() || value[0] == '-') throw InvalidInput("negative");
                    const auto n = std::stoull(value, &used);
                    if (used != value.size()) throw InvalidInput("trailing characters");
                    return static_cast<std::size_t>(n);
                };
                if (key == "kind") {
                    if (value == "gaussian") spec.kind = SyntheticKind::GaussianMixture;
                    else if (value == "rings") spec.kind = SyntheticKind::Rings;
                    else throw InvalidInput("unknown kind");
                } else if (key == "k") spec.num_classes = as_count();
                else if (key == "dim") spec.dimension = as_count();
                else if (key == "train") spec.n_train = as_count();
                else if (key == "val") spec.n_val = as_count();
                else if (key == "test") spec.n_test = as_count();
                else if (key == "seed") spec.seed = as_count();
                else if (key == "overlap") {
                    spec.overlap = std::stod(value, &used);
                    if (used != value.size()) throw InvalidInput("trailing characters");
                } else throw InvalidInput("unknown key");
            } catch (const std::exception&) {
                throw InvalidInput("dataset spec: bad entry '" + std::string(item) + "'");
            }
        }
        spec.validate();
        return spec;
    }
};

/// Feature rows (row-major) with labels.
struct FeatureSet {
    std::size_t dimension = 0;
    std::vector<double> features;
    std::vector<std::size_t> labels;

    std::size_t size() const noexcept { return labels.size(); }
    std::span<const double> row(std::size_t i) const { return {features.data() + i * dimension, dimension}; }
    friend bool operator==(const FeatureSet&, const FeatureSet&) = default;
};

struct DatasetSplits {
    FeatureSet train;
    FeatureSet validation;
    FeatureSet test;
};

namespace detail {

inline FeatureSet sample_split(const SyntheticSpec& spec, std::size_t n, Rng& rng) {
    FeatureSet set;
    set.dimension = spec.dimension;
    set.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) set.labels[i] = i % spec.num_classes;
    rng.shuffle(set.labels);

    set.features.resize(n * spec.dimension);
    const double k = static_cast<double>(spec.num_classes);
    for (std::size_t i = 0; i < n; ++i) {
        double* x = set.features.data() + i * spec.dimension;
        const double c = static_cast<double>(set.labels[i]);
        if (spec.kind == SyntheticKind::GaussianMixture) {
            // class means evenly spaced on a circle of radius 2 in the first two axes
            const double angle = 2.0 * std::numbers::pi * c / k;
            for (std::size_t d = 0; d < spec.dimension; ++d) x[d] = spec.overlap * rng.normal();
            x[0] += 2.0 * std::cos(angle);
            x[1] += 2.0 * std::sin(angle);
        } else {
            // concentric rings of radius 1, 2, ..., K
            const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
            const double radius = 1.0 + c + 0.5 * spec.overlap * rng.normal();
            x[0] = radius * std::cos(angle);
            x[1] = radius * std::sin(angle);
            for (std::size_t d = 2; d < spec.dimension; ++d) x[d] = spec.overlap * rng.normal();
        }
    }
    return set;
}

}  // namespace detail

/// Deterministic in spec.seed; every split has labels balanced within one sample.
inline DatasetSplits generate_dataset(const SyntheticSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    DatasetSplits out;
    out.train = detail::sample_split(spec, spec.n_train, rng);
    out.validation = detail::sample_split(spec, spec.n_val, rng);
    out.test = detail::sample_split(spec, spec.n_test, rng);
    return out;
}

}  // namespace dualcal

#endif  // DUALCAL_DATASET_HPP
