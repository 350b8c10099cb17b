#ifndef DUALCAL_METRICS_HPP
#define DUALCAL_METRICS_HPP

// Calibration and discrimination metrics over a LabeledBatch.
//
// Every reduction runs over samples sorted by (score, correctness), so the
// results are bit-identical under any reordering of the batch rows.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "dualcal/batch.hpp"
#include "dualcal/error.hpp"
#include "dualcal/softmax.hpp"

namespace dualcal {

enum class BinScheme { EqualWidth, EqualMass };

struct Bin {
    double lo = 0.0;
    double hi = 0.0;
    std::size_t count = 0;
    double accuracy = 0.0;    // meaningful only when count > 0
    double confidence = 0.0;  // meaningful only when count > 0
};

struct BinReport {
    BinScheme scheme = BinScheme::EqualWidth;
    std::size_t num_bins = 0;
    std::size_t total = 0;
    std::vector<Bin> bins;
};

struct ScoredSample {
    double score = 0.0;
    bool hit = false;
};

struct ReliabilityRow {
    double lo = 0.0;
    double hi = 0.0;
    double accuracy = 0.0;
    double confidence = 0.0;
    double gap = 0.0;  // accuracy - confidence
    std::size_t count = 0;
};

struct MetricReport {
    double ece = 0.0;
    double ada_ece = 0.0;
    double classwise_ece = 0.0;
    double mce = 0.0;
    double nll = 0.0;
    double error_rate = 0.0;
    std::optional<double> temperature;
};

inline constexpr std::size_t kDefaultBins = 15;

/// Max-softmax confidence and correctness of every row (argmax ties to the
/// smallest index).
inline std::vector<ScoredSample> confidence_scores(const LabeledBatch& batch) {
    std::vector<ScoredSample> out(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto probs = softmax(batch.row(i));
        const std::size_t top = argmax(batch.row(i));
        out[i] = {probs[top], top == batch.labels[i]};
    }
    return out;
}

inline BinReport bin_scores(std::vector<ScoredSample> samples, std::size_t num_bins, BinScheme scheme) {
    if (num_bins == 0) throw InvalidInput("binning: need M >= 1");
    if (samples.empty()) throw InvalidInput("binning: no samples");
    std::stable_sort(samples.begin(), samples.end(), [](const ScoredSample& a, const ScoredSample& b) {
        return a.score != b.score ? a.score < b.score : a.hit < b.hit;
    });

    const std::size_t n = samples.size();
    BinReport report{scheme, num_bins, n, std::vector<Bin>(num_bins)};

    std::vector<std::size_t> assignment(n);
    if (scheme == BinScheme::EqualWidth) {
        const double m = static_cast<double>(num_bins);
        for (std::size_t b = 0; b < num_bins; ++b) {
            report.bins[b].lo = static_cast<double>(b) / m;
            report.bins[b].hi = static_cast<double>(b + 1) / m;
        }
        for (std::size_t i = 0; i < n; ++i) {
            const double raw = std::floor(m * samples[i].score);
            assignment[i] = raw <= 0.0 ? 0 : std::min(static_cast<std::size_t>(raw), num_bins - 1);
        }
    } else {
        // the first (n mod M) bins carry one extra sample
        const std::size_t base = n / num_bins;
        const std::size_t extra = n % num_bins;
        std::size_t i = 0;
        for (std::size_t b = 0; b < num_bins; ++b) {
            const std::size_t size = base + (b < extra ? 1 : 0);
            for (std::size_t j = 0; j < size; ++j) assignment[i++] = b;
        }
    }

    std::vector<double> score_sum(num_bins, 0.0);
    std::vector<std::size_t> hits(num_bins, 0);
    for (std::size_t i = 0; i < n; ++i) {
        Bin& bin = report.bins[assignment[i]];
        if (scheme == BinScheme::EqualMass) {
            if (bin.count == 0) bin.lo = samples[i].score;
            bin.hi = samples[i].score;
        }
        ++bin.count;
        score_sum[assignment[i]] += samples[i].score;
        hits[assignment[i]] += samples[i].hit ? 1 : 0;
    }
    double last_hi = 0.0;
    for (std::size_t b = 0; b < num_bins; ++b) {
        Bin& bin = report.bins[b];
        if (bin.count > 0) {
            bin.accuracy = static_cast<double>(hits[b]) / static_cast<double>(bin.count);
            bin.confidence = score_sum[b] / static_cast<double>(bin.count);
            last_hi = bin.hi;
        } else if (scheme == BinScheme::EqualMass) {
            bin.lo = bin.hi = last_hi;
        }
    }
    return report;
}

inline BinReport bin_predictions(const LabeledBatch& batch, std::size_t num_bins, BinScheme scheme) {
    return bin_scores(confidence_scores(batch), num_bins, scheme);
}

/// Count-weighted mean |accuracy - confidence| over nonempty bins.
inline double weighted_gap(const BinReport& report) {
    double total = 0.0;
    for (const Bin& b : report.bins)
        if (b.count > 0)
            total += static_cast<double>(b.count) / static_cast<double>(report.total) *
                     std::abs(b.accuracy - b.confidence);
    return total;
}

inline double max_gap(const BinReport& report) {
    double worst = 0.0;
    for (const Bin& b : report.bins)
        if (b.count > 0) worst = std::max(worst, std::abs(b.accuracy - b.confidence));
    return worst;
}

inline double ece(const LabeledBatch& batch, std::size_t num_bins = kDefaultBins) {
    return weighted_gap(bin_predictions(batch, num_bins, BinScheme::EqualWidth));
}

inline double ada_ece(const LabeledBatch& batch, std::size_t num_bins = kDefaultBins) {
    return weighted_gap(bin_predictions(batch, num_bins, BinScheme::EqualMass));
}

inline double mce(const LabeledBatch& batch, std::size_t num_bins = kDefaultBins) {
    return max_gap(bin_predictions(batch, num_bins, BinScheme::EqualWidth));
}

/// Mean over classes of the equal-width ECE of each class probability, where
/// a sample counts as a hit for class j when its label is j.
inline double classwise_ece(const LabeledBatch& batch, std::size_t num_bins = kDefaultBins) {
    const std::size_t k = batch.num_classes;
    std::vector<std::vector<ScoredSample>> per_class(k, std::vector<ScoredSample>(batch.size()));
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto probs = softmax(batch.row(i));
        for (std::size_t j = 0; j < k; ++j) per_class[j][i] = {probs[j], batch.labels[i] == j};
    }
    double total = 0.0;
    for (auto& samples : per_class)
        total += weighted_gap(bin_scores(std::move(samples), num_bins, BinScheme::EqualWidth));
    return total / static_cast<double>(k);
}

inline double nll(const LabeledBatch& batch) {
    std::vector<double> terms(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i)
        terms[i] = -clamped_log(softmax(batch.row(i))[batch.labels[i]]);
    std::sort(terms.begin(), terms.end());
    double total = 0.0;
    for (double t : terms) total += t;
    return total / static_cast<double>(batch.size());
}

inline double error_rate(const LabeledBatch& batch) {
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < batch.size(); ++i)
        if (argmax(batch.row(i)) != batch.labels[i]) ++wrong;
    return static_cast<double>(wrong) / static_cast<double>(batch.size());
}

/// Mann-Whitney AUROC: P(in > out) + 0.5 P(in == out), computed from midranks.
inline double auroc(std::span<const double> in_scores, std::span<const double> out_scores) {
    if (in_scores.empty() || out_scores.empty()) throw InvalidInput("auroc: empty score vector");
    require_finite(in_scores, "auroc");
    require_finite(out_scores, "auroc");

    struct Tagged {
        double score;
        bool inlier;
    };
    std::vector<Tagged> all;
    all.reserve(in_scores.size() + out_scores.size());
    for (double s : in_scores) all.push_back({s, true});
    for (double s : out_scores) all.push_back({s, false});
    std::sort(all.begin(), all.end(), [](const Tagged& a, const Tagged& b) { return a.score < b.score; });

    double rank_sum = 0.0;
    for (std::size_t i = 0; i < all.size();) {
        std::size_t j = i;
        std::size_t inliers = 0;
        while (j < all.size() && all[j].score == all[i].score) inliers += all[j++].inlier ? 1 : 0;
        const double midrank = 0.5 * static_cast<double>(i + 1 + j);
        rank_sum += midrank * static_cast<double>(inliers);
        i = j;
    }
    const double n_in = static_cast<double>(in_scores.size());
    const double n_out = static_cast<double>(out_scores.size());
    return (rank_sum - n_in * (n_in + 1.0) / 2.0) / (n_in * n_out);
}

/// Nonempty equal-width bins flattened for plotting.
inline std::vector<ReliabilityRow> reliability_table(const LabeledBatch& batch,
                                                     std::size_t num_bins = kDefaultBins) {
    std::vector<ReliabilityRow> rows;
    for (const Bin& b : bin_predictions(batch, num_bins, BinScheme::EqualWidth).bins)
        if (b.count > 0) rows.push_back({b.lo, b.hi, b.accuracy, b.confidence, b.accuracy - b.confidence, b.count});
    return rows;
}

inline MetricReport compute_metrics(const LabeledBatch& batch, std::size_t num_bins = kDefaultBins) {
    batch.validate();
    MetricReport r;
    r.ece = ece(batch, num_bins);
    r.ada_ece = ada_ece(batch, num_bins);
    r.classwise_ece = classwise_ece(batch, num_bins);
    r.mce = mce(batch, num_bins);
    r.nll = nll(batch);
    r.error_rate = error_rate(batch);
    return r;
}

}  // namespace dualcal

#endif  // DUALCAL_METRICS_HPP
