#ifndef DUALCAL_BATCH_HPP
#define DUALCAL_BATCH_HPP

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "dualcal/error.hpp"
#include "dualcal/softmax.hpp"

namespace dualcal {

/// N x K logits (row-major) with one integer label per row.
struct LabeledBatch {
    std::size_t num_classes = 0;
    std::vector<double> logits;
    std::vector<std::size_t> labels;

    LabeledBatch() = default;
    LabeledBatch(std::size_t k, std::vector<double> flat_logits, std::vector<std::size_t> row_labels)
        : num_classes(k), logits(std::move(flat_logits)), labels(std::move(row_labels)) {
        validate();
    }

    static LabeledBatch from_rows(const std::vector<std::vector<double>>& rows,
                                  std::vector<std::size_t> row_labels) {
        if (rows.empty()) throw InvalidInput("batch: no rows");
        std::vector<double> flat;
        for (const auto& r : rows) {
            if (r.size() != rows.front().size()) throw InvalidInput("batch: ragged rows");
            flat.insert(flat.end(), r.begin(), r.end());
        }
        return {rows.front().size(), std::move(flat), std::move(row_labels)};
    }

    std::size_t size() const noexcept { return labels.size(); }

    std::span<const double> row(std::size_t i) const {
        return {logits.data() + i * num_classes, num_classes};
    }
    std::span<double> row(std::size_t i) { return {logits.data() + i * num_classes, num_classes}; }

    void validate() const {
        if (num_classes < 2) throw InvalidInput("batch: need K >= 2");
        if (labels.empty()) throw InvalidInput("batch: need N >= 1");
        if (logits.size() != labels.size() * num_classes)
            throw InvalidInput("batch: logits size does not match N x K");
        require_finite(logits, "batch");
        for (std::size_t y : labels)
            if (y >= num_classes) throw InvalidInput("batch: label " + std::to_string(y) + " out of range");
    }

    friend bool operator==(const LabeledBatch&, const LabeledBatch&) = default;
};

}  // namespace dualcal

#endif  // DUALCAL_BATCH_HPP
