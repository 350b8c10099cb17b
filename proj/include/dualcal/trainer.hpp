#ifndef DUALCAL_TRAINER_HPP
#define DUALCAL_TRAINER_HPP

// Deterministic minibatch training of an Mlp with per-epoch calibration tracking.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "dualcal/batch.hpp"
#include "dualcal/dataset.hpp"
#include "dualcal/error.hpp"
#include "dualcal/loss.hpp"
#include "dualcal/metrics.hpp"
#include "dualcal/mlp.hpp"
#include "dualcal/random.hpp"
#include "dualcal/softmax.hpp"
#include "dualcal/statistics.hpp"

namespace dualcal {

/// Learning rate `lr` applies to every epoch index below `until_epoch`.
struct LrStep {
    std::size_t until_epoch = 0;
    double lr = 0.0;
};

/// 0.1 / 0.01 / 0.001 over 3/7, 2/7 and 2/7 of the run.
inline std::vector<LrStep> default_schedule(std::size_t epochs) {
    const auto at = [&](double fraction) {
        return static_cast<std::size_t>(std::lround(fraction * static_cast<double>(epochs)));
    };
    const std::size_t first = std::max<std::size_t>(at(3.0 / 7.0), 1);
    const std::size_t second = std::max(at(5.0 / 7.0), first + 1);
    const std::size_t third = std::max(epochs, second + 1);
    return {{first, 0.1}, {second, 0.01}, {third, 0.001}};
}

struct TrainConfig {
    std::size_t epochs = 30;
    std::size_t batch_size = 128;
    double momentum = 0.9;
    double weight_decay = 5e-4;
    std::vector<LrStep> schedule;  // empty means default_schedule(epochs)
    std::uint64_t seed = 1;
    LossSpec loss{};
    std::vector<std::size_t> hidden{64, 64};

    std::vector<LrStep> effective_schedule() const {
        return schedule.empty() ? default_schedule(epochs) : schedule;
    }

    void validate() const {
        if (epochs == 0) throw InvalidInput("train: epochs must be positive");
        if (batch_size == 0) throw InvalidInput("train: batch size must be positive");
        if (!(weight_decay >= 0.0)) throw InvalidInput("train: weight decay must be >= 0");
        loss.validate();
        const auto steps = effective_schedule();
        for (std::size_t i = 0; i < steps.size(); ++i) {
            if (!(steps[i].lr > 0.0)) throw InvalidInput("train: learning rates must be positive");
            if (i > 0 && !(steps[i].until_epoch > steps[i - 1].until_epoch))
                throw InvalidInput("train: schedule thresholds must increase");
            if (i > 0 && !(steps[i].lr < steps[i - 1].lr))
                throw InvalidInput("train: schedule learning rates must decrease");
        }
    }
};

inline double learning_rate_at(const std::vector<LrStep>& schedule, std::size_t epoch) {
    for (const auto& step : schedule)
        if (epoch < step.until_epoch) return step.lr;
    return schedule.back().lr;
}

struct EpochRecord {
    std::size_t epoch = 0;
    double lr = 0.0;
    double train_loss = 0.0;
    double test_ece = 0.0;
    double test_error = 0.0;
};

struct TrainTrace {
    std::vector<EpochRecord> epochs;
    LabeledBatch test;
    LabeledBatch validation;
};

inline LabeledBatch predict(const Mlp& model, const FeatureSet& data) {
    std::vector<double> logits;
    logits.reserve(data.size() * model.output_width());
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto z = model.forward(data.row(i));
        logits.insert(logits.end(), z.begin(), z.end());
    }
    return {model.output_width(), std::move(logits), data.labels};
}

inline std::vector<std::size_t> model_widths(std::size_t input, const TrainConfig& config, std::size_t classes) {
    std::vector<std::size_t> widths{input};
    widths.insert(widths.end(), config.hidden.begin(), config.hidden.end());
    widths.push_back(classes);
    return widths;
}

/// Trains `model` in place. Shuffling and initialization derive only from
/// config.seed, so identical inputs give identical traces.
inline TrainTrace train(Mlp& model, const TrainConfig& config, const DatasetSplits& data) {
    config.validate();
    if (model.input_width() != data.train.dimension) throw InvalidInput("train: model input width mismatch");
    const std::size_t classes = model.output_width();
    for (std::size_t y : data.train.labels)
        if (y >= classes) throw InvalidInput("train: label exceeds model output width");

    const auto schedule = config.effective_schedule();
    SgdMomentum optimizer(config.momentum, config.weight_decay);
    Rng shuffle_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
    std::vector<std::size_t> order(data.train.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    TrainTrace trace;
    LayerStack grads = zeros_like(model.layers());
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        const double lr = learning_rate_at(schedule, epoch);
        shuffle_rng.shuffle(order);
        double loss_sum = 0.0;
        std::size_t batch_index = 0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++batch_index) {
            const std::size_t stop = std::min(start + config.batch_size, order.size());
            for (auto& g : grads) {
                std::fill(g.weights.begin(), g.weights.end(), 0.0);
                std::fill(g.bias.begin(), g.bias.end(), 0.0);
            }
            double batch_loss = 0.0;
            for (std::size_t s = start; s < stop; ++s) {
                const std::size_t idx = order[s];
                Mlp::Cache cache;
                const auto logits = model.forward(data.train.row(idx), cache);
                if (!std::all_of(logits.begin(), logits.end(), [](double z) { return std::isfinite(z); })) {
                    batch_loss = std::numeric_limits<double>::quiet_NaN();
                    break;
                }
                const auto result = loss_grad(config.loss, logits, data.train.labels[idx]);
                model.backward(cache, result.grad_logits, grads);
                batch_loss += result.loss;
            }
            if (!std::isfinite(batch_loss))
                throw NumericalError("train: non-finite loss at epoch " + std::to_string(epoch + 1) + ", batch " +
                                     std::to_string(batch_index + 1));
            const double scale = 1.0 / static_cast<double>(stop - start);
            for (auto& g : grads) {
                for (double& v : g.weights) v *= scale;
                for (double& v : g.bias) v *= scale;
            }
            optimizer.step(model, grads, lr);
            loss_sum += batch_loss;
        }

        LabeledBatch test;
        try {
            test = predict(model, data.test);
        } catch (const InvalidInput&) {
            throw NumericalError("train: non-finite test logits after epoch " + std::to_string(epoch + 1));
        }
        trace.epochs.push_back({epoch + 1, lr, loss_sum / static_cast<double>(order.size()), ece(test),
                                error_rate(test)});
    }
    trace.test = predict(model, data.test);
    trace.validation = predict(model, data.validation);
    return trace;
}

/// Builds the model from config.seed and trains it.
inline TrainTrace train(const TrainConfig& config, const DatasetSplits& data, std::size_t classes) {
    Mlp model(model_widths(data.train.dimension, config, classes), config.seed);
    return train(model, config, data);
}

struct EceCurveRow {
    std::size_t epoch = 0;
    double raw = 0.0;
    double smoothed = 0.0;
};

/// Test ECE per epoch, optionally smoothed by s_t = f s_{t-1} + (1 - f) x_t, s_1 = x_1.
inline std::vector<EceCurveRow> evaluate_over_training(const TrainTrace& trace, bool smooth = true,
                                                       double factor = 0.5) {
    std::vector<EceCurveRow> rows;
    rows.reserve(trace.epochs.size());
    for (const auto& r : trace.epochs) {
        const double s = (!smooth || rows.empty()) ? r.test_ece : factor * rows.back().smoothed + (1.0 - factor) * r.test_ece;
        rows.push_back({r.epoch, r.test_ece, s});
    }
    return rows;
}

struct LogitStatistics {
    std::vector<double> max_logits;
    Histogram max_logit_histogram;
    std::vector<double> dual_values;
    FiveNumberSummary dual_summary;
};

/// Per-sample maximum raw logit and dual probability q_j (taken at the label).
inline LogitStatistics logit_statistics(const LabeledBatch& batch, std::size_t histogram_bins = 20) {
    batch.validate();
    LogitStatistics s;
    s.max_logits.reserve(batch.size());
    s.dual_values.reserve(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto row = batch.row(i);
        s.max_logits.push_back(*std::max_element(row.begin(), row.end()));
        s.dual_values.push_back(select_dual_logit(softmax(row), batch.labels[i]).value);
    }
    s.max_logit_histogram = histogram(s.max_logits, histogram_bins);
    s.dual_summary = five_number_summary(s.dual_values);
    return s;
}

}  // namespace dualcal

#endif  // DUALCAL_TRAINER_HPP
