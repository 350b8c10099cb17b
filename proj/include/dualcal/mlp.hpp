#ifndef DUALCAL_MLP_HPP
#define DUALCAL_MLP_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "dualcal/error.hpp"
#include "dualcal/loss.hpp"
#include "dualcal/random.hpp"

namespace dualcal {

/// Fully connected layer; weights are out x in, row-major.
struct DenseLayer {
    std::size_t in = 0;
    std::size_t out = 0;
    std::vector<double> weights;
    std::vector<double> bias;

    DenseLayer() = default;
    DenseLayer(std::size_t fan_in, std::size_t fan_out)
        : in(fan_in), out(fan_out), weights(fan_in * fan_out, 0.0), bias(fan_out, 0.0) {}

    double& w(std::size_t o, std::size_t i) { return weights[o * in + i]; }
    double w(std::size_t o, std::size_t i) const { return weights[o * in + i]; }

    friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

using LayerStack = std::vector<DenseLayer>;

/// Zero-filled stack with the same shapes as `like`.
inline LayerStack zeros_like(const LayerStack& like) {
    LayerStack out;
    out.reserve(like.size());
    for (const auto& l : like) out.emplace_back(l.in, l.out);
    return out;
}

/// Multilayer perceptron with ReLU hidden layers and a linear output layer.
class Mlp {
public:
    struct Cache {
        // activations[0] is the input, activations.back() the logits
        std::vector<std::vector<double>> activations;
    };

    Mlp() = default;

    /// widths = {input, hidden..., classes}; parameters drawn from
    /// U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
    Mlp(const std::vector<std::size_t>& widths, std::uint64_t seed) {
        if (widths.size() < 2) throw InvalidInput("mlp: need at least input and output widths");
        for (std::size_t w : widths)
            if (w == 0) throw InvalidInput("mlp: widths must be positive");
        Rng rng(seed);
        for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
            DenseLayer layer(widths[l], widths[l + 1]);
            const double bound = 1.0 / std::sqrt(static_cast<double>(widths[l]));
            for (double& v : layer.weights) v = rng.uniform(-bound, bound);
            for (double& v : layer.bias) v = rng.uniform(-bound, bound);
            layers_.push_back(std::move(layer));
        }
    }

    std::size_t input_width() const { return layers_.front().in; }
    std::size_t output_width() const { return layers_.back().out; }
    LayerStack& layers() { return layers_; }
    const LayerStack& layers() const { return layers_; }

    std::vector<double> forward(std::span<const double> x) const {
        Cache cache;
        return forward(x, cache);
    }

    std::vector<double> forward(std::span<const double> x, Cache& cache) const {
        if (x.size() != input_width()) throw InvalidInput("mlp: input width mismatch");
        cache.activations.resize(layers_.size() + 1);
        cache.activations[0].assign(x.begin(), x.end());
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            const DenseLayer& layer = layers_[l];
            const auto& a = cache.activations[l];
            auto& z = cache.activations[l + 1];
            z.assign(layer.bias.begin(), layer.bias.end());
            for (std::size_t o = 0; o < layer.out; ++o) {
                const double* row = layer.weights.data() + o * layer.in;
                double sum = 0.0;
                for (std::size_t i = 0; i < layer.in; ++i) sum += row[i] * a[i];
                z[o] += sum;
            }
            if (l + 1 < layers_.size())
                for (double& v : z) v = v > 0.0 ? v : 0.0;
        }
        return cache.activations.back();
    }

    /// Adds d loss / d parameters to `grads` given d loss / d logits.
    void backward(const Cache& cache, std::span<const double> grad_logits, LayerStack& grads) const {
        std::vector<double> delta(grad_logits.begin(), grad_logits.end());
        std::vector<double> prev;
        for (std::size_t l = layers_.size(); l-- > 0;) {
            const DenseLayer& layer = layers_[l];
            DenseLayer& g = grads[l];
            const auto& a = cache.activations[l];
            for (std::size_t o = 0; o < layer.out; ++o) {
                double* row = g.weights.data() + o * layer.in;
                for (std::size_t i = 0; i < layer.in; ++i) row[i] += delta[o] * a[i];
                g.bias[o] += delta[o];
            }
            if (l == 0) break;
            prev.assign(layer.in, 0.0);
            for (std::size_t o = 0; o < layer.out; ++o) {
                const double* row = layer.weights.data() + o * layer.in;
                for (std::size_t i = 0; i < layer.in; ++i) prev[i] += row[i] * delta[o];
            }
            for (std::size_t i = 0; i < layer.in; ++i)
                if (!(a[i] > 0.0)) prev[i] = 0.0;
            delta.swap(prev);
        }
    }

    friend bool operator==(const Mlp&, const Mlp&) = default;

private:
    LayerStack layers_;
};

/// Forward + backward for one labeled sample; returns the sample loss.
inline GradResult accumulate_sample(const Mlp& model, std::span<const double> x, std::size_t label,
                                    const LossSpec& spec, LayerStack& grads) {
    Mlp::Cache cache;
    const auto logits = model.forward(x, cache);
    auto result = loss_grad(spec, logits, label);
    model.backward(cache, result.grad_logits, grads);
    return result;
}

/// SGD with heavy-ball momentum and L2 weight decay folded into the gradient
/// (weights only; biases are not decayed).
class SgdMomentum {
public:
    SgdMomentum(double momentum, double weight_decay) : momentum_(momentum), weight_decay_(weight_decay) {}

    void step(Mlp& model, const LayerStack& grads, double lr) {
        auto& layers = model.layers();
        if (velocity_.empty()) velocity_ = zeros_like(layers);
        for (std::size_t l = 0; l < layers.size(); ++l) {
            DenseLayer& p = layers[l];
            DenseLayer& v = velocity_[l];
            const DenseLayer& g = grads[l];
            for (std::size_t i = 0; i < p.weights.size(); ++i) {
                v.weights[i] = momentum_ * v.weights[i] + g.weights[i] + weight_decay_ * p.weights[i];
                p.weights[i] -= lr * v.weights[i];
            }
            for (std::size_t i = 0; i < p.bias.size(); ++i) {
                v.bias[i] = momentum_ * v.bias[i] + g.bias[i];
                p.bias[i] -= lr * v.bias[i];
            }
        }
    }

private:
    double momentum_;
    double weight_decay_;
    LayerStack velocity_;
};

}  // namespace dualcal

#endif  // DUALCAL_MLP_HPP
