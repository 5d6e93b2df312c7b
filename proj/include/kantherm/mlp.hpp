// Fully-connected baseline: affine layers with ReLU hidden activations and a
// linear output. The DenseStack is reused as the readout head of the
// recurrent baselines.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "kantherm/activations.hpp"
#include "kantherm/errors.hpp"
#include "kantherm/normalization.hpp"
#include "kantherm/rng.hpp"

namespace kantherm {

/// Affine-ReLU stack; the last layer is linear.
struct DenseStack {
    std::vector<int> widths;
    std::vector<std::vector<double>> weights; // per layer, out x in row-major
    std::vector<std::vector<double>> biases;  // per layer, out

    DenseStack() = default;

    DenseStack(std::vector<int> w, Rng& rng) : widths(std::move(w)) {
        if (widths.size() < 2) throw config_error("dense stack needs >= 2 widths");
        for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
            const auto in = static_cast<std::size_t>(widths[l]);
            const auto out = static_cast<std::size_t>(widths[l + 1]);
            auto& wm = weights.emplace_back(out * in);
            for (double& v : wm) v = rng.gaussian(0.0, 0.1);
            biases.emplace_back(out, 0.0);
        }
    }

    [[nodiscard]] std::size_t layer_count() const { return weights.size(); }

    [[nodiscard]] std::size_t param_count() const {
        std::size_t n = 0;
        for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
        return n;
    }

    static constexpr int kMaxWidth = 64;

    /// Allocation-free single-row forward (output width must be 1).
    [[nodiscard]] double value(const double* x) const {
        double buf_a[kMaxWidth];
        double buf_b[kMaxWidth];
        const double* cur = x;
        double* next = buf_a;
        for (std::size_t l = 0; l < weights.size(); ++l) {
            const int in = widths[l];
            const int out = widths[l + 1];
            const bool last = (l + 1 == weights.size());
            const double* wm = weights[l].data();
            for (int o = 0; o < out; ++o) {
                double acc = biases[l][static_cast<std::size_t>(o)];
                const double* row = wm + static_cast<std::size_t>(o) * static_cast<std::size_t>(in);
                for (int i = 0; i < in; ++i) acc += row[i] * cur[i];
                next[o] = last ? acc : relu(acc);
            }
            cur = next;
            next = (next == buf_a) ? buf_b : buf_a;
        }
        return cur[0];
    }

    /// Forward keeping every activation; act[0] is the input copy, act[l+1]
    /// the output of layer l (post-ReLU except the last).
    void forward(const double* x, std::vector<std::vector<double>>& act) const {
        act.assign(widths.size(), {});
        act[0].assign(x, x + widths[0]);
        for (std::size_t l = 0; l < weights.size(); ++l) {
            const int in = widths[l];
            const int out = widths[l + 1];
            const bool last = (l + 1 == weights.size());
            act[l + 1].resize(static_cast<std::size_t>(out));
            for (int o = 0; o < out; ++o) {
                double acc = biases[l][static_cast<std::size_t>(o)];
                const double* row = weights[l].data() +
                                    static_cast<std::size_t>(o) * static_cast<std::size_t>(in);
                for (int i = 0; i < in; ++i) acc += row[i] * act[l][static_cast<std::size_t>(i)];
                act[l + 1][static_cast<std::size_t>(o)] = last ? acc : relu(acc);
            }
        }
    }

    /// Backprop from d_out (sensitivity of the stack output vector);
    /// accumulates into grad_w/grad_b (same shapes as weights/biases) and
    /// returns the sensitivity of the stack input.
    std::vector<double> backward(const std::vector<std::vector<double>>& act,
                                 std::vector<double> d_out,
                                 std::vector<std::vector<double>>& grad_w,
                                 std::vector<std::vector<double>>& grad_b) const {
        for (std::size_t li = weights.size(); li-- > 0;) {
            const int in = widths[li];
            const int out = widths[li + 1];
            const bool last = (li + 1 == weights.size());
            std::vector<double> d_in(static_cast<std::size_t>(in), 0.0);
            for (int o = 0; o < out; ++o) {
                double g = d_out[static_cast<std::size_t>(o)];
                if (!last && act[li + 1][static_cast<std::size_t>(o)] <= 0.0) g = 0.0;
                if (g == 0.0) continue;
                grad_b[li][static_cast<std::size_t>(o)] += g;
                const std::size_t base = static_cast<std::size_t>(o) * static_cast<std::size_t>(in);
                for (int i = 0; i < in; ++i) {
                    grad_w[li][base + static_cast<std::size_t>(i)] +=
                        g * act[li][static_cast<std::size_t>(i)];
                    d_in[static_cast<std::size_t>(i)] +=
                        g * weights[li][base + static_cast<std::size_t>(i)];
                }
            }
            d_out = std::move(d_in);
        }
        return d_out;
    }

    void append_params(std::vector<double>& out) const {
        for (std::size_t l = 0; l < weights.size(); ++l) {
            out.insert(out.end(), weights[l].begin(), weights[l].end());
            out.insert(out.end(), biases[l].begin(), biases[l].end());
        }
    }

    std::size_t read_params(const std::vector<double>& in, std::size_t pos) {
        for (std::size_t l = 0; l < weights.size(); ++l) {
            std::copy_n(in.begin() + static_cast<std::ptrdiff_t>(pos), weights[l].size(),
                        weights[l].begin());
            pos += weights[l].size();
            std::copy_n(in.begin() + static_cast<std::ptrdiff_t>(pos), biases[l].size(),
                        biases[l].begin());
            pos += biases[l].size();
        }
        return pos;
    }
};

class MlpNetwork {
public:
    MlpNetwork(std::vector<int> widths, std::uint64_t seed) {
        Rng rng(seed);
        stack_ = DenseStack(std::move(widths), rng);
    }

    /// The comparison baseline: widths 4-10-10-1.
    static MlpNetwork baseline(std::uint64_t seed) { return MlpNetwork({4, 10, 10, 1}, seed); }

    [[nodiscard]] const std::vector<int>& widths() const { return stack_.widths; }
    [[nodiscard]] int input_width() const { return stack_.widths.front(); }
    [[nodiscard]] std::size_t param_count() const { return stack_.param_count(); }
    [[nodiscard]] DenseStack& stack() { return stack_; }
    [[nodiscard]] const DenseStack& stack() const { return stack_; }
    [[nodiscard]] NormalizationStats& stats() { return stats_; }
    [[nodiscard]] const NormalizationStats& stats() const { return stats_; }

    [[nodiscard]] double predict_normalized(const double* x) const { return stack_.value(x); }

    void get_params(std::vector<double>& out) const {
        out.clear();
        out.reserve(param_count());
        stack_.append_params(out);
    }

    void set_params(const std::vector<double>& in) {
        if (in.size() != param_count())
            throw shape_error("mlp set_params: expected " + std::to_string(param_count()) +
                              " values, got " + std::to_string(in.size()));
        stack_.read_params(in, 0);
    }

private:
    DenseStack stack_;
    NormalizationStats stats_;
};

/// Batch MSE and its gradient in get_params() order. Features are row-major
/// count x input_width; targets length count (output width must be 1).
inline double mlp_loss_and_grad(const MlpNetwork& net, const std::vector<double>& features,
                                const std::vector<double>& targets, std::size_t count,
                                std::vector<double>& grad) {
    const auto in_w = static_cast<std::size_t>(net.input_width());
    if (features.size() != count * in_w) throw shape_error("mlp loss: features size mismatch");
    if (targets.size() != count) throw shape_error("mlp loss: targets size mismatch");
    const DenseStack& stack = net.stack();

    std::vector<std::vector<double>> grad_w, grad_b;
    for (std::size_t l = 0; l < stack.layer_count(); ++l) {
        grad_w.emplace_back(stack.weights[l].size(), 0.0);
        grad_b.emplace_back(stack.biases[l].size(), 0.0);
    }

    double mse = 0.0;
    std::vector<std::vector<double>> act;
    for (std::size_t n = 0; n < count; ++n) {
        stack.forward(features.data() + n * in_w, act);
        const double pred = act.back()[0];
        const double err = pred - targets[n];
        mse += err * err;
        stack.backward(act, {2.0 * err / static_cast<double>(count)}, grad_w, grad_b);
    }
    mse /= static_cast<double>(count);

    grad.clear();
    grad.reserve(net.param_count());
    for (std::size_t l = 0; l < stack.layer_count(); ++l) {
        grad.insert(grad.end(), grad_w[l].begin(), grad_w[l].end());
        grad.insert(grad.end(), grad_b[l].begin(), grad_b[l].end());
    }
    return mse;
}

} // namespace kantherm
