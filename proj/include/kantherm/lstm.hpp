// LSTM baseline: a single LSTM layer (sigmoid input/forget/output gates,
// tanh candidate, one bias vector per gate) unrolled over a lookback window,
// with a dense ReLU head on the final hidden state.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "kantherm/activations.hpp"
#include "kantherm/errors.hpp"
#include "kantherm/mlp.hpp"
#include "kantherm/normalization.hpp"
#include "kantherm/rng.hpp"
#include "kantherm/window.hpp"

namespace kantherm {

class LstmNetwork {
public:
    /// widths = {input, lstm units, dense hiddens..., output}.
    LstmNetwork(std::vector<int> widths, std::size_t lookback, std::uint64_t seed)
        : widths_(std::move(widths)), lookback_(lookback) {
        if (widths_.size() < 3) throw config_error("lstm needs {input, units, ..., output} widths");
        if (lookback_ < 1) throw config_error("lstm lookback must be >= 1");
        Rng rng(seed);
        const auto in = static_cast<std::size_t>(widths_[0]);
        const auto units = static_cast<std::size_t>(widths_[1]);
        for (int gate = 0; gate < 4; ++gate) {
            w_[gate].resize(units * in);
            for (double& v : w_[gate]) v = rng.gaussian(0.0, 0.1);
            u_[gate].resize(units * units);
            for (double& v : u_[gate]) v = rng.gaussian(0.0, 0.1);
            b_[gate].assign(units, 0.0);
        }
        head_ = DenseStack(std::vector<int>(widths_.begin() + 1, widths_.end()), rng);
    }

    /// The comparison baseline: 4 LSTM units, head 4-8-2-1, lookback 50.
    static LstmNetwork baseline(std::uint64_t seed) {
        return LstmNetwork({4, 4, 8, 2, 1}, 50, seed);
    }

    // Gate order in parameter packing: input, forget, candidate, output.
    enum Gate { kInput = 0, kForget = 1, kCandidate = 2, kOutput = 3 };

    [[nodiscard]] const std::vector<int>& widths() const { return widths_; }
    [[nodiscard]] int input_width() const { return widths_[0]; }
    [[nodiscard]] int units() const { return widths_[1]; }
    [[nodiscard]] std::size_t lookback() const { return lookback_; }
    [[nodiscard]] NormalizationStats& stats() { return stats_; }
    [[nodiscard]] const NormalizationStats& stats() const { return stats_; }

    [[nodiscard]] std::size_t param_count() const {
        std::size_t n = 0;
        for (int gate = 0; gate < 4; ++gate) n += w_[gate].size() + u_[gate].size() + b_[gate].size();
        return n + head_.param_count();
    }

    void get_params(std::vector<double>& out) const {
        out.clear();
        out.reserve(param_count());
        for (int gate = 0; gate < 4; ++gate) {
            out.insert(out.end(), w_[gate].begin(), w_[gate].end());
            out.insert(out.end(), u_[gate].begin(), u_[gate].end());
            out.insert(out.end(), b_[gate].begin(), b_[gate].end());
        }
        head_.append_params(out);
    }

    void set_params(const std::vector<double>& in) {
        if (in.size() != param_count())
            throw shape_error("lstm set_params: expected " + std::to_string(param_count()) +
                              " values, got " + std::to_string(in.size()));
        std::size_t pos = 0;
        for (int gate = 0; gate < 4; ++gate) {
            std::copy_n(in.begin() + static_cast<std::ptrdiff_t>(pos), w_[gate].size(), w_[gate].begin());
            pos += w_[gate].size();
            std::copy_n(in.begin() + static_cast<std::ptrdiff_t>(pos), u_[gate].size(), u_[gate].begin());
            pos += u_[gate].size();
            std::copy_n(in.begin() + static_cast<std::ptrdiff_t>(pos), b_[gate].size(), b_[gate].begin());
            pos += b_[gate].size();
        }
        head_.read_params(in, pos);
    }

    [[nodiscard]] double predict_window(const double* rows) const {
        const int in = widths_[0];
        const int units = widths_[1];
        double h[DenseStack::kMaxWidth] = {0.0};
        double c[DenseStack::kMaxWidth] = {0.0};
        for (std::size_t t = 0; t < lookback_; ++t) {
            const double* x = rows + t * static_cast<std::size_t>(in);
            for (int uu = 0; uu < units; ++uu) {
                double pre[4];
                for (int gate = 0; gate < 4; ++gate) {
                    double acc = b_[gate][static_cast<std::size_t>(uu)];
                    const double* wg = w_[gate].data() +
                                       static_cast<std::size_t>(uu) * static_cast<std::size_t>(in);
                    for (int i = 0; i < in; ++i) acc += wg[i] * x[i];
                    const double* ug = u_[gate].data() +
                                       static_cast<std::size_t>(uu) * static_cast<std::size_t>(units);
                    for (int j = 0; j < units; ++j) acc += ug[j] * h[j];
                    pre[gate] = acc;
                }
                const double ig = sigmoid(pre[kInput]);
                const double fg = sigmoid(pre[kForget]);
                const double gg = std::tanh(pre[kCandidate]);
                const double og = sigmoid(pre[kOutput]);
                c[uu] = fg * c[uu] + ig * gg;
                h[uu] = og * std::tanh(c[uu]);
            }
        }
        return head_.value(h);
    }

    struct Gradients {
        std::vector<double> w[4], u[4], b[4];
        std::vector<std::vector<double>> head_w, head_b;
    };

    [[nodiscard]] Gradients zero_gradients() const {
        Gradients g;
        for (int gate = 0; gate < 4; ++gate) {
            g.w[gate].assign(w_[gate].size(), 0.0);
            g.u[gate].assign(u_[gate].size(), 0.0);
            g.b[gate].assign(b_[gate].size(), 0.0);
        }
        for (std::size_t l = 0; l < head_.layer_count(); ++l) {
            g.head_w.emplace_back(head_.weights[l].size(), 0.0);
            g.head_b.emplace_back(head_.biases[l].size(), 0.0);
        }
        return g;
    }

    /// One window's squared error; gradients accumulate with weight `scale`.
    double accumulate_window(const double* rows, double target, double scale, Gradients& g) const {
        const int in = widths_[0];
        const int units = widths_[1];
        const auto un = static_cast<std::size_t>(units);
        const std::size_t T = lookback_;

        // Forward pass, keeping gate values and states per step.
        std::vector<double> ig(T * un), fg(T * un), gg(T * un), og(T * un);
        std::vector<double> cs((T + 1) * un, 0.0), hsv((T + 1) * un, 0.0), tanh_c(T * un);
        for (std::size_t t = 0; t < T; ++t) {
            const double* x = rows + t * static_cast<std::size_t>(in);
            const double* h_prev = hsv.data() + t * un;
            const double* c_prev = cs.data() + t * un;
            for (int uu = 0; uu < units; ++uu) {
                double pre[4];
                for (int gate = 0; gate < 4; ++gate) {
                    double acc = b_[gate][static_cast<std::size_t>(uu)];
                    const double* wg = w_[gate].data() + static_cast<std::size_t>(uu) * static_cast<std::size_t>(in);
                    for (int i = 0; i < in; ++i) acc += wg[i] * x[i];
                    const double* ug = u_[gate].data() + static_cast<std::size_t>(uu) * un;
                    for (int j = 0; j < units; ++j) acc += ug[j] * h_prev[j];
                    pre[gate] = acc;
                }
                const std::size_t idx = t * un + static_cast<std::size_t>(uu);
                ig[idx] = sigmoid(pre[kInput]);
                fg[idx] = sigmoid(pre[kForget]);
                gg[idx] = std::tanh(pre[kCandidate]);
                og[idx] = sigmoid(pre[kOutput]);
                cs[(t + 1) * un + static_cast<std::size_t>(uu)] =
                    fg[idx] * c_prev[uu] + ig[idx] * gg[idx];
                tanh_c[idx] = std::tanh(cs[(t + 1) * un + static_cast<std::size_t>(uu)]);
                hsv[(t + 1) * un + static_cast<std::size_t>(uu)] = og[idx] * tanh_c[idx];
            }
        }

        std::vector<std::vector<double>> act;
        head_.forward(hsv.data() + T * un, act);
        const double pred = act.back()[0];
        const double err = pred - target;

        std::vector<double> dh = head_.backward(act, {2.0 * err * scale}, g.head_w, g.head_b);
        std::vector<double> dc(un, 0.0);
        for (std::size_t t = T; t-- > 0;) {
            const double* x = rows + t * static_cast<std::size_t>(in);
            const double* h_prev = hsv.data() + t * un;
            const double* c_prev = cs.data() + t * un;
            std::vector<double> dh_prev(un, 0.0), dc_prev(un, 0.0);
            for (int uu = 0; uu < units; ++uu) {
                const std::size_t idx = t * un + static_cast<std::size_t>(uu);
                const double dhu = dh[static_cast<std::size_t>(uu)];
                // h = o * tanh(c)
                const double dog = dhu * tanh_c[idx];
                double dcu = dc[static_cast<std::size_t>(uu)] +
                             dhu * og[idx] * (1.0 - tanh_c[idx] * tanh_c[idx]);
                // c = f*c_prev + i*g
                const double dig = dcu * gg[idx];
                const double dfg = dcu * c_prev[uu];
                const double dgg = dcu * ig[idx];
                dc_prev[static_cast<std::size_t>(uu)] = dcu * fg[idx];
                // Pre-activation sensitivities.
                double dpre[4];
                dpre[kInput] = dig * ig[idx] * (1.0 - ig[idx]);
                dpre[kForget] = dfg * fg[idx] * (1.0 - fg[idx]);
                dpre[kCandidate] = dgg * (1.0 - gg[idx] * gg[idx]);
                dpre[kOutput] = dog * og[idx] * (1.0 - og[idx]);
                for (int gate = 0; gate < 4; ++gate) {
                    const double dz = dpre[gate];
                    if (dz == 0.0) continue;
                    g.b[gate][static_cast<std::size_t>(uu)] += dz;
                    const std::size_t bw = static_cast<std::size_t>(uu) * static_cast<std::size_t>(in);
                    for (int i = 0; i < in; ++i)
                        g.w[gate][bw + static_cast<std::size_t>(i)] += dz * x[i];
                    const std::size_t bu = static_cast<std::size_t>(uu) * un;
                    for (int j = 0; j < units; ++j) {
                        g.u[gate][bu + static_cast<std::size_t>(j)] += dz * h_prev[j];
                        dh_prev[static_cast<std::size_t>(j)] += dz * u_[gate][bu + static_cast<std::size_t>(j)];
                    }
                }
            }
            dh = std::move(dh_prev);
            dc = std::move(dc_prev);
        }
        return err * err;
    }

    void flatten_gradients(const Gradients& g, std::vector<double>& out) const {
        out.clear();
        out.reserve(param_count());
        for (int gate = 0; gate < 4; ++gate) {
            out.insert(out.end(), g.w[gate].begin(), g.w[gate].end());
            out.insert(out.end(), g.u[gate].begin(), g.u[gate].end());
            out.insert(out.end(), g.b[gate].begin(), g.b[gate].end());
        }
        for (std::size_t l = 0; l < g.head_w.size(); ++l) {
            out.insert(out.end(), g.head_w[l].begin(), g.head_w[l].end());
            out.insert(out.end(), g.head_b[l].begin(), g.head_b[l].end());
        }
    }

private:
    std::vector<int> widths_;
    std::size_t lookback_;
    std::vector<double> w_[4], u_[4], b_[4];
    DenseStack head_;
    NormalizationStats stats_;
};

inline double lstm_loss_and_grad(const LstmNetwork& net, const WindowSet& ws,
                                 const std::vector<std::size_t>& batch,
                                 std::vector<double>& grad) {
    if (batch.empty()) throw std::invalid_argument("lstm loss: empty batch");
    if (ws.lookback != net.lookback()) throw shape_error("lstm loss: lookback mismatch");
    LstmNetwork::Gradients g = net.zero_gradients();
    const double scale = 1.0 / static_cast<double>(batch.size());
    double mse = 0.0;
    for (std::size_t w : batch)
        mse += net.accumulate_window(ws.window_features(w), ws.window_target(w), scale, g);
    mse *= scale;
    net.flatten_gradients(g, grad);
    return mse;
}

} // namespace kantherm
