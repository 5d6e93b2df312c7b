// Elman recurrent baseline: a tanh recurrent layer driven over a lookback
// window, followed by a dense ReLU head on the final hidden state. Trained by
// backpropagation through time over the whole window.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "kantherm/errors.hpp"
#include "kantherm/mlp.hpp"
#include "kantherm/normalization.hpp"
#include "kantherm/rng.hpp"
#include "kantherm/window.hpp"

namespace kantherm {

namespace detail {

/// Orthogonalize a seeded Gaussian square matrix by modified Gram-Schmidt.
inline std::vector<double> orthogonal_matrix(int n, Rng& rng) {
    std::vector<double> m(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
    for (double& v : m) v = rng.gaussian(0.0, 1.0);
    for (int c = 0; c < n; ++c) {
        for (int prev = 0; prev < c; ++prev) {
            double dot = 0.0;
            for (int r = 0; r < n; ++r)
                dot += m[static_cast<std::size_t>(r * n + c)] * m[static_cast<std::size_t>(r * n + prev)];
            for (int r = 0; r < n; ++r)
                m[static_cast<std::size_t>(r * n + c)] -= dot * m[static_cast<std::size_t>(r * n + prev)];
        }
        double norm = 0.0;
        for (int r = 0; r < n; ++r) {
            const double v = m[static_cast<std::size_t>(r * n + c)];
            norm += v * v;
        }
        norm = std::sqrt(norm);
        if (norm < 1e-12) {
            // Degenerate column (astronomically unlikely): fall back to a unit vector.
            for (int r = 0; r < n; ++r) m[static_cast<std::size_t>(r * n + c)] = (r == c) ? 1.0 : 0.0;
        } else {
            for (int r = 0; r < n; ++r) m[static_cast<std::size_t>(r * n + c)] /= norm;
        }
    }
    return m;
}

} // namespace detail

class RnnNetwork {
public:
    /// widths = {input, recurrent units, dense hiddens..., output}.
    RnnNetwork(std::vector<int> widths, std::size_t lookback, std::uint64_t seed)
        : widths_(std::move(widths)), lookback_(lookback) {
        if (widths_.size() < 3) throw config_error("rnn needs {input, hidden, ..., output} widths");
        if (lookback_ < 1) throw config_error("rnn lookback must be >= 1");
        Rng rng(seed);
        const int in = widths_[0];
        const int hid = widths_[1];
        w_ih_.resize(static_cast<std::size_t>(hid) * static_cast<std::size_t>(in));
        for (double& v : w_ih_) v = rng.gaussian(0.0, 0.1);
        w_hh_ = detail::orthogonal_matrix(hid, rng);
        b_h_.assign(static_cast<std::size_t>(hid), 0.0);
        head_ = DenseStack(std::vector<int>(widths_.begin() + 1, widths_.end()), rng);
    }

    /// The comparison baseline: 15 recurrent units, head 15-25-5-1, lookback 20.
    static RnnNetwork baseline(std::uint64_t seed) {
        return RnnNetwork({4, 15, 25, 5, 1}, 20, seed);
    }

    [[nodiscard]] const std::vector<int>& widths() const { return widths_; }
    [[nodiscard]] int input_width() const { return widths_[0]; }
    [[nodiscard]] int hidden_width() const { return widths_[1]; }
    [[nodiscard]] std::size_t lookback() const { return lookback_; }
    [[nodiscard]] NormalizationStats& stats() { return stats_; }
    [[nodiscard]] const NormalizationStats& stats() const { return stats_; }

    [[nodiscard]] std::size_t param_count() const {
        return w_ih_.size() + w_hh_.size() + b_h_.size() + head_.param_count();
    }

    void get_params(std::vector<double>& out) const {
        out.clear();
        out.reserve(param_count());
        out.insert(out.end(), w_ih_.begin(), w_ih_.end());
        out.insert(out.end(), w_hh_.begin(), w_hh_.end());
        out.insert(out.end(), b_h_.begin(), b_h_.end());
        head_.append_params(out);
    }

    void set_params(const std::vector<double>& in) {
        if (in.size() != param_count())
            throw shape_error("rnn set_params: expected " + std::to_string(param_count()) +
                              " values, got " + std::to_string(in.size()));
        std::size_t pos = 0;
        std::copy_n(in.begin(), w_ih_.size(), w_ih_.begin());
        pos += w_ih_.size();
        std::copy_n(in.begin() + static_cast<std::ptrdiff_t>(pos), w_hh_.size(), w_hh_.begin());
        pos += w_hh_.size();
        std::copy_n(in.begin() + static_cast<std::ptrdiff_t>(pos), b_h_.size(), b_h_.begin());
        pos += b_h_.size();
        head_.read_params(in, pos);
    }

    /// Prediction from a window of lookback x input rows (row-major).
    [[nodiscard]] double predict_window(const double* rows) const {
        const int in = widths_[0];
        const int hid = widths_[1];
        double h[DenseStack::kMaxWidth] = {0.0};
        double z[DenseStack::kMaxWidth];
        for (std::size_t t = 0; t < lookback_; ++t) {
            const double* x = rows + t * static_cast<std::size_t>(in);
            for (int u = 0; u < hid; ++u) {
                double acc = b_h_[static_cast<std::size_t>(u)];
                const double* wi = w_ih_.data() + static_cast<std::size_t>(u) * static_cast<std::size_t>(in);
                for (int i = 0; i < in; ++i) acc += wi[i] * x[i];
                const double* wh = w_hh_.data() + static_cast<std::size_t>(u) * static_cast<std::size_t>(hid);
                for (int j = 0; j < hid; ++j) acc += wh[j] * h[j];
                z[u] = acc;
            }
            for (int u = 0; u < hid; ++u) h[u] = std::tanh(z[u]);
        }
        return head_.value(h);
    }

    struct Gradients {
        std::vector<double> w_ih, w_hh, b_h;
        std::vector<std::vector<double>> head_w, head_b;
    };

    [[nodiscard]] Gradients zero_gradients() const {
        Gradients g;
        g.w_ih.assign(w_ih_.size(), 0.0);
        g.w_hh.assign(w_hh_.size(), 0.0);
        g.b_h.assign(b_h_.size(), 0.0);
        for (std::size_t l = 0; l < head_.layer_count(); ++l) {
            g.head_w.emplace_back(head_.weights[l].size(), 0.0);
            g.head_b.emplace_back(head_.biases[l].size(), 0.0);
        }
        return g;
    }

    /// One window's squared error; gradients accumulate with weight `scale`.
    double accumulate_window(const double* rows, double target, double scale,
                             Gradients& g) const {
        const int in = widths_[0];
        const int hid = widths_[1];
        // Forward, keeping every hidden state.
        std::vector<std::vector<double>> hs(lookback_ + 1,
                                            std::vector<double>(static_cast<std::size_t>(hid), 0.0));
        for (std::size_t t = 0; t < lookback_; ++t) {
            const double* x = rows + t * static_cast<std::size_t>(in);
            for (int u = 0; u < hid; ++u) {
                double acc = b_h_[static_cast<std::size_t>(u)];
                const double* wi = w_ih_.data() + static_cast<std::size_t>(u) * static_cast<std::size_t>(in);
                for (int i = 0; i < in; ++i) acc += wi[i] * x[i];
                const double* wh = w_hh_.data() + static_cast<std::size_t>(u) * static_cast<std::size_t>(hid);
                for (int j = 0; j < hid; ++j) acc += wh[j] * hs[t][static_cast<std::size_t>(j)];
                hs[t + 1][static_cast<std::size_t>(u)] = std::tanh(acc);
            }
        }
        std::vector<std::vector<double>> act;
        head_.forward(hs[lookback_].data(), act);
        const double pred = act.back()[0];
        const double err = pred - target;

        std::vector<double> dh =
            head_.backward(act, {2.0 * err * scale}, g.head_w, g.head_b);
        for (std::size_t t = lookback_; t-- > 0;) {
            const double* x = rows + t * static_cast<std::size_t>(in);
            std::vector<double> dh_prev(static_cast<std::size_t>(hid), 0.0);
            for (int u = 0; u < hid; ++u) {
                const double hval = hs[t + 1][static_cast<std::size_t>(u)];
                const double dz = dh[static_cast<std::size_t>(u)] * (1.0 - hval * hval);
                if (dz == 0.0) continue;
                g.b_h[static_cast<std::size_t>(u)] += dz;
                const std::size_t bi = static_cast<std::size_t>(u) * static_cast<std::size_t>(in);
                for (int i = 0; i < in; ++i) g.w_ih[bi + static_cast<std::size_t>(i)] += dz * x[i];
                const std::size_t bh = static_cast<std::size_t>(u) * static_cast<std::size_t>(hid);
                for (int j = 0; j < hid; ++j) {
                    g.w_hh[bh + static_cast<std::size_t>(j)] += dz * hs[t][static_cast<std::size_t>(j)];
                    dh_prev[static_cast<std::size_t>(j)] += dz * w_hh_[bh + static_cast<std::size_t>(j)];
                }
            }
            dh = std::move(dh_prev);
        }
        return err * err;
    }

    void flatten_gradients(const Gradients& g, std::vector<double>& out) const {
        out.clear();
        out.reserve(param_count());
        out.insert(out.end(), g.w_ih.begin(), g.w_ih.end());
        out.insert(out.end(), g.w_hh.begin(), g.w_hh.end());
        out.insert(out.end(), g.b_h.begin(), g.b_h.end());
        for (std::size_t l = 0; l < g.head_w.size(); ++l) {
            out.insert(out.end(), g.head_w[l].begin(), g.head_w[l].end());
            out.insert(out.end(), g.head_b[l].begin(), g.head_b[l].end());
        }
    }

private:
    std::vector<int> widths_;
    std::size_t lookback_;
    std::vector<double> w_ih_, w_hh_, b_h_;
    DenseStack head_;
    NormalizationStats stats_;
};

/// Mean squared error over a set of windows with its gradient.
inline double rnn_loss_and_grad(const RnnNetwork& net, const WindowSet& ws,
                                const std::vector<std::size_t>& batch,
                                std::vector<double>& grad) {
    if (batch.empty()) throw std::invalid_argument("rnn loss: empty batch");
    if (ws.lookback != net.lookback()) throw shape_error("rnn loss: lookback mismatch");
    RnnNetwork::Gradients g = net.zero_gradients();
    const double scale = 1.0 / static_cast<double>(batch.size());
    double mse = 0.0;
    for (std::size_t w : batch)
        mse += net.accumulate_window(ws.window_features(w), ws.window_target(w), scale, g);
    mse *= scale;
    net.flatten_gradients(g, grad);
    return mse;
}

} // namespace kantherm
