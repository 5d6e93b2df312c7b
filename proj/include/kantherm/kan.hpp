// Kolmogorov-Arnold network with learnable B-spline edge activations.
//
// Every edge computes silu(x) + sum_i c_i B_i(x); the spline coefficients are
// the only learnable parameters. Node values are the plain sums of the
// incoming edge outputs. The training loss adds an L1 penalty on the mean
// absolute edge outputs and a self-entropy penalty over their distribution
// within each layer; both are differentiated exactly, including the path
// through upstream activations.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "kantherm/activations.hpp"
#include "kantherm/errors.hpp"
#include "kantherm/normalization.hpp"
#include "kantherm/rng.hpp"
#include "kantherm/spline.hpp"

namespace kantherm {

struct KanEdge {
    SplineGrid grid;
    std::vector<double> coeffs;

    explicit KanEdge(SplineGrid g)
        : grid(std::move(g)), coeffs(static_cast<std::size_t>(grid.basis_count()), 0.0) {}
};

/// Spline part of the edge activation (without the silu backbone).
inline double edge_spline(const KanEdge& e, double x) {
    if (e.grid.in_range(x)) return e.grid.local_value(x, e.coeffs.data());
    const std::vector<double> b = e.grid.basis(x);
    double acc = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i) acc += e.coeffs[i] * b[i];
    return acc;
}

inline double edge_eval(const KanEdge& e, double x) { return silu(x) + edge_spline(e, x); }

class KanLayer {
public:
    KanLayer(int in_width, int out_width, const SplineGrid& grid)
        : in_width_(in_width), out_width_(out_width) {
        if (in_width_ < 1 || out_width_ < 1) throw config_error("layer widths must be >= 1");
        edges_.reserve(static_cast<std::size_t>(in_width_) * static_cast<std::size_t>(out_width_));
        for (int e = 0; e < in_width_ * out_width_; ++e) edges_.emplace_back(grid);
    }

    [[nodiscard]] int in_width() const { return in_width_; }
    [[nodiscard]] int out_width() const { return out_width_; }
    [[nodiscard]] int edge_count() const { return in_width_ * out_width_; }

    [[nodiscard]] KanEdge& edge(int out, int in) {
        return edges_[static_cast<std::size_t>(out * in_width_ + in)];
    }
    [[nodiscard]] const KanEdge& edge(int out, int in) const {
        return edges_[static_cast<std::size_t>(out * in_width_ + in)];
    }
    [[nodiscard]] std::vector<KanEdge>& edges() { return edges_; }
    [[nodiscard]] const std::vector<KanEdge>& edges() const { return edges_; }

private:
    int in_width_;
    int out_width_;
    std::vector<KanEdge> edges_;
};

class KanNetwork {
public:
    /// Fresh network with seeded Gaussian spline coefficients (sigma 0.1).
    /// First-layer grids cover [0, 1] (inputs are min-max normalized); deeper
    /// grids start at [-1, 2] until the first grid update observes real node
    /// ranges.
    KanNetwork(std::vector<int> widths, int order, int intervals, std::uint64_t seed)
        : widths_(std::move(widths)) {
        if (widths_.size() < 2) throw config_error("KAN needs at least two layer widths");
        Rng rng(seed);
        for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
            const double lo = (l == 0) ? 0.0 : -1.0;
            const double hi = (l == 0) ? 1.0 : 2.0;
            layers_.emplace_back(widths_[l], widths_[l + 1], SplineGrid(order, intervals, lo, hi));
            for (KanEdge& e : layers_.back().edges())
                for (double& c : e.coeffs) c = rng.gaussian(0.0, 0.1);
        }
    }

    [[nodiscard]] const std::vector<int>& widths() const { return widths_; }
    [[nodiscard]] int input_width() const { return widths_.front(); }
    [[nodiscard]] int output_width() const { return widths_.back(); }
    [[nodiscard]] std::size_t layer_count() const { return layers_.size(); }
    [[nodiscard]] KanLayer& layer(std::size_t l) { return layers_[l]; }
    [[nodiscard]] const KanLayer& layer(std::size_t l) const { return layers_[l]; }

    [[nodiscard]] NormalizationStats& stats() { return stats_; }
    [[nodiscard]] const NormalizationStats& stats() const { return stats_; }

    /// Learnable parameter count: spline coefficients only.
    [[nodiscard]] std::size_t param_count() const {
        std::size_t n = 0;
        for (const auto& layer : layers_)
            for (const auto& e : layer.edges()) n += e.coeffs.size();
        return n;
    }

    void get_params(std::vector<double>& out) const {
        out.clear();
        out.reserve(param_count());
        for (const auto& layer : layers_)
            for (const auto& e : layer.edges()) out.insert(out.end(), e.coeffs.begin(), e.coeffs.end());
    }

    void set_params(const std::vector<double>& params) {
        if (params.size() != param_count())
            throw shape_error("set_params: expected " + std::to_string(param_count()) +
                              " values, got " + std::to_string(params.size()));
        std::size_t pos = 0;
        for (auto& layer : layers_)
            for (auto& e : layer.edges()) {
                std::copy_n(params.begin() + static_cast<std::ptrdiff_t>(pos), e.coeffs.size(),
                            e.coeffs.begin());
                pos += e.coeffs.size();
            }
    }

    /// Single-row inference on normalized inputs. Stack-only hot path.
    [[nodiscard]] double predict_normalized(const double* x) const {
        double buf_a[kMaxWidth];
        double buf_b[kMaxWidth];
        const double* cur = x;
        double* next = buf_a;
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            const KanLayer& layer = layers_[l];
            const int in_w = layer.in_width();
            const int out_w = layer.out_width();
            double act[kMaxWidth]; // silu of each input node, shared by its edges
            for (int i = 0; i < in_w; ++i) act[i] = silu(cur[i]);
            for (int o = 0; o < out_w; ++o) {
                double sum = 0.0;
                for (int i = 0; i < in_w; ++i)
                    sum += act[i] + edge_spline(layer.edge(o, i), cur[i]);
                next[o] = sum;
            }
            cur = next;
            next = (next == buf_a) ? buf_b : buf_a;
        }
        return cur[0];
    }

    static constexpr int kMaxWidth = 64;

private:
    std::vector<int> widths_;
    std::vector<KanLayer> layers_;
    NormalizationStats stats_;
};

// ---------------------------------------------------------------------------
// Inference-compiled evaluator.
//
// On each knot interval a spline is a single degree-k polynomial, so a
// trained edge can be converted once into G power-basis pieces and evaluated
// with a span lookup plus a Horner pass. The conversion is exact (each piece
// is sampled at order+1 points and the Vandermonde system solved), and
// inputs outside the grid fall back to the canonical basis evaluation.
// ---------------------------------------------------------------------------

class CompiledKan {
public:
    explicit CompiledKan(const KanNetwork& net) : widths_(net.widths()) {
        layers_.reserve(net.layer_count());
        for (std::size_t l = 0; l < net.layer_count(); ++l) {
            const KanLayer& layer = net.layer(l);
            CompiledLayer cl;
            cl.in_width = layer.in_width();
            cl.out_width = layer.out_width();
            for (int o = 0; o < layer.out_width(); ++o)
                for (int i = 0; i < layer.in_width(); ++i) cl.edges.push_back(compile(layer.edge(o, i)));
            layers_.push_back(std::move(cl));
        }
    }

    [[nodiscard]] double predict_normalized(const double* x) const {
        double buf_a[KanNetwork::kMaxWidth];
        double buf_b[KanNetwork::kMaxWidth];
        const double* cur = x;
        double* next = buf_a;
        for (const CompiledLayer& layer : layers_) {
            double act[KanNetwork::kMaxWidth];
            for (int i = 0; i < layer.in_width; ++i) act[i] = silu(cur[i]);
            const CompiledEdge* e = layer.edges.data();
            for (int o = 0; o < layer.out_width; ++o) {
                double sum = 0.0;
                for (int i = 0; i < layer.in_width; ++i, ++e) sum += act[i] + eval_edge(*e, cur[i]);
                next[o] = sum;
            }
            cur = next;
            next = (next == buf_a) ? buf_b : buf_a;
        }
        return cur[0];
    }

private:
    struct CompiledEdge {
        double lo = 0.0, hi = 1.0, h = 1.0, inv_h = 1.0;
        int pieces = 1;
        int degree = 1;
        std::vector<double> poly; // pieces x (degree+1), highest power first
        KanEdge fallback;         // canonical evaluation outside [lo, hi]

        explicit CompiledEdge(KanEdge e) : fallback(std::move(e)) {}
    };

    struct CompiledLayer {
        int in_width = 0;
        int out_width = 0;
        std::vector<CompiledEdge> edges;
    };

    static CompiledEdge compile(const KanEdge& src) {
        CompiledEdge out(src);
        const SplineGrid& g = src.grid;
        const int k = g.order();
        const int G = g.intervals();
        out.lo = g.lo();
        out.hi = g.hi();
        out.h = g.spacing();
        out.inv_h = 1.0 / g.spacing();
        out.pieces = G;
        out.degree = k;
        out.poly.resize(static_cast<std::size_t>(G) * static_cast<std::size_t>(k + 1));
        const std::size_t m = static_cast<std::size_t>(k) + 1;
        std::vector<double> a(m * (m + 1));
        for (int piece = 0; piece < G; ++piece) {
            const double x0 = out.lo + piece * out.h;
            // Vandermonde rows at u_i = h*i/k with the sampled spline values.
            std::fill(a.begin(), a.end(), 0.0);
            for (std::size_t r = 0; r < m; ++r) {
                const double u = out.h * static_cast<double>(r) / static_cast<double>(k == 0 ? 1 : k);
                double pw = 1.0;
                for (std::size_t cidx = 0; cidx < m; ++cidx) {
                    a[r * (m + 1) + (m - 1 - cidx)] = pw; // column for u^cidx
                    pw *= u;
                }
                a[r * (m + 1) + m] = edge_spline(src, x0 + u);
            }
            gauss_solve(a, m, out.poly.data() + static_cast<std::size_t>(piece) * m);
        }
        return out;
    }

    static void gauss_solve(std::vector<double>& a, std::size_t m, double* coeffs) {
        for (std::size_t col = 0; col < m; ++col) {
            std::size_t pivot = col;
            for (std::size_t r = col + 1; r < m; ++r)
                if (std::fabs(a[r * (m + 1) + col]) > std::fabs(a[pivot * (m + 1) + col])) pivot = r;
            if (pivot != col)
                for (std::size_t j = 0; j <= m; ++j)
                    std::swap(a[col * (m + 1) + j], a[pivot * (m + 1) + j]);
            const double d = a[col * (m + 1) + col];
            for (std::size_t j = col; j <= m; ++j) a[col * (m + 1) + j] /= d;
            for (std::size_t r = 0; r < m; ++r) {
                if (r == col) continue;
                const double f = a[r * (m + 1) + col];
                if (f == 0.0) continue;
                for (std::size_t j = col; j <= m; ++j) a[r * (m + 1) + j] -= f * a[col * (m + 1) + j];
            }
        }
        for (std::size_t i = 0; i < m; ++i) coeffs[i] = a[i * (m + 1) + m];
    }

    static double eval_edge(const CompiledEdge& e, double x) {
        if (x < e.lo || x > e.hi) return edge_spline(e.fallback, x);
        const double u = x - e.lo;
        int piece = static_cast<int>(u * e.inv_h);
        if (piece >= e.pieces) piece = e.pieces - 1;
        const double ul = u - piece * e.h;
        const double* p = e.poly.data() + static_cast<std::size_t>(piece) * (e.degree + 1);
        double acc = p[0];
        for (int r = 1; r <= e.degree; ++r) acc = acc * ul + p[r];
        return acc;
    }

    std::vector<int> widths_;
    std::vector<CompiledLayer> layers_;
};

// ---------------------------------------------------------------------------
// Batched forward pass with the cache needed for backprop and the
// sparsification statistics.
// ---------------------------------------------------------------------------

struct EdgeBatch {
    std::vector<double> basis; // count x basis_count, row-major
    std::vector<double> value; // theta(x) per sample
    std::vector<double> deriv; // theta'(x) per sample (silu' included)
};

struct LayerBatch {
    std::vector<double> inputs; // count x in_width node values
    std::vector<EdgeBatch> edges;
    int in_width = 0;
    int out_width = 0;
    std::size_t count = 0;
};

struct ForwardCache {
    std::size_t count = 0;
    std::vector<LayerBatch> layers;
    std::vector<double> outputs; // count x output_width
};

inline ForwardCache forward_batch(const KanNetwork& net, const std::vector<double>& inputs,
                                  std::size_t count) {
    const std::size_t in_w = static_cast<std::size_t>(net.input_width());
    if (inputs.size() != count * in_w)
        throw shape_error("forward: expected " + std::to_string(count * in_w) +
                          " input values, got " + std::to_string(inputs.size()));
    ForwardCache cache;
    cache.count = count;
    cache.layers.resize(net.layer_count());

    std::vector<double> cur = inputs;
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        const KanLayer& layer = net.layer(l);
        LayerBatch& lb = cache.layers[l];
        lb.in_width = layer.in_width();
        lb.out_width = layer.out_width();
        lb.count = count;
        lb.inputs = cur;
        lb.edges.resize(static_cast<std::size_t>(layer.edge_count()));

        std::vector<double> next(count * static_cast<std::size_t>(layer.out_width()), 0.0);
        for (int o = 0; o < layer.out_width(); ++o) {
            for (int i = 0; i < layer.in_width(); ++i) {
                const KanEdge& e = layer.edge(o, i);
                EdgeBatch& eb = lb.edges[static_cast<std::size_t>(o * layer.in_width() + i)];
                const int bc = e.grid.basis_count();
                const int k = e.grid.order();
                eb.basis.assign(count * static_cast<std::size_t>(bc), 0.0);
                eb.value.resize(count);
                eb.deriv.resize(count);
                for (std::size_t n = 0; n < count; ++n) {
                    const double x = lb.inputs[n * static_cast<std::size_t>(layer.in_width()) +
                                               static_cast<std::size_t>(i)];
                    double* brow = eb.basis.data() + n * static_cast<std::size_t>(bc);
                    double sval = 0.0;
                    double sder = 0.0;
                    if (e.grid.in_range(x)) {
                        double nz[SplineGrid::kMaxOrder + 1];
                        double dnz[SplineGrid::kMaxOrder + 1];
                        const int s = e.grid.local_basis_and_derivative(x, nz, dnz);
                        for (int r = 0; r <= k; ++r) {
                            brow[s - k + r] = nz[r];
                            sval += e.coeffs[static_cast<std::size_t>(s - k + r)] * nz[r];
                            sder += e.coeffs[static_cast<std::size_t>(s - k + r)] * dnz[r];
                        }
                    } else {
                        e.grid.basis(x, brow);
                        double db[64];
                        e.grid.basis_derivative(x, db);
                        for (int j = 0; j < bc; ++j) {
                            sval += e.coeffs[static_cast<std::size_t>(j)] * brow[j];
                            sder += e.coeffs[static_cast<std::size_t>(j)] * db[j];
                        }
                    }
                    eb.value[n] = silu(x) + sval;
                    eb.deriv[n] = silu_prime(x) + sder;
                    next[n * static_cast<std::size_t>(layer.out_width()) +
                         static_cast<std::size_t>(o)] += eb.value[n];
                }
            }
        }
        cur = std::move(next);
    }
    cache.outputs = std::move(cur);
    return cache;
}

/// Spec-shaped single-input forward: returns the output vector and fills the
/// cache used by backward().
inline std::vector<double> forward(const KanNetwork& net, const std::vector<double>& input,
                                   ForwardCache& cache) {
    cache = forward_batch(net, input, 1);
    return cache.outputs;
}

inline std::vector<double> forward(const KanNetwork& net, const std::vector<double>& input) {
    ForwardCache cache;
    return forward(net, input, cache);
}

// ---------------------------------------------------------------------------
// Sparsification statistics (mean |edge output| and layer self-entropy).
// ---------------------------------------------------------------------------

/// Mean absolute output of one edge over the batch.
inline double edge_l1(const EdgeBatch& eb) {
    double acc = 0.0;
    for (double v : eb.value) acc += std::fabs(v);
    return acc / static_cast<double>(eb.value.size());
}

/// |Theta_l|_1: sum of the per-edge mean absolute outputs.
inline double layer_l1(const LayerBatch& lb) {
    if (lb.count == 0) throw std::invalid_argument("layer_l1: empty batch");
    double acc = 0.0;
    for (const EdgeBatch& eb : lb.edges) acc += edge_l1(eb);
    return acc;
}

/// S(Theta_l) = -sum p log p with p the normalized per-edge L1 masses.
/// An all-zero layer is degenerate and reports zero entropy.
inline double layer_entropy(const LayerBatch& lb) {
    if (lb.count == 0) throw std::invalid_argument("layer_entropy: empty batch");
    std::vector<double> mass(lb.edges.size());
    double total = 0.0;
    for (std::size_t e = 0; e < lb.edges.size(); ++e) {
        mass[e] = edge_l1(lb.edges[e]);
        total += mass[e];
    }
    if (total <= 0.0) return 0.0;
    double s = 0.0;
    for (double m : mass) {
        if (m <= 0.0) continue; // lim p log p = 0
        const double p = m / total;
        s -= p * std::log(p);
    }
    return s;
}

struct RegPenalty {
    double lambda = 0.0;
    double nu1 = 0.0;
    double nu2 = 0.0;
};

/// MSE plus the weighted L1/entropy penalties over all layers.
inline double total_loss(const std::vector<double>& pred, const std::vector<double>& target,
                         const ForwardCache& cache, const RegPenalty& reg) {
    if (pred.size() != target.size())
        throw shape_error("total_loss: pred/target length mismatch");
    if (pred.empty()) throw std::invalid_argument("total_loss: empty batch");
    double mse = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - target[i];
        mse += d * d;
    }
    mse /= static_cast<double>(pred.size());
    if (reg.lambda == 0.0) return mse;
    double l1 = 0.0;
    double ent = 0.0;
    for (const LayerBatch& lb : cache.layers) {
        l1 += layer_l1(lb);
        ent += layer_entropy(lb);
    }
    return mse + reg.lambda * (reg.nu1 * l1 + reg.nu2 * ent);
}

// ---------------------------------------------------------------------------
// Reverse pass.
// ---------------------------------------------------------------------------

/// Gradient of the scalar loss with respect to every spline coefficient, in
/// the same order as get_params(). d_outputs holds dLoss/d(output) per sample
/// and output node. When reg is non-null the exact gradient of the L1 and
/// entropy penalties is added, including their dependence on upstream
/// activations.
inline std::vector<double> backward_batch(const KanNetwork& net, const ForwardCache& cache,
                                          const std::vector<double>& d_outputs,
                                          const RegPenalty* reg = nullptr) {
    const std::size_t count = cache.count;
    if (cache.layers.size() != net.layer_count())
        throw shape_error("backward: cache does not match network depth");
    if (d_outputs.size() != count * static_cast<std::size_t>(net.output_width()))
        throw shape_error("backward: d_outputs size mismatch");

    std::vector<double> grads(net.param_count(), 0.0);

    // Parameter offsets per layer, matching get_params() packing.
    std::vector<std::size_t> layer_offset(net.layer_count() + 1, 0);
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        std::size_t sz = 0;
        for (const auto& e : net.layer(l).edges()) sz += e.coeffs.size();
        layer_offset[l + 1] = layer_offset[l] + sz;
    }

    std::vector<double> delta = d_outputs; // sensitivity at the layer output nodes
    for (std::size_t li = net.layer_count(); li-- > 0;) {
        const KanLayer& layer = net.layer(li);
        const LayerBatch& lb = cache.layers[li];
        if (lb.count != count || lb.in_width != layer.in_width() ||
            lb.out_width != layer.out_width())
            throw shape_error("backward: stale cache for layer " + std::to_string(li));

        // Direct sensitivity of the penalties to each edge output.
        std::vector<double> kappa(lb.edges.size(), 0.0);
        if (reg != nullptr && reg->lambda != 0.0) {
            std::vector<double> mass(lb.edges.size());
            double total = 0.0;
            for (std::size_t e = 0; e < lb.edges.size(); ++e) {
                mass[e] = edge_l1(lb.edges[e]);
                total += mass[e];
            }
            const double entropy = layer_entropy(lb);
            for (std::size_t e = 0; e < lb.edges.size(); ++e) {
                if (mass[e] <= 0.0) continue; // sign(0) kills every sample term
                double k = reg->nu1;
                if (total > 0.0)
                    k += reg->nu2 * (-(std::log(mass[e] / total) + entropy) / total);
                kappa[e] = reg->lambda * k / static_cast<double>(count);
            }
        }

        std::vector<double> delta_in(count * static_cast<std::size_t>(layer.in_width()), 0.0);
        std::size_t param_pos = layer_offset[li];
        for (int o = 0; o < layer.out_width(); ++o) {
            for (int i = 0; i < layer.in_width(); ++i) {
                const std::size_t ei = static_cast<std::size_t>(o * layer.in_width() + i);
                const EdgeBatch& eb = lb.edges[ei];
                const int bc = layer.edge(o, i).grid.basis_count();
                double* g = grads.data() + param_pos;
                for (std::size_t n = 0; n < count; ++n) {
                    double gout = delta[n * static_cast<std::size_t>(layer.out_width()) +
                                        static_cast<std::size_t>(o)];
                    if (kappa[ei] != 0.0) {
                        const double v = eb.value[n];
                        gout += kappa[ei] * (v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0));
                    }
                    if (gout == 0.0) continue;
                    const double* brow = eb.basis.data() + n * static_cast<std::size_t>(bc);
                    for (int j = 0; j < bc; ++j) g[j] += gout * brow[j];
                    delta_in[n * static_cast<std::size_t>(layer.in_width()) +
                             static_cast<std::size_t>(i)] += gout * eb.deriv[n];
                }
                param_pos += static_cast<std::size_t>(bc);
            }
        }
        delta = std::move(delta_in);
    }
    return grads;
}

/// Spec-shaped single-sample backward.
inline std::vector<double> backward(const KanNetwork& net, const ForwardCache& cache,
                                    const std::vector<double>& d_output) {
    return backward_batch(net, cache, d_output, nullptr);
}

/// Full training objective: MSE over the batch plus the penalties, with its
/// exact gradient. Inputs are row-major count x input_width; targets are
/// count x output_width.
struct LossAndGrad {
    double loss = 0.0;
    std::vector<double> grad;
};

inline LossAndGrad kan_loss_and_grad(const KanNetwork& net, const std::vector<double>& inputs,
                                     const std::vector<double>& targets, std::size_t count,
                                     const RegPenalty& reg) {
    ForwardCache cache = forward_batch(net, inputs, count);
    if (targets.size() != cache.outputs.size())
        throw shape_error("loss: target size mismatch");
    LossAndGrad out;
    out.loss = total_loss(cache.outputs, targets, cache, reg);
    std::vector<double> d(cache.outputs.size());
    const double scale = 2.0 / static_cast<double>(cache.outputs.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = scale * (cache.outputs[i] - targets[i]);
    out.grad = backward_batch(net, cache, d, &reg);
    return out;
}

// ---------------------------------------------------------------------------
// Grid fine-graining.
// ---------------------------------------------------------------------------

namespace detail {

/// Least-squares solve of (Phi^T Phi) c = Phi^T t for a small basis count.
/// Phi is count x m row-major. A zero right-hand side returns exact zeros.
inline std::vector<double> solve_normal_equations(const std::vector<double>& phi,
                                                  std::size_t count, std::size_t m,
                                                  const std::vector<double>& target) {
    std::vector<double> ata(m * m, 0.0);
    std::vector<double> atb(m, 0.0);
    for (std::size_t n = 0; n < count; ++n) {
        const double* row = phi.data() + n * m;
        for (std::size_t i = 0; i < m; ++i) {
            if (row[i] == 0.0) continue;
            atb[i] += row[i] * target[n];
            for (std::size_t j = i; j < m; ++j) ata[i * m + j] += row[i] * row[j];
        }
    }
    bool all_zero = true;
    for (double b : atb)
        if (b != 0.0) {
            all_zero = false;
            break;
        }
    if (all_zero) return std::vector<double>(m, 0.0);

    double max_diag = 0.0;
    for (std::size_t i = 0; i < m; ++i) max_diag = std::max(max_diag, ata[i * m + i]);
    double ridge = 1e-12 * std::max(max_diag, 1.0);

    // Cholesky on the upper triangle; bump the ridge if a pivot collapses.
    for (int attempt = 0; attempt < 8; ++attempt) {
        std::vector<double> u = ata;
        for (std::size_t i = 0; i < m; ++i) u[i * m + i] += ridge;
        bool ok = true;
        for (std::size_t i = 0; i < m && ok; ++i) {
            for (std::size_t kk = 0; kk < i; ++kk) u[i * m + i] -= u[kk * m + i] * u[kk * m + i];
            if (u[i * m + i] <= 0.0) {
                ok = false;
                break;
            }
            u[i * m + i] = std::sqrt(u[i * m + i]);
            for (std::size_t j = i + 1; j < m; ++j) {
                for (std::size_t kk = 0; kk < i; ++kk)
                    u[i * m + j] -= u[kk * m + i] * u[kk * m + j];
                u[i * m + j] /= u[i * m + i];
            }
        }
        if (!ok) {
            ridge *= 100.0;
            continue;
        }
        std::vector<double> y(m), c(m);
        for (std::size_t i = 0; i < m; ++i) {
            y[i] = atb[i];
            for (std::size_t kk = 0; kk < i; ++kk) y[i] -= u[kk * m + i] * y[kk];
            y[i] /= u[i * m + i];
        }
        for (std::size_t ii = m; ii-- > 0;) {
            c[ii] = y[ii];
            for (std::size_t j = ii + 1; j < m; ++j) c[ii] -= u[ii * m + j] * c[j];
            c[ii] /= u[ii * m + ii];
        }
        return c;
    }
    throw numeric_error("grid refit: normal equations not positive definite");
}

} // namespace detail

struct GridUpdateReport {
    int refitted = 0;
    int kept_degenerate = 0; // edges whose samples were all equal
};

/// Refit every edge grid to the observed range of its inputs (5% margin each
/// side) and re-solve the coefficients by least squares against the old
/// spline values. Only samples inside the old grid contribute to the refit:
/// beyond its knots the old spline is an extrapolation artifact, and fitting
/// it would corrupt the learned function inside the trusted range. The silu
/// backbone is untouched. Edges with degenerate samples keep their grid.
inline GridUpdateReport grid_update(KanNetwork& net, const std::vector<double>& inputs,
                                    std::size_t count) {
    if (count == 0) throw std::invalid_argument("grid_update: empty sample batch");
    const ForwardCache cache = forward_batch(net, inputs, count);
    GridUpdateReport report;
    for (std::size_t li = 0; li < net.layer_count(); ++li) {
        KanLayer& layer = net.layer(li);
        const LayerBatch& lb = cache.layers[li];
        for (int o = 0; o < layer.out_width(); ++o) {
            for (int i = 0; i < layer.in_width(); ++i) {
                KanEdge& e = layer.edge(o, i);
                const EdgeBatch& eb = lb.edges[static_cast<std::size_t>(o * layer.in_width() + i)];
                double xmin = lb.inputs[static_cast<std::size_t>(i)];
                double xmax = xmin;
                for (std::size_t n = 0; n < count; ++n) {
                    const double x = lb.inputs[n * static_cast<std::size_t>(layer.in_width()) +
                                               static_cast<std::size_t>(i)];
                    xmin = std::min(xmin, x);
                    xmax = std::max(xmax, x);
                }
                if (xmax <= xmin) {
                    ++report.kept_degenerate;
                    continue;
                }
                const double margin = 0.05 * (xmax - xmin);
                SplineGrid ngrid(e.grid.order(), e.grid.intervals(), xmin - margin, xmax + margin);

                // Fit rows: old spline values (from the cached bases) at the
                // in-range sample positions.
                const int bc_old = e.grid.basis_count();
                const std::size_t m = static_cast<std::size_t>(ngrid.basis_count());
                std::vector<double> phi;
                std::vector<double> target;
                std::size_t rows = 0;
                for (int pass = 0; pass < 2 && rows < m; ++pass) {
                    // Second pass (rare): too few in-range samples, use them all.
                    phi.clear();
                    target.clear();
                    rows = 0;
                    for (std::size_t n = 0; n < count; ++n) {
                        const double x = lb.inputs[n * static_cast<std::size_t>(layer.in_width()) +
                                                   static_cast<std::size_t>(i)];
                        if (pass == 0 && !e.grid.in_range(x)) continue;
                        const double* brow = eb.basis.data() + n * static_cast<std::size_t>(bc_old);
                        double acc = 0.0;
                        for (int j = 0; j < bc_old; ++j)
                            acc += e.coeffs[static_cast<std::size_t>(j)] * brow[j];
                        target.push_back(acc);
                        phi.resize(phi.size() + m, 0.0);
                        ngrid.basis(x, phi.data() + rows * m);
                        ++rows;
                    }
                }
                e.coeffs = detail::solve_normal_equations(phi, rows, m, target);
                e.grid = std::move(ngrid);
                ++report.refitted;
            }
        }
    }
    return report;
}

} // namespace kantherm
