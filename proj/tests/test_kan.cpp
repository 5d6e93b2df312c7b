#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "kantherm/kan.hpp"
#include "kantherm/model_io.hpp"
#include "kantherm/rng.hpp"

using namespace kantherm;

namespace {

// Test-side least squares via Gauss-Jordan with partial pivoting; kept
// independent of the library's Cholesky path.
std::vector<double> oracle_least_squares(const std::vector<double>& phi, std::size_t n,
                                         std::size_t m, const std::vector<double>& target) {
    std::vector<double> a(m * (m + 1), 0.0);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < m; ++j) a[i * (m + 1) + j] += phi[r * m + i] * phi[r * m + j];
            a[i * (m + 1) + m] += phi[r * m + i] * target[r];
        }
    for (std::size_t i = 0; i < m; ++i) a[i * (m + 1) + i] += 1e-12;
    for (std::size_t col = 0; col < m; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < m; ++r)
            if (std::fabs(a[r * (m + 1) + col]) > std::fabs(a[pivot * (m + 1) + col])) pivot = r;
        for (std::size_t j = 0; j <= m; ++j) std::swap(a[col * (m + 1) + j], a[pivot * (m + 1) + j]);
        const double d = a[col * (m + 1) + col];
        for (std::size_t j = 0; j <= m; ++j) a[col * (m + 1) + j] /= d;
        for (std::size_t r = 0; r < m; ++r) {
            if (r == col) continue;
            const double f = a[r * (m + 1) + col];
            for (std::size_t j = 0; j <= m; ++j) a[r * (m + 1) + j] -= f * a[col * (m + 1) + j];
        }
    }
    std::vector<double> c(m);
    for (std::size_t i = 0; i < m; ++i) c[i] = a[i * (m + 1) + m];
    return c;
}

double objective(KanNetwork& net, const std::vector<double>& inputs,
                 const std::vector<double>& targets, std::size_t count, const RegPenalty& reg) {
    const ForwardCache cache = forward_batch(net, inputs, count);
    return total_loss(cache.outputs, targets, cache, reg);
}

// Central finite differences on the full training objective.
std::vector<double> fd_gradient(KanNetwork& net, const std::vector<double>& inputs,
                                const std::vector<double>& targets, std::size_t count,
                                const RegPenalty& reg, double step) {
    std::vector<double> base;
    net.get_params(base);
    std::vector<double> grad(base.size());
    for (std::size_t i = 0; i < base.size(); ++i) {
        std::vector<double> p = base;
        p[i] = base[i] + step;
        net.set_params(p);
        const double hi = objective(net, inputs, targets, count, reg);
        p[i] = base[i] - step;
        net.set_params(p);
        const double lo = objective(net, inputs, targets, count, reg);
        grad[i] = (hi - lo) / (2.0 * step);
    }
    net.set_params(base);
    return grad;
}

} // namespace

TEST_CASE("edge evaluation") {
    const SplineGrid grid(3, 5, 0.0, 1.0);
    KanEdge e(grid);

    SECTION("zero coefficients reduce to silu") {
        CHECK(edge_eval(e, 0.0) == 0.0);
        CHECK(edge_eval(e, 1.0) == Catch::Approx(silu(1.0)).margin(1e-15));
        CHECK(edge_eval(e, -2.0) == Catch::Approx(silu(-2.0)).margin(1e-15));
    }
    SECTION("unit coefficients add the partition of unity") {
        for (double& c : e.coeffs) c = 1.0;
        for (double x : {0.0, 0.2, 0.55, 0.999, 1.0})
            CHECK(edge_eval(e, x) == Catch::Approx(silu(x) + 1.0).margin(1e-12));
    }
    SECTION("least-squares fit of the identity tracks silu(x) + x") {
        const std::size_t n = 400;
        const std::size_t m = static_cast<std::size_t>(grid.basis_count());
        std::vector<double> phi(n * m), target(n);
        for (std::size_t r = 0; r < n; ++r) {
            const double x = static_cast<double>(r) / static_cast<double>(n - 1);
            grid.basis(x, phi.data() + r * m);
            target[r] = x;
        }
        e.coeffs = oracle_least_squares(phi, n, m, target);
        for (double x : {0.03, 0.25, 0.5, 0.77, 0.98})
            CHECK(edge_eval(e, x) == Catch::Approx(silu(x) + x).margin(1e-8));
    }
}

TEST_CASE("forward pass") {
    SECTION("single zero edge") {
        KanNetwork net({1, 1}, 3, 5, 1);
        for (auto& e : net.layer(0).edges()) std::fill(e.coeffs.begin(), e.coeffs.end(), 0.0);
        const auto out = forward(net, {0.0});
        REQUIRE(out.size() == 1);
        CHECK(out[0] == 0.0);
    }
    SECTION("two zero edges sum their silus") {
        KanNetwork net({2, 1}, 3, 5, 1);
        for (auto& e : net.layer(0).edges()) std::fill(e.coeffs.begin(), e.coeffs.end(), 0.0);
        const auto out = forward(net, {1.0, 1.0});
        CHECK(out[0] == Catch::Approx(1.462117).margin(1e-6));
    }
    SECTION("arity mismatch is a shape error") {
        KanNetwork net({4, 3, 1}, 3, 5, 1);
        CHECK_THROWS_AS(forward(net, {0.1, 0.2, 0.3}), shape_error);
    }
    SECTION("forward is deterministic and matches the inference path") {
        KanNetwork net({4, 3, 1}, 3, 5, 99);
        Rng rng(5);
        for (int trial = 0; trial < 50; ++trial) {
            const std::vector<double> x = {rng.uniform(), rng.uniform(), rng.uniform(),
                                           rng.uniform()};
            const double a = forward(net, x)[0];
            const double b = forward(net, x)[0];
            CHECK(a == b);
            CHECK(net.predict_normalized(x.data()) == a);
        }
    }
}

TEST_CASE("backward pass") {
    SECTION("zero output sensitivity gives zero gradients") {
        KanNetwork net({4, 3, 1}, 3, 5, 2);
        ForwardCache cache;
        forward(net, {0.1, 0.4, 0.6, 0.9}, cache);
        const auto grads = backward(net, cache, {0.0});
        for (double g : grads) CHECK(g == 0.0);
    }
    SECTION("single-edge coefficient gradient is the basis vector") {
        KanNetwork net({1, 1}, 3, 5, 3);
        const double x = 0.37;
        ForwardCache cache;
        forward(net, {x}, cache);
        const auto grads = backward(net, cache, {1.0});
        const auto basis = net.layer(0).edge(0, 0).grid.basis(x);
        REQUIRE(grads.size() == basis.size());
        for (std::size_t i = 0; i < basis.size(); ++i)
            CHECK(grads[i] == Catch::Approx(basis[i]).margin(1e-15));
    }
    SECTION("analytic gradient matches finite differences") {
        Rng data_rng(17);
        const std::size_t count = 12;
        std::vector<double> inputs(count * 4), targets(count);
        for (auto& v : inputs) v = data_rng.uniform();
        for (auto& v : targets) v = data_rng.uniform();

        for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
            KanNetwork net({4, 3, 1}, 3, 5, seed);
            SECTION("seed " + std::to_string(seed) + " without penalties") {
                const RegPenalty reg{0.0, 0.0, 0.0};
                const LossAndGrad lg = kan_loss_and_grad(net, inputs, targets, count, reg);
                const auto fd = fd_gradient(net, inputs, targets, count, reg, 1e-5);
                for (std::size_t i = 0; i < fd.size(); ++i) {
                    const double scale = std::max({1.0, std::fabs(fd[i]), std::fabs(lg.grad[i])});
                    CHECK(std::fabs(lg.grad[i] - fd[i]) / scale < 1e-5);
                }
            }
            SECTION("seed " + std::to_string(seed) + " with L1 and entropy penalties") {
                const RegPenalty reg{1e-2, 0.4, 0.3};
                const LossAndGrad lg = kan_loss_and_grad(net, inputs, targets, count, reg);
                const auto fd = fd_gradient(net, inputs, targets, count, reg, 1e-5);
                for (std::size_t i = 0; i < fd.size(); ++i) {
                    const double scale = std::max({1.0, std::fabs(fd[i]), std::fabs(lg.grad[i])});
                    CHECK(std::fabs(lg.grad[i] - fd[i]) / scale < 1e-5);
                }
            }
        }
    }
}

TEST_CASE("layer statistics") {
    SECTION("hand-built batch of edge outputs") {
        LayerBatch lb;
        lb.count = 3;
        lb.in_width = 1;
        lb.out_width = 1;
        lb.edges.resize(1);
        lb.edges[0].value = {1.0, -1.0, 2.0};
        CHECK(layer_l1(lb) == Catch::Approx(4.0 / 3.0).margin(1e-15));
        SECTION("doubling the outputs doubles the norm") {
            for (double& v : lb.edges[0].value) v *= 2.0;
            CHECK(layer_l1(lb) == Catch::Approx(8.0 / 3.0).margin(1e-15));
        }
    }
    SECTION("all-zero outputs give zero L1 and zero entropy") {
        LayerBatch lb;
        lb.count = 2;
        lb.edges.resize(3);
        for (auto& e : lb.edges) e.value = {0.0, 0.0};
        CHECK(layer_l1(lb) == 0.0);
        CHECK(layer_entropy(lb) == 0.0);
    }
    SECTION("single dominant edge has zero entropy") {
        LayerBatch lb;
        lb.count = 2;
        lb.edges.resize(4);
        for (auto& e : lb.edges) e.value = {0.0, 0.0};
        lb.edges[2].value = {1.0, 3.0};
        CHECK(layer_entropy(lb) == Catch::Approx(0.0).margin(1e-15));
    }
    SECTION("uniform 12-edge layer reaches log 12") {
        // Identical inputs on all four nodes with zero spline coefficients
        // make every edge output the same silu value.
        KanNetwork net({4, 3, 1}, 3, 5, 4);
        for (auto& e : net.layer(0).edges()) std::fill(e.coeffs.begin(), e.coeffs.end(), 0.0);
        const ForwardCache cache = forward_batch(net, {0.7, 0.7, 0.7, 0.7}, 1);
        CHECK(layer_entropy(cache.layers[0]) == Catch::Approx(std::log(12.0)).margin(1e-9));
        CHECK(layer_entropy(cache.layers[0]) == Catch::Approx(2.484907).margin(1e-6));
    }
    SECTION("entropy bounds") {
        Rng rng(9);
        for (int trial = 0; trial < 20; ++trial) {
            KanNetwork net({4, 3, 1}, 3, 5, 100 + static_cast<std::uint64_t>(trial));
            std::vector<double> inputs(4 * 8);
            for (auto& v : inputs) v = rng.uniform();
            const ForwardCache cache = forward_batch(net, inputs, 8);
            const double s0 = layer_entropy(cache.layers[0]);
            const double s1 = layer_entropy(cache.layers[1]);
            CHECK(s0 >= 0.0);
            CHECK(s0 <= std::log(12.0) + 1e-12);
            CHECK(s1 >= 0.0);
            CHECK(s1 <= std::log(3.0) + 1e-12);
        }
    }
    SECTION("empty batch is rejected") {
        LayerBatch lb;
        CHECK_THROWS_AS(layer_l1(lb), std::invalid_argument);
    }
}

TEST_CASE("total loss") {
    KanNetwork net({4, 3, 1}, 3, 5, 5);
    Rng rng(21);
    const std::size_t count = 6;
    std::vector<double> inputs(count * 4);
    for (auto& v : inputs) v = rng.uniform();
    const ForwardCache cache = forward_batch(net, inputs, count);

    SECTION("perfect prediction with lambda 0 is exactly zero") {
        CHECK(total_loss(cache.outputs, cache.outputs, cache, {0.0, 0.25, 0.25}) == 0.0);
    }
    SECTION("perfect prediction leaves only the penalties") {
        double l1 = 0.0, ent = 0.0;
        for (const auto& lb : cache.layers) {
            l1 += layer_l1(lb);
            ent += layer_entropy(lb);
        }
        const double expect = 0.000025 * (l1 + ent);
        CHECK(total_loss(cache.outputs, cache.outputs, cache, {1e-4, 0.25, 0.25}) ==
              Catch::Approx(expect).epsilon(1e-12));
    }
    SECTION("lambda 0 reduces to the MSE") {
        std::vector<double> targets(count);
        for (auto& v : targets) v = rng.uniform();
        double mse = 0.0;
        for (std::size_t i = 0; i < count; ++i) {
            const double d = cache.outputs[i] - targets[i];
            mse += d * d;
        }
        mse /= static_cast<double>(count);
        CHECK(total_loss(cache.outputs, targets, cache, {0.0, 0.5, 0.5}) ==
              Catch::Approx(mse).epsilon(1e-14));
    }
    SECTION("length mismatch is a shape error") {
        std::vector<double> bad(count + 1, 0.0);
        CHECK_THROWS_AS(total_loss(cache.outputs, bad, cache, {0.0, 0.0, 0.0}), shape_error);
    }
}

TEST_CASE("grid update") {
    SECTION("samples that reproduce the current grid keep the edge function") {
        KanNetwork net({1, 1}, 3, 5, 6);
        KanEdge& e = net.layer(0).edge(0, 0);
        // Choose the sample extremes so min - 5% margin lands on lo and
        // max + 5% margin lands on hi: range r = (hi-lo)/1.1.
        const double lo = e.grid.lo(), hi = e.grid.hi();
        const double r = (hi - lo) / 1.1;
        const double smin = lo + 0.05 * r;
        const double smax = smin + r;
        const std::size_t n = 200;
        std::vector<double> xs(n);
        for (std::size_t i = 0; i < n; ++i)
            xs[i] = smin + (smax - smin) * static_cast<double>(i) / static_cast<double>(n - 1);
        std::vector<double> before(n);
        for (std::size_t i = 0; i < n; ++i) before[i] = edge_eval(e, xs[i]);
        const GridUpdateReport rep = grid_update(net, xs, n);
        CHECK(rep.refitted == 1);
        CHECK(std::fabs(e.grid.lo() - lo) < 1e-9);
        CHECK(std::fabs(e.grid.hi() - hi) < 1e-9);
        for (std::size_t i = 0; i < n; ++i)
            CHECK(edge_eval(e, xs[i]) == Catch::Approx(before[i]).margin(1e-8));
    }
    SECTION("zero-coefficient edges stay zero") {
        KanNetwork net({1, 1}, 3, 5, 7);
        KanEdge& e = net.layer(0).edge(0, 0);
        std::fill(e.coeffs.begin(), e.coeffs.end(), 0.0);
        std::vector<double> xs;
        for (int i = 0; i <= 100; ++i) xs.push_back(static_cast<double>(i) / 50.0);
        grid_update(net, xs, xs.size());
        for (double c : e.coeffs) CHECK(c == 0.0);
    }
    SECTION("quadratic edge survives a range extension") {
        // Fit the spline part to f(x) = x^2 on [0,1] (representable exactly
        // for order 3), then update with samples over [0,2]; on [0,1] the
        // refit must track the old function closely.
        KanNetwork net({1, 1}, 3, 5, 8);
        KanEdge& e = net.layer(0).edge(0, 0);
        const std::size_t m = static_cast<std::size_t>(e.grid.basis_count());
        const std::size_t n = 500;
        std::vector<double> phi(n * m), target(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double x = static_cast<double>(i) / static_cast<double>(n - 1);
            e.grid.basis(x, phi.data() + i * m);
            target[i] = x * x;
        }
        e.coeffs = oracle_least_squares(phi, n, m, target);
        std::vector<double> old_probe(101);
        for (int i = 0; i <= 100; ++i) old_probe[static_cast<std::size_t>(i)] = edge_eval(e, i / 100.0);

        std::vector<double> xs;
        for (int i = 0; i <= 400; ++i) xs.push_back(i / 200.0);
        grid_update(net, xs, xs.size());
        double max_err = 0.0;
        for (int i = 0; i <= 100; ++i)
            max_err = std::max(max_err,
                               std::fabs(edge_eval(e, i / 100.0) - old_probe[static_cast<std::size_t>(i)]));
        CHECK(max_err < 1e-3);
    }
    SECTION("degenerate samples keep the previous grid and flag it") {
        KanNetwork net({1, 1}, 3, 5, 9);
        const SplineGrid before = net.layer(0).edge(0, 0).grid;
        const std::vector<double> xs(50, 0.4);
        const GridUpdateReport rep = grid_update(net, xs, xs.size());
        CHECK(rep.kept_degenerate == 1);
        CHECK(net.layer(0).edge(0, 0).grid.lo() == before.lo());
        CHECK(net.layer(0).edge(0, 0).grid.hi() == before.hi());
    }
}

TEST_CASE("compiled inference matches the canonical forward pass") {
    Rng rng(71);
    for (std::uint64_t seed : {11ull, 12ull, 13ull}) {
        KanNetwork net({4, 3, 1}, 3, 5, seed);
        // Spread the grids so pieces genuinely differ.
        std::vector<double> xs;
        for (int i = 0; i < 4 * 64; ++i) xs.push_back(rng.uniform(-0.2, 1.2));
        grid_update(net, xs, 64);
        const CompiledKan compiled(net);
        for (int trial = 0; trial < 300; ++trial) {
            const std::vector<double> x = {rng.uniform(-0.5, 1.5), rng.uniform(), rng.uniform(),
                                           rng.uniform(-0.5, 1.5)};
            const double canonical = net.predict_normalized(x.data());
            const double fast = compiled.predict_normalized(x.data());
            CHECK(std::fabs(fast - canonical) < 1e-10 * std::max(1.0, std::fabs(canonical)));
        }
    }
}

TEST_CASE("parameter count") {
    CHECK(KanNetwork({4, 3, 1}, 3, 5, 1).param_count() == 120);
    CHECK(KanNetwork({1, 1}, 1, 1, 1).param_count() == 2);
    CHECK(KanNetwork({4, 5, 1}, 3, 5, 1).param_count() == 200);
    SECTION("formula equals literal enumeration") {
        Rng rng(33);
        for (int trial = 0; trial < 10; ++trial) {
            const int k = 1 + static_cast<int>(rng.below(5));
            const int g = 1 + static_cast<int>(rng.below(5));
            std::vector<int> widths;
            const int depth = 2 + static_cast<int>(rng.below(3));
            for (int l = 0; l < depth; ++l) widths.push_back(1 + static_cast<int>(rng.below(5)));
            const KanNetwork net(widths, k, g, 1);
            std::size_t formula = 0;
            for (std::size_t l = 0; l + 1 < widths.size(); ++l)
                formula += static_cast<std::size_t>(widths[l]) *
                           static_cast<std::size_t>(widths[l + 1]) *
                           static_cast<std::size_t>(g + k);
            CHECK(net.param_count() == formula);
            std::vector<double> packed;
            net.get_params(packed);
            CHECK(packed.size() == formula);
        }
    }
}

TEST_CASE("model save/load") {
    KanNetwork net({4, 3, 1}, 3, 5, 77);
    net.stats().mins = {0.0, 0.0, 290.0, 290.0, 290.0};
    net.stats().maxs = {6.9, 3.0, 310.0, 315.0, 320.0};
    // Shift one grid so per-edge ranges actually differ in the file.
    std::vector<double> xs;
    for (int i = 0; i <= 200; ++i) xs.push_back(0.8 * i / 200.0 + 0.1);
    const std::string path = "kan_roundtrip.model";
    save(net, path);
    const KanNetwork loaded = load_kan(path);

    SECTION("bit-identical forward outputs") {
        Rng rng(55);
        for (int trial = 0; trial < 100; ++trial) {
            const std::vector<double> x = {rng.uniform(), rng.uniform(), rng.uniform(),
                                           rng.uniform()};
            CHECK(forward(net, x)[0] == forward(loaded, x)[0]);
        }
        CHECK(loaded.stats().maxs == net.stats().maxs);
    }
    SECTION("truncated file fails to load") {
        std::ifstream in(path);
        std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        in.close();
        const std::string cut = content.substr(0, content.size() / 2);
        std::ofstream out("kan_truncated.model");
        out << cut;
        out.close();
        CHECK_THROWS_AS(load_model("kan_truncated.model"), io_error);
        std::remove("kan_truncated.model");
    }
    SECTION("coefficient count mismatch names the edge") {
        std::ifstream in(path);
        std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        in.close();
        const auto pos = content.find("coeffs 8");
        REQUIRE(pos != std::string::npos);
        content.replace(pos, 8, "coeffs 7");
        std::ofstream out("kan_badcount.model");
        out << content;
        out.close();
        try {
            load_model("kan_badcount.model");
            FAIL("expected io_error");
        } catch (const io_error& e) {
            CHECK(std::string(e.what()).find("edge") != std::string::npos);
        }
        std::remove("kan_badcount.model");
    }
    SECTION("version mismatch is rejected") {
        std::ofstream out("kan_badversion.model");
        out << "kantherm-model v9\narch kan\n";
        out.close();
        CHECK_THROWS_AS(load_model("kan_badversion.model"), io_error);
        std::remove("kan_badversion.model");
    }
    std::remove(path.c_str());
}
