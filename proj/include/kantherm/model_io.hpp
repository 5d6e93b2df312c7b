// Versioned text container for trained models.
//
// Layout (whitespace-separated tokens, doubles printed with 17 significant
// digits so they round-trip exactly):
//
//   kantherm-model v1
//   arch {kan|mlp|rnn|lstm}
//   stats <channels> {<min> <max>}...
//   widths <n> <w1> ... <wn>
//   [lookback <L>]                      (rnn, lstm)
//   kan:   order <k> intervals <G>
//          edge <layer> <out> <in> grid <lo> <hi> coeffs <count> <c...>
//   other: params <count> <p...>        (packing order = get_params())
//   end
#pragma once

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "kantherm/errors.hpp"
#include "kantherm/kan.hpp"
#include "kantherm/lstm.hpp"
#include "kantherm/mlp.hpp"
#include "kantherm/rnn.hpp"

namespace kantherm {

using AnyModel = std::variant<KanNetwork, MlpNetwork, RnnNetwork, LstmNetwork>;

inline std::string arch_tag(const AnyModel& m) {
    switch (m.index()) {
        case 0: return "kan";
        case 1: return "mlp";
        case 2: return "rnn";
        case 3: return "lstm";
    }
    return "?";
}

inline std::size_t model_param_count(const AnyModel& m) {
    return std::visit([](const auto& net) { return net.param_count(); }, m);
}

inline const NormalizationStats& model_stats(const AnyModel& m) {
    return std::visit([](const auto& net) -> const NormalizationStats& { return net.stats(); }, m);
}

inline void set_model_stats(AnyModel& m, const NormalizationStats& stats) {
    std::visit([&](auto& net) { net.stats() = stats; }, m);
}

namespace detail {

class TokenReader {
public:
    explicit TokenReader(std::istream& in) : in_(in) {}

    std::string token(const std::string& field) {
        std::string t;
        if (!(in_ >> t)) throw io_error("model file truncated while reading " + field);
        return t;
    }

    void expect(const std::string& literal) {
        const std::string t = token("'" + literal + "'");
        if (t != literal)
            throw io_error("model file: expected '" + literal + "', found '" + t + "'");
    }

    double number(const std::string& field) {
        const std::string t = token(field);
        char* end = nullptr;
        const double v = std::strtod(t.c_str(), &end);
        if (end == nullptr || *end != '\0')
            throw io_error("model file: bad number '" + t + "' for " + field);
        return v;
    }

    long integer(const std::string& field) {
        const double v = number(field);
        const long l = static_cast<long>(v);
        if (static_cast<double>(l) != v)
            throw io_error("model file: expected integer for " + field);
        return l;
    }

private:
    std::istream& in_;
};

inline void write_stats(std::ostream& out, const NormalizationStats& stats) {
    out << "stats " << stats.channels();
    for (std::size_t c = 0; c < stats.channels(); ++c)
        out << ' ' << stats.mins[c] << ' ' << stats.maxs[c];
    out << '\n';
}

inline NormalizationStats read_stats(TokenReader& r) {
    r.expect("stats");
    const long n = r.integer("stats channel count");
    if (n < 0 || n > 1024) throw io_error("model file: implausible stats channel count");
    NormalizationStats stats;
    for (long c = 0; c < n; ++c) {
        stats.mins.push_back(r.number("stats min"));
        stats.maxs.push_back(r.number("stats max"));
    }
    return stats;
}

inline std::vector<int> read_widths(TokenReader& r) {
    r.expect("widths");
    const long n = r.integer("widths count");
    if (n < 2 || n > 64) throw io_error("model file: implausible widths count");
    std::vector<int> widths;
    for (long i = 0; i < n; ++i) {
        const long w = r.integer("width");
        if (w < 1 || w > 4096) throw io_error("model file: implausible layer width");
        widths.push_back(static_cast<int>(w));
    }
    return widths;
}

template <typename Net>
inline void write_flat_params(std::ostream& out, const Net& net) {
    std::vector<double> params;
    net.get_params(params);
    out << "params " << params.size();
    for (double p : params) out << ' ' << p;
    out << '\n';
}

template <typename Net>
inline void read_flat_params(TokenReader& r, Net& net) {
    r.expect("params");
    const long n = r.integer("params count");
    if (n != static_cast<long>(net.param_count()))
        throw io_error("model file: params count " + std::to_string(n) + " does not match " +
                       std::to_string(net.param_count()) + " for the declared architecture");
    std::vector<double> params(static_cast<std::size_t>(n));
    for (auto& p : params) p = r.number("param");
    net.set_params(params);
}

} // namespace detail

inline void save_model(const AnyModel& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot open '" + path + "' for writing");
    out << std::setprecision(17);
    out << "kantherm-model v1\n";
    out << "arch " << arch_tag(m) << '\n';
    detail::write_stats(out, model_stats(m));

    if (const auto* kan = std::get_if<KanNetwork>(&m)) {
        out << "widths " << kan->widths().size();
        for (int w : kan->widths()) out << ' ' << w;
        out << '\n';
        const SplineGrid& g0 = kan->layer(0).edge(0, 0).grid;
        out << "order " << g0.order() << '\n';
        out << "intervals " << g0.intervals() << '\n';
        for (std::size_t l = 0; l < kan->layer_count(); ++l) {
            const KanLayer& layer = kan->layer(l);
            for (int o = 0; o < layer.out_width(); ++o)
                for (int i = 0; i < layer.in_width(); ++i) {
                    const KanEdge& e = layer.edge(o, i);
                    out << "edge " << l << ' ' << o << ' ' << i << " grid " << e.grid.lo() << ' '
                        << e.grid.hi() << " coeffs " << e.coeffs.size();
                    for (double c : e.coeffs) out << ' ' << c;
                    out << '\n';
                }
        }
    } else if (const auto* mlp = std::get_if<MlpNetwork>(&m)) {
        out << "widths " << mlp->widths().size();
        for (int w : mlp->widths()) out << ' ' << w;
        out << '\n';
        detail::write_flat_params(out, *mlp);
    } else if (const auto* rnn = std::get_if<RnnNetwork>(&m)) {
        out << "widths " << rnn->widths().size();
        for (int w : rnn->widths()) out << ' ' << w;
        out << '\n';
        out << "lookback " << rnn->lookback() << '\n';
        detail::write_flat_params(out, *rnn);
    } else if (const auto* lstm = std::get_if<LstmNetwork>(&m)) {
        out << "widths " << lstm->widths().size();
        for (int w : lstm->widths()) out << ' ' << w;
        out << '\n';
        out << "lookback " << lstm->lookback() << '\n';
        detail::write_flat_params(out, *lstm);
    }
    out << "end\n";
    if (!out) throw io_error("write failed for '" + path + "'");
}

inline AnyModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open model file '" + path + "'");
    detail::TokenReader r(in);
    r.expect("kantherm-model");
    const std::string version = r.token("version");
    if (version != "v1")
        throw io_error("model file: unsupported version '" + version + "' (expected v1)");
    r.expect("arch");
    const std::string arch = r.token("arch");
    NormalizationStats stats = detail::read_stats(r);

    if (arch == "kan") {
        const std::vector<int> widths = detail::read_widths(r);
        r.expect("order");
        const long order = r.integer("order");
        r.expect("intervals");
        const long intervals = r.integer("intervals");
        if (order < 1 || order > SplineGrid::kMaxOrder || intervals < 1 || intervals > 4096)
            throw io_error("model file: implausible spline order/intervals");
        KanNetwork net(widths, static_cast<int>(order), static_cast<int>(intervals), 0);
        for (std::size_t l = 0; l < net.layer_count(); ++l) {
            KanLayer& layer = net.layer(l);
            for (int o = 0; o < layer.out_width(); ++o)
                for (int i = 0; i < layer.in_width(); ++i) {
                    const std::string where = "edge " + std::to_string(l) + "/" +
                                              std::to_string(o) + "/" + std::to_string(i);
                    r.expect("edge");
                    if (r.integer("edge layer") != static_cast<long>(l) ||
                        r.integer("edge out") != o || r.integer("edge in") != i)
                        throw io_error("model file: " + where + " out of order");
                    r.expect("grid");
                    const double lo = r.number(where + " grid lo");
                    const double hi = r.number(where + " grid hi");
                    r.expect("coeffs");
                    const long n = r.integer(where + " coeff count");
                    KanEdge& e = layer.edge(o, i);
                    e.grid = SplineGrid(static_cast<int>(order), static_cast<int>(intervals), lo, hi);
                    if (n != static_cast<long>(e.grid.basis_count()))
                        throw io_error("model file: " + where + " has " + std::to_string(n) +
                                       " coefficients, expected " +
                                       std::to_string(e.grid.basis_count()));
                    e.coeffs.resize(static_cast<std::size_t>(n));
                    for (auto& c : e.coeffs) c = r.number(where + " coefficient");
                }
        }
        net.stats() = stats;
        r.expect("end");
        return net;
    }
    if (arch == "mlp") {
        MlpNetwork net(detail::read_widths(r), 0);
        detail::read_flat_params(r, net);
        net.stats() = stats;
        r.expect("end");
        return net;
    }
    if (arch == "rnn") {
        const std::vector<int> widths = detail::read_widths(r);
        r.expect("lookback");
        const long lookback = r.integer("lookback");
        if (lookback < 1 || lookback > 100000) throw io_error("model file: implausible lookback");
        RnnNetwork net(widths, static_cast<std::size_t>(lookback), 0);
        detail::read_flat_params(r, net);
        net.stats() = stats;
        r.expect("end");
        return net;
    }
    if (arch == "lstm") {
        const std::vector<int> widths = detail::read_widths(r);
        r.expect("lookback");
        const long lookback = r.integer("lookback");
        if (lookback < 1 || lookback > 100000) throw io_error("model file: implausible lookback");
        LstmNetwork net(widths, static_cast<std::size_t>(lookback), 0);
        detail::read_flat_params(r, net);
        net.stats() = stats;
        r.expect("end");
        return net;
    }
    throw io_error("model file: unknown architecture '" + arch + "'");
}

/// Spec-shaped helpers for the KAN module.
inline void save(const KanNetwork& net, const std::string& path) { save_model(AnyModel(net), path); }

inline KanNetwork load_kan(const std::string& path) {
    AnyModel m = load_model(path);
    if (auto* kan = std::get_if<KanNetwork>(&m)) return std::move(*kan);
    throw io_error("'" + path + "' does not hold a kan model");
}

} // namespace kantherm
