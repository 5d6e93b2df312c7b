// Min-max normalization fitted on the training split and stored alongside
// every trained model so predictions can be mapped back to Kelvin.
#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "kantherm/errors.hpp"

namespace kantherm {

/// Per-channel (min, max). Channel layout throughout the project:
/// the four features (I, Qc, Tinf, T2) followed by the target (T1).
struct NormalizationStats {
    std::vector<double> mins;
    std::vector<double> maxs;

    [[nodiscard]] std::size_t channels() const { return mins.size(); }
    [[nodiscard]] bool empty() const { return mins.empty(); }

    /// x -> (x - min) / (max - min); a degenerate channel maps to 0.5.
    [[nodiscard]] double apply(std::size_t channel, double x) const {
        check(channel);
        const double range = maxs[channel] - mins[channel];
        if (range == 0.0) return 0.5;
        return (x - mins[channel]) / range;
    }

    /// Exact inverse of apply; 0.5 on a degenerate channel inverts to min.
    [[nodiscard]] double invert(std::size_t channel, double u) const {
        check(channel);
        const double range = maxs[channel] - mins[channel];
        if (range == 0.0) return mins[channel];
        return mins[channel] + u * range;
    }

    void apply_row(const double* in, double* out, std::size_t n) const {
        if (n > channels()) throw shape_error("normalization: row wider than fitted stats");
        for (std::size_t c = 0; c < n; ++c) out[c] = apply(c, in[c]);
    }

private:
    void check(std::size_t channel) const {
        if (channel >= channels())
            throw shape_error("normalization: channel " + std::to_string(channel) +
                              " out of range (fitted " + std::to_string(channels()) + ")");
    }
};

/// Fit per-channel extrema over rows laid out row-major (count x channels).
inline NormalizationStats fit_normalization(const std::vector<double>& rows,
                                            std::size_t channels) {
    if (channels == 0 || rows.empty() || rows.size() % channels != 0)
        throw shape_error("fit_normalization: rows not a multiple of channel count");
    const std::size_t n = rows.size() / channels;
    NormalizationStats stats;
    stats.mins.assign(channels, std::numeric_limits<double>::infinity());
    stats.maxs.assign(channels, -std::numeric_limits<double>::infinity());
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < channels; ++c) {
            const double v = rows[r * channels + c];
            if (v < stats.mins[c]) stats.mins[c] = v;
            if (v > stats.maxs[c]) stats.maxs[c] = v;
        }
    }
    return stats;
}

} // namespace kantherm
