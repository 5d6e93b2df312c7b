// Sliding lookback windows for the recurrent baselines. Windows never cross
// scenario boundaries; a scenario shorter than the lookback is skipped and
// counted.
#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "kantherm/dataset.hpp"

namespace kantherm {

struct SequenceData {
    std::vector<double> features; // rows x 4, normalized
    std::vector<double> targets;  // rows, normalized
    std::size_t rows = 0;
};

struct WindowSet {
    std::size_t lookback = 0;
    std::vector<SequenceData> sequences;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> windows; // (sequence, end row)
    int skipped_scenarios = 0;

    [[nodiscard]] std::size_t count() const { return windows.size(); }

    /// Pointer to the first feature row of window w (lookback x 4 values).
    [[nodiscard]] const double* window_features(std::size_t w) const {
        const auto& [seq, end] = windows[w];
        return sequences[seq].features.data() + (end + 1 - lookback) * kFeatureCount;
    }

    [[nodiscard]] double window_target(std::size_t w) const {
        const auto& [seq, end] = windows[w];
        return sequences[seq].targets[end];
    }
};

/// Windows of `lookback` consecutive normalized feature rows within one
/// scenario; the target is T1 at the window's last step.
inline WindowSet window(const Dataset& ds, Split split, std::size_t lookback) {
    if (lookback < 1) throw std::invalid_argument("window: lookback must be >= 1");
    if (ds.stats.channels() != kFeatureCount + 1)
        throw shape_error("window: dataset has no fitted normalization stats");
    WindowSet ws;
    ws.lookback = lookback;
    for (const auto& s : ds.scenarios) {
        if (s.split != split) continue;
        if (s.rows.size() < lookback) {
            ++ws.skipped_scenarios;
            continue;
        }
        SequenceData seq;
        seq.rows = s.rows.size();
        seq.features.reserve(seq.rows * kFeatureCount);
        seq.targets.reserve(seq.rows);
        for (const auto& r : s.rows) {
            for (std::size_t c = 0; c < kFeatureCount; ++c)
                seq.features.push_back(ds.stats.apply(c, r.features[c]));
            seq.targets.push_back(ds.stats.apply(kFeatureCount, r.target));
        }
        const auto seq_idx = static_cast<std::uint32_t>(ws.sequences.size());
        ws.sequences.push_back(std::move(seq));
        for (std::size_t end = lookback - 1; end < s.rows.size(); ++end)
            ws.windows.emplace_back(seq_idx, static_cast<std::uint32_t>(end));
    }
    return ws;
}

} // namespace kantherm
