// Training corpus construction: simulate scenarios, add sensor noise, split
// by whole scenarios, fit min-max normalization on the training split.
//
// Feature order is fixed everywhere as (I, Qc, Tinf, T2); the target is T1.
// The clean simulated T1 is kept next to the noisy training target so
// evaluation can report errors against the ground truth.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <string>
#include <vector>

#include "kantherm/config.hpp"
#include "kantherm/csv.hpp"
#include "kantherm/errors.hpp"
#include "kantherm/normalization.hpp"
#include "kantherm/profile.hpp"
#include "kantherm/rng.hpp"
#include "kantherm/thermal.hpp"

namespace kantherm {

enum class Split { Train, Val, Test };

inline std::string to_string(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Val: return "val";
        case Split::Test: return "test";
    }
    return "?";
}

inline Split split_from_string(const std::string& s) {
    if (s == "train") return Split::Train;
    if (s == "val") return Split::Val;
    if (s == "test") return Split::Test;
    throw parse_error("unknown split tag '" + s + "'");
}

inline constexpr std::size_t kFeatureCount = 4;

struct DataRow {
    double t = 0.0;
    std::array<double, kFeatureCount> features{}; // I, Qc, Tinf, T2 (noisy)
    double target = 0.0;       // noisy T1, the training target
    double target_clean = 0.0; // simulated T1
};

struct ScenarioData {
    std::string name;
    ProfileKind kind = ProfileKind::ConstantCurrent;
    double c_rate = 0.0; // |I|/2.3 for CC profiles, 0 otherwise
    bool pin_test = false;
    Split split = Split::Train;
    std::vector<DataRow> rows;
};

struct SplitRatios {
    double train = 0.74;
    double val = 0.16;
    double test = 0.10;

    void validate() const {
        if (train < 0.0 || val < 0.0 || test < 0.0)
            throw config_error("split ratios must be non-negative");
        const double sum = train + val + test;
        if (std::fabs(sum - 1.0) > 1e-9) throw config_error("split ratios must sum to 1");
    }
};

struct Dataset {
    std::vector<ScenarioData> scenarios;
    NormalizationStats stats; // 5 channels: features then target, train-split extrema
    double noise_fraction = 0.0;

    [[nodiscard]] std::size_t row_count() const {
        std::size_t n = 0;
        for (const auto& s : scenarios) n += s.rows.size();
        return n;
    }

    [[nodiscard]] std::size_t row_count(Split split) const {
        std::size_t n = 0;
        for (const auto& s : scenarios)
            if (s.split == split) n += s.rows.size();
        return n;
    }
};

// ---------------------------------------------------------------------------
// Sensor noise.
// ---------------------------------------------------------------------------

/// Perturb the measured channels (I, Qc, Tinf, T2, T1) with i.i.d. Gaussian
/// noise of sigma = fraction * (channel max - channel min over this
/// trajectory). Deterministic under the seed; a constant channel stays exact.
inline Trajectory add_noise(const Trajectory& traj, double fraction, std::uint64_t seed) {
    if (!(fraction >= 0.0 && fraction < 1.0))
        throw std::invalid_argument("add_noise: fraction must be in [0, 1)");
    Trajectory out = traj;
    if (fraction == 0.0 || traj.samples.empty()) return out;
    Rng rng(seed);
    auto perturb = [&](auto member) {
        double lo = traj.samples.front().*member;
        double hi = lo;
        for (const auto& r : traj.samples) {
            lo = std::min(lo, r.*member);
            hi = std::max(hi, r.*member);
        }
        const double sigma = fraction * (hi - lo);
        if (sigma == 0.0) return;
        for (auto& r : out.samples) r.*member += rng.gaussian(0.0, sigma);
    };
    perturb(&TrajectorySample::current);
    perturb(&TrajectorySample::cooling);
    perturb(&TrajectorySample::t_inf);
    perturb(&TrajectorySample::t2);
    perturb(&TrajectorySample::t1);
    return out;
}

/// Rows from a noisy trajectory, keeping the clean target alongside.
inline ScenarioData make_scenario_data(const std::string& name, ProfileKind kind, double c_rate,
                                       bool pin_test, const Trajectory& noisy,
                                       const Trajectory& clean) {
    if (noisy.samples.size() != clean.samples.size())
        throw shape_error("scenario data: noisy/clean sample counts differ");
    ScenarioData sd;
    sd.name = name;
    sd.kind = kind;
    sd.c_rate = c_rate;
    sd.pin_test = pin_test;
    sd.rows.reserve(noisy.samples.size());
    for (std::size_t i = 0; i < noisy.samples.size(); ++i) {
        const auto& n = noisy.samples[i];
        DataRow row;
        row.t = n.t;
        row.features = {n.current, n.cooling, n.t_inf, n.t2};
        row.target = n.t1;
        row.target_clean = clean.samples[i].t1;
        if (!std::isfinite(row.target) || !std::isfinite(row.target_clean))
            throw numeric_error("scenario data: non-finite row in '" + name + "'");
        for (double f : row.features)
            if (!std::isfinite(f)) throw numeric_error("scenario data: non-finite row in '" + name + "'");
        sd.rows.push_back(row);
    }
    return sd;
}

// ---------------------------------------------------------------------------
// Whole-scenario splitting.
// ---------------------------------------------------------------------------

/// Assign every scenario to a split so realized row fractions track the
/// targets. Scenarios never straddle splits. The test split gets one CC-1C
/// and one dynamic scenario when the roster provides them (explicitly pinned
/// or auto-picked); a zero test ratio disables that.
inline void assign_splits(std::vector<ScenarioData>& scenarios, const SplitRatios& ratios) {
    ratios.validate();
    if (scenarios.empty()) throw config_error("split: no scenarios");
    const int active = (ratios.train > 0.0) + (ratios.val > 0.0) + (ratios.test > 0.0);
    if (scenarios.size() < static_cast<std::size_t>(active))
        throw config_error("split: need at least " + std::to_string(active) +
                           " scenarios for the requested ratios");

    std::size_t total = 0;
    for (const auto& s : scenarios) total += s.rows.size();

    std::vector<int> assignment(scenarios.size(), -1);
    double used[3] = {0.0, 0.0, 0.0};
    const double target[3] = {ratios.train * static_cast<double>(total),
                              ratios.val * static_cast<double>(total),
                              ratios.test * static_cast<double>(total)};

    auto pin = [&](std::size_t idx) {
        assignment[idx] = 2;
        used[2] += static_cast<double>(scenarios[idx].rows.size());
    };

    if (ratios.test > 0.0) {
        bool have_cc1 = false;
        bool have_dyn = false;
        for (std::size_t i = 0; i < scenarios.size(); ++i) {
            if (!scenarios[i].pin_test) continue;
            pin(i);
            if (scenarios[i].kind == ProfileKind::ConstantCurrent &&
                std::fabs(scenarios[i].c_rate - 1.0) < 1e-9)
                have_cc1 = true;
            if (scenarios[i].kind != ProfileKind::ConstantCurrent) have_dyn = true;
        }
        auto auto_pin = [&](auto pred) {
            for (std::size_t i = 0; i < scenarios.size(); ++i) {
                if (assignment[i] == -1 && pred(scenarios[i])) {
                    pin(i);
                    return;
                }
            }
        };
        if (!have_cc1)
            auto_pin([](const ScenarioData& s) {
                return s.kind == ProfileKind::ConstantCurrent && std::fabs(s.c_rate - 1.0) < 1e-9;
            });
        if (!have_dyn)
            auto_pin([](const ScenarioData& s) { return s.kind != ProfileKind::ConstantCurrent; });
    }

    for (std::size_t i = 0; i < scenarios.size(); ++i) {
        if (assignment[i] != -1) continue;
        int best = -1;
        double best_deficit = -std::numeric_limits<double>::infinity();
        const double ratio_of[3] = {ratios.train, ratios.val, ratios.test};
        for (int s = 0; s < 3; ++s) {
            if (ratio_of[s] <= 0.0) continue;
            const double deficit = target[s] - used[s];
            if (deficit > best_deficit) {
                best_deficit = deficit;
                best = s;
            }
        }
        assignment[i] = best;
        used[best] += static_cast<double>(scenarios[i].rows.size());
    }

    for (std::size_t i = 0; i < scenarios.size(); ++i)
        scenarios[i].split = static_cast<Split>(assignment[i]);
}

/// Fit 5-channel min-max stats (features + target) on the training split.
inline NormalizationStats fit_dataset_normalization(const Dataset& ds) {
    std::vector<double> rows;
    for (const auto& s : ds.scenarios) {
        if (s.split != Split::Train) continue;
        for (const auto& r : s.rows) {
            rows.insert(rows.end(), r.features.begin(), r.features.end());
            rows.push_back(r.target);
        }
    }
    if (rows.empty()) throw config_error("normalization: training split is empty");
    return fit_normalization(rows, kFeatureCount + 1);
}

/// Simulate a roster, add noise, split, and fit normalization.
inline Dataset build_dataset(const std::vector<ScenarioSpec>& roster, const BatteryParams& params,
                             double noise_fraction, const SplitRatios& ratios = {}) {
    if (roster.empty()) throw config_error("build_dataset: empty roster");
    Dataset ds;
    ds.noise_fraction = noise_fraction;
    ds.scenarios.reserve(roster.size());
    for (const auto& spec : roster) {
        const Trajectory clean = simulate(spec, params);
        const Trajectory noisy = add_noise(clean, noise_fraction, spec.noise_seed);
        double c_rate = 0.0;
        if (spec.profile.kind == ProfileKind::ConstantCurrent)
            c_rate = std::fabs(spec.profile.samples.front().second) / kAmpsPerC;
        ds.scenarios.push_back(make_scenario_data(spec.name, spec.profile.kind, c_rate,
                                                  spec.pin_test, noisy, clean));
    }
    assign_splits(ds.scenarios, ratios);
    ds.stats = fit_dataset_normalization(ds);
    return ds;
}

// ---------------------------------------------------------------------------
// Flattened views for training.
// ---------------------------------------------------------------------------

struct RegressionMatrix {
    std::vector<double> features; // count x 4, normalized
    std::vector<double> targets;  // count, normalized
    std::size_t count = 0;
};

inline RegressionMatrix normalized_matrix(const Dataset& ds, Split split) {
    if (ds.stats.channels() != kFeatureCount + 1)
        throw shape_error("dataset has no fitted normalization stats");
    RegressionMatrix m;
    for (const auto& s : ds.scenarios) {
        if (s.split != split) continue;
        for (const auto& r : s.rows) {
            for (std::size_t c = 0; c < kFeatureCount; ++c)
                m.features.push_back(ds.stats.apply(c, r.features[c]));
            m.targets.push_back(ds.stats.apply(kFeatureCount, r.target));
            ++m.count;
        }
    }
    return m;
}

// ---------------------------------------------------------------------------
// 2-D histogram (data-distribution export).
// ---------------------------------------------------------------------------

struct Histogram2d {
    std::vector<double> edges_a; // bins + 1
    std::vector<double> edges_b;
    std::vector<std::size_t> counts; // bins x bins, row-major over a
};

/// Channel indices 0..3 are the features, 4 is the target (clean channels
/// are not distinguished here; the histogram describes the dataset as
/// trained on).
inline Histogram2d histogram2d(const Dataset& ds, std::size_t channel_a, std::size_t channel_b,
                               std::size_t bins) {
    if (bins < 1) throw std::invalid_argument("histogram2d: bins must be >= 1");
    auto value = [](const DataRow& r, std::size_t c) {
        return c < kFeatureCount ? r.features[c] : r.target;
    };
    if (channel_a > kFeatureCount || channel_b > kFeatureCount)
        throw shape_error("histogram2d: channel out of range");

    Histogram2d h;
    if (ds.row_count() == 0) return h;

    double amin = 0, amax = 0, bmin = 0, bmax = 0;
    bool first = true;
    for (const auto& s : ds.scenarios)
        for (const auto& r : s.rows) {
            const double a = value(r, channel_a);
            const double b = value(r, channel_b);
            if (first) {
                amin = amax = a;
                bmin = bmax = b;
                first = false;
            } else {
                amin = std::min(amin, a);
                amax = std::max(amax, a);
                bmin = std::min(bmin, b);
                bmax = std::max(bmax, b);
            }
        }

    h.edges_a.resize(bins + 1);
    h.edges_b.resize(bins + 1);
    for (std::size_t i = 0; i <= bins; ++i) {
        h.edges_a[i] = amin + (amax - amin) * static_cast<double>(i) / static_cast<double>(bins);
        h.edges_b[i] = bmin + (bmax - bmin) * static_cast<double>(i) / static_cast<double>(bins);
    }
    h.counts.assign(bins * bins, 0);
    auto bin_of = [bins](double x, double lo, double hi) -> std::size_t {
        if (hi <= lo) return 0;
        auto idx = static_cast<long>(std::floor((x - lo) / (hi - lo) * static_cast<double>(bins)));
        if (idx < 0) idx = 0;
        if (idx >= static_cast<long>(bins)) idx = static_cast<long>(bins) - 1;
        return static_cast<std::size_t>(idx);
    };
    for (const auto& s : ds.scenarios)
        for (const auto& r : s.rows) {
            const std::size_t ia = bin_of(value(r, channel_a), amin, amax);
            const std::size_t ib = bin_of(value(r, channel_b), bmin, bmax);
            ++h.counts[ia * bins + ib];
        }
    return h;
}

inline void save_histogram(const Histogram2d& h, const std::string& path,
                           const std::string& label_a, const std::string& label_b) {
    CsvWriter w(path);
    w.header({label_a + "_lo", label_a + "_hi", label_b + "_lo", label_b + "_hi", "count"});
    if (h.edges_a.empty()) return;
    const std::size_t bins = h.edges_a.size() - 1;
    for (std::size_t ia = 0; ia < bins; ++ia)
        for (std::size_t ib = 0; ib < bins; ++ib)
            w.row(h.edges_a[ia], h.edges_a[ia + 1], h.edges_b[ib], h.edges_b[ib + 1],
                  h.counts[ia * bins + ib]);
}

// ---------------------------------------------------------------------------
// Persistence: rows.csv plus a key-value sidecar with splits and stats.
// ---------------------------------------------------------------------------

inline void save_dataset(const Dataset& ds, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    {
        CsvWriter w((fs::path(dir) / "rows.csv").string());
        w.header({"scenario", "split", "t", "I", "Qc", "Tinf", "T2", "T1", "T1_clean"});
        for (const auto& s : ds.scenarios)
            for (const auto& r : s.rows)
                w.row(s.name, to_string(s.split), r.t, r.features[0], r.features[1],
                      r.features[2], r.features[3], r.target, r.target_clean);
    }
    std::ofstream meta((fs::path(dir) / "meta.txt").string());
    if (!meta) throw io_error("cannot write dataset metadata in '" + dir + "'");
    meta << std::setprecision(17);
    meta << "[dataset]\n";
    meta << "noise_fraction = " << ds.noise_fraction << "\n";
    meta << "rows_total = " << ds.row_count() << "\n";
    meta << "rows_train = " << ds.row_count(Split::Train) << "\n";
    meta << "rows_val = " << ds.row_count(Split::Val) << "\n";
    meta << "rows_test = " << ds.row_count(Split::Test) << "\n";
    meta << "\n[normalization]\n";
    static const char* channel_names[] = {"I", "Qc", "Tinf", "T2", "T1"};
    for (std::size_t c = 0; c < ds.stats.channels(); ++c) {
        meta << channel_names[c] << "_min = " << ds.stats.mins[c] << "\n";
        meta << channel_names[c] << "_max = " << ds.stats.maxs[c] << "\n";
    }
    for (const auto& s : ds.scenarios) {
        meta << "\n[scenario]\n";
        meta << "name = " << s.name << "\n";
        meta << "kind = " << to_string(s.kind) << "\n";
        meta << "c_rate = " << s.c_rate << "\n";
        meta << "split = " << to_string(s.split) << "\n";
        meta << "rows = " << s.rows.size() << "\n";
    }
}

inline Dataset load_dataset(const std::string& dir) {
    namespace fs = std::filesystem;
    const Config meta = load_config((fs::path(dir) / "meta.txt").string());
    Dataset ds;
    ds.noise_fraction = meta.section("dataset").get_double("noise_fraction");

    const auto& norm = meta.section("normalization");
    static const char* channel_names[] = {"I", "Qc", "Tinf", "T2", "T1"};
    for (const char* name : channel_names) {
        ds.stats.mins.push_back(norm.get_double(std::string(name) + "_min"));
        ds.stats.maxs.push_back(norm.get_double(std::string(name) + "_max"));
    }

    for (const ConfigSection* sec : meta.all("scenario")) {
        ScenarioData sd;
        sd.name = sec->get("name");
        const std::string kind = sec->get("kind");
        sd.kind = kind == "cc"        ? ProfileKind::ConstantCurrent
                  : kind == "dynamic" ? ProfileKind::SyntheticDynamic
                                      : ProfileKind::FileLoaded;
        sd.c_rate = sec->get_double("c_rate");
        sd.split = split_from_string(sec->get("split"));
        ds.scenarios.push_back(std::move(sd));
    }

    const CsvTable t = read_csv((fs::path(dir) / "rows.csv").string());
    const std::size_t ci = t.column("scenario");
    for (const auto& row : t.rows) {
        ScenarioData* target = nullptr;
        for (auto& s : ds.scenarios)
            if (s.name == row[ci]) {
                target = &s;
                break;
            }
        if (target == nullptr) throw parse_error("rows.csv references unknown scenario '" + row[ci] + "'");
        DataRow r;
        r.t = parse_double(row[t.column("t")], "t");
        r.features = {parse_double(row[t.column("I")], "I"),
                      parse_double(row[t.column("Qc")], "Qc"),
                      parse_double(row[t.column("Tinf")], "Tinf"),
                      parse_double(row[t.column("T2")], "T2")};
        r.target = parse_double(row[t.column("T1")], "T1");
        r.target_clean = parse_double(row[t.column("T1_clean")], "T1_clean");
        target->rows.push_back(r);
    }
    return ds;
}

} // namespace kantherm
