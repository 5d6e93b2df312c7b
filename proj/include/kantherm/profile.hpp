// Applied-current profiles and the scenario descriptions fed to the
// simulator. A 1C rate equals 2.3 A for the default cell; positive current
// discharges the battery.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "kantherm/csv.hpp"
#include "kantherm/errors.hpp"
#include "kantherm/rng.hpp"

namespace kantherm {

inline constexpr double kAmpsPerC = 2.3;

enum class ProfileKind { ConstantCurrent, FileLoaded, SyntheticDynamic };

inline std::string to_string(ProfileKind k) {
    switch (k) {
        case ProfileKind::ConstantCurrent: return "cc";
        case ProfileKind::FileLoaded: return "file";
        case ProfileKind::SyntheticDynamic: return "dynamic";
    }
    return "?";
}

struct CurrentProfile {
    std::string name;
    ProfileKind kind = ProfileKind::ConstantCurrent;
    std::vector<std::pair<double, double>> samples; // (time [s], current [A])

    /// Current at time t: constant for CC, otherwise linear interpolation
    /// between samples, clamped at the ends.
    [[nodiscard]] double current_at(double t) const {
        if (samples.empty()) throw config_error("profile '" + name + "' has no samples");
        if (kind == ProfileKind::ConstantCurrent || samples.size() == 1)
            return samples.front().second;
        if (t <= samples.front().first) return samples.front().second;
        if (t >= samples.back().first) return samples.back().second;
        std::size_t hi = 1;
        while (samples[hi].first < t) ++hi;
        const auto& [t0, i0] = samples[hi - 1];
        const auto& [t1, i1] = samples[hi];
        const double w = (t - t0) / (t1 - t0);
        return i0 + w * (i1 - i0);
    }

    [[nodiscard]] double peak_abs_current() const {
        double peak = 0.0;
        for (const auto& [t, i] : samples) peak = std::max(peak, std::fabs(i));
        return peak;
    }

    /// Uniformly rescale currents so the peak magnitude equals the target.
    void scale_to_peak(double target_amps) {
        const double peak = peak_abs_current();
        if (peak <= 0.0) return;
        const double f = target_amps / peak;
        for (auto& [t, i] : samples) i *= f;
    }

    void validate() const {
        if (samples.empty()) throw config_error("profile '" + name + "' has no samples");
        double prev = -1.0;
        for (const auto& [t, i] : samples) {
            if (!(t > prev)) throw config_error("profile '" + name + "': times must increase");
            if (!std::isfinite(i)) throw config_error("profile '" + name + "': non-finite current");
            prev = t;
        }
        if (samples.front().first != 0.0)
            throw config_error("profile '" + name + "': must start at t = 0");
    }
};

/// Constant-current profile at the given C-rate (positive = discharge).
inline CurrentProfile cc_profile(double c_rate, const std::string& name = {}) {
    CurrentProfile p;
    p.kind = ProfileKind::ConstantCurrent;
    p.name = name.empty() ? "cc_" + std::to_string(c_rate) + "c" : name;
    p.samples = {{0.0, c_rate * kAmpsPerC}};
    return p;
}

/// Seeded surrogate drive cycle: a piecewise-constant pulse train (segment
/// lengths 20-90 s, levels in [-1.5C, 2.5C]) with zero-mean Gaussian dither
/// per sample, clamped to |I| <= 3C.
inline CurrentProfile dynamic_profile(std::uint64_t seed, double duration, double dt,
                                      const std::string& name = {}) {
    if (duration <= 0.0 || dt <= 0.0) throw config_error("dynamic profile needs duration, dt > 0");
    CurrentProfile p;
    p.kind = ProfileKind::SyntheticDynamic;
    p.name = name.empty() ? "dyn_seed" + std::to_string(seed) : name;
    Rng rng(seed);
    double segment_end = 0.0;
    double level = 0.0;
    const double limit = 3.0 * kAmpsPerC;
    for (double t = 0.0; t <= duration + 0.5 * dt; t += dt) {
        if (t >= segment_end) {
            segment_end = t + rng.uniform(20.0, 90.0);
            level = rng.uniform(-1.5, 2.5) * kAmpsPerC;
        }
        double i = level + rng.gaussian(0.0, 0.05 * kAmpsPerC);
        i = std::clamp(i, -limit, limit);
        p.samples.emplace_back(t, i);
    }
    return p;
}

/// Dispatch on the profile kind named in a roster.
inline CurrentProfile synth_profile(const std::string& kind, double c_rate_or_seed,
                                    double duration, double dt, const std::string& name = {}) {
    if (duration <= 0.0) throw config_error("synth_profile: duration must be > 0");
    if (kind == "cc") return cc_profile(c_rate_or_seed, name);
    if (kind == "dynamic")
        return dynamic_profile(static_cast<std::uint64_t>(c_rate_or_seed), duration, dt, name);
    throw config_error("synth_profile: unknown profile kind '" + kind + "'");
}

/// Two-column CSV (time, current). A non-numeric first line is treated as a
/// header. Parse errors carry the physical line number.
inline CurrentProfile load_profile(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open profile '" + path + "'");
    CurrentProfile p;
    p.kind = ProfileKind::FileLoaded;
    p.name = path;
    std::string line;
    long lineno = 0;
    double prev_t = -1.0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        auto fields = split_csv_line(line);
        if (fields.size() != 2)
            throw parse_error("'" + path + "': expected 2 columns", lineno);
        if (lineno == 1) {
            // Header detection: skip if the first field is not a number.
            try {
                std::size_t pos = 0;
                (void)std::stod(fields[0], &pos);
                if (pos != fields[0].size()) throw std::invalid_argument(fields[0]);
            } catch (const std::exception&) {
                continue;
            }
        }
        const double t = parse_double(fields[0], "time");
        const double i = parse_double(fields[1], "current");
        if (!(t > prev_t))
            throw parse_error("'" + path + "': time column must be strictly increasing", lineno);
        if (!std::isfinite(i))
            throw parse_error("'" + path + "': non-finite current", lineno);
        p.samples.emplace_back(t, i);
        prev_t = t;
    }
    if (p.samples.empty()) throw parse_error("'" + path + "': no samples");
    return p;
}

inline void save_profile(const CurrentProfile& p, const std::string& path) {
    CsvWriter w(path);
    w.header({"t", "I"});
    for (const auto& [t, i] : p.samples) w.row(t, i);
}

/// One simulated charging/discharging scenario.
struct ScenarioSpec {
    std::string name;
    CurrentProfile profile;
    double initial_soc = 0.5;
    double initial_temp = 298.15;                         // K, applied to T1, T2, Tinf
    std::vector<std::pair<double, double>> cooling_schedule; // (time [s], Qc [W]), step-held
    double duration = 900.0; // s
    double dt = 1.0;         // s
    std::uint64_t noise_seed = 0;
    bool pin_test = false; // roster marks the held-out test scenarios

    [[nodiscard]] double cooling_at(double t) const {
        double q = 0.0;
        for (const auto& [ts, qc] : cooling_schedule) {
            if (ts > t) break;
            q = qc;
        }
        return q;
    }

    void validate() const {
        if (duration <= 0.0) throw config_error("scenario '" + name + "': duration must be > 0");
        if (dt <= 0.0) throw config_error("scenario '" + name + "': dt must be > 0");
        if (initial_soc < 0.0 || initial_soc > 1.0)
            throw config_error("scenario '" + name + "': initial_soc outside [0,1]");
        profile.validate();
    }
};

} // namespace kantherm
