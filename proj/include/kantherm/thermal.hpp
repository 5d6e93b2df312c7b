// Lumped electro-thermal model of a cylindrical cell with surface cooling.
//
// Three thermal nodes (core T1, surface T2, coolant Tinf) exchange heat
// through R1 (core-surface) and R2 (surface-coolant); the cooling system
// extracts Qc from the coolant node. Ohmic and entropic heating act on the
// core:
//
//   Qdot = I^2 Rs - I T1 E
//
// (the sign-consistent substitution of the terminal-voltage relation into
// the heat-generation equation: ohmic losses always heat the cell, the
// entropic term changes sign with the current). SOC integrates -I/Qb and the
// open-circuit voltage is a piecewise-linear table over SOC.
#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "kantherm/errors.hpp"
#include "kantherm/profile.hpp"

namespace kantherm {

struct BatteryParams {
    double r1 = 1.61;    // K/W, core <-> surface
    double r2 = 3.14;    // K/W, surface <-> coolant
    double c1 = 59.50;   // J/K, core
    double c2 = 4.40;    // J/K, surface
    double c_inf = 10.0; // J/K, cooling system
    double entropic_coeff = 1e-4; // W/K
    double rs = 0.01;    // ohm, series resistance
    double qb = 8280.0;  // A*s (2.3 Ah cell)
    std::vector<std::pair<double, double>> ocv_table = {
        {0.0, 3.00}, {0.1, 3.20}, {0.9, 3.35}, {1.0, 3.45}}; // (SOC, V)

    void validate() const {
        auto positive = [](double v, const char* what) {
            if (!(v > 0.0) || !std::isfinite(v))
                throw config_error(std::string("battery params: ") + what +
                                   " must be strictly positive");
        };
        positive(r1, "r1");
        positive(r2, "r2");
        positive(c1, "c1");
        positive(c2, "c2");
        positive(c_inf, "c_inf");
        positive(rs, "rs");
        positive(qb, "qb");
        if (!std::isfinite(entropic_coeff))
            throw config_error("battery params: entropic coefficient must be finite");
        if (ocv_table.size() < 2) throw config_error("ocv table needs >= 2 knots");
        if (ocv_table.front().first != 0.0 || ocv_table.back().first != 1.0)
            throw config_error("ocv table must span SOC [0,1]");
        for (std::size_t i = 1; i < ocv_table.size(); ++i) {
            if (!(ocv_table[i].first > ocv_table[i - 1].first))
                throw config_error("ocv table SOC values must be strictly increasing");
            if (ocv_table[i].second < ocv_table[i - 1].second)
                throw config_error("ocv table voltages must be non-decreasing");
        }
    }
};

struct ThermalState {
    double t1 = 298.15;   // K, core
    double t2 = 298.15;   // K, surface
    double t_inf = 298.15; // K, coolant
    double soc = 0.5;
};

struct DriveInputs {
    double current = 0.0;       // A, positive = discharge
    double cooling_power = 0.0; // W
};

struct ThermalRates {
    double t1 = 0.0, t2 = 0.0, t_inf = 0.0; // K/s
    double soc = 0.0;                        // 1/s
};

/// Open-circuit voltage: piecewise-linear interpolation of the table.
inline double ocv(double soc, const BatteryParams& p) {
    if (!(soc >= 0.0 && soc <= 1.0))
        throw std::domain_error("ocv: soc " + std::to_string(soc) + " outside [0,1]");
    const auto& t = p.ocv_table;
    if (soc <= t.front().first) return t.front().second;
    for (std::size_t i = 1; i < t.size(); ++i) {
        if (soc <= t[i].first) {
            const double w = (soc - t[i - 1].first) / (t[i].first - t[i - 1].first);
            return t[i - 1].second + w * (t[i].second - t[i - 1].second);
        }
    }
    return t.back().second;
}

inline double terminal_voltage(double soc, double current, const BatteryParams& p) {
    return ocv(soc, p) - current * p.rs;
}

/// Qdot = I^2 Rs - I T1 E.
inline double heat_generation(double current, double t1, const BatteryParams& p) {
    if (!std::isfinite(current) || !std::isfinite(t1))
        throw std::domain_error("heat_generation: non-finite input");
    if (!(t1 > 0.0)) throw std::domain_error("heat_generation: t1 must be positive");
    return current * current * p.rs - current * t1 * p.entropic_coeff;
}

inline ThermalRates state_derivative(const ThermalState& s, const DriveInputs& u,
                                     const BatteryParams& p) {
    const double qdot = heat_generation(u.current, s.t1, p);
    ThermalRates d;
    d.t1 = -(s.t1 - s.t2) / (p.r1 * p.c1) + qdot / p.c1;
    d.t2 = -(s.t2 - s.t1) / (p.r1 * p.c2) - (s.t2 - s.t_inf) / (p.r2 * p.c2);
    d.t_inf = -(s.t_inf - s.t2) / (p.r2 * p.c_inf) - u.cooling_power / p.c_inf;
    d.soc = -u.current / p.qb;
    return d;
}

/// Classical fourth-order Runge-Kutta advance by h with the drive inputs held
/// constant over the step (zero-order hold). `t` only labels a failure.
inline ThermalState rk4_step(const ThermalState& s, const DriveInputs& u, const BatteryParams& p,
                             double h, double t = 0.0) {
    if (!(h > 0.0)) throw std::domain_error("rk4_step: step must be > 0");
    auto advance = [&](const ThermalRates& d, double dt) {
        ThermalState n = s;
        n.t1 += dt * d.t1;
        n.t2 += dt * d.t2;
        n.t_inf += dt * d.t_inf;
        n.soc += dt * d.soc;
        return n;
    };
    const ThermalRates k1 = state_derivative(s, u, p);
    const ThermalRates k2 = state_derivative(advance(k1, 0.5 * h), u, p);
    const ThermalRates k3 = state_derivative(advance(k2, 0.5 * h), u, p);
    const ThermalRates k4 = state_derivative(advance(k3, h), u, p);
    ThermalState out = s;
    const double w = h / 6.0;
    out.t1 += w * (k1.t1 + 2.0 * k2.t1 + 2.0 * k3.t1 + k4.t1);
    out.t2 += w * (k1.t2 + 2.0 * k2.t2 + 2.0 * k3.t2 + k4.t2);
    out.t_inf += w * (k1.t_inf + 2.0 * k2.t_inf + 2.0 * k3.t_inf + k4.t_inf);
    out.soc += w * (k1.soc + 2.0 * k2.soc + 2.0 * k3.soc + k4.soc);
    if (!std::isfinite(out.t1) || !std::isfinite(out.t2) || !std::isfinite(out.t_inf) ||
        !std::isfinite(out.soc))
        throw integration_error("rk4_step: non-finite state", t + h);
    return out;
}

struct TrajectorySample {
    double t = 0.0;
    double current = 0.0; // A
    double cooling = 0.0; // W
    double t1 = 0.0, t2 = 0.0, t_inf = 0.0; // K
    double soc = 0.0;
    double vt = 0.0;   // V
    double qdot = 0.0; // W
};

struct Trajectory {
    std::string scenario_name;
    double dt = 1.0;
    std::vector<TrajectorySample> samples;
    bool soc_clamped = false; // SOC crossed a bound and was clamped
    bool truncated = false;   // simulation stopped at SOC exhaustion
};

/// Sanity window for simulated temperatures; values outside mean the
/// integration has left the model's validity range.
inline constexpr double kMinTempK = 200.0;
inline constexpr double kMaxTempK = 450.0;

inline Trajectory simulate(const ScenarioSpec& scenario, const BatteryParams& params) {
    scenario.validate();
    params.validate();

    Trajectory traj;
    traj.scenario_name = scenario.name;
    traj.dt = scenario.dt;
    const std::size_t steps = static_cast<std::size_t>(std::llround(scenario.duration / scenario.dt));

    ThermalState s;
    s.t1 = s.t2 = s.t_inf = scenario.initial_temp;
    s.soc = scenario.initial_soc;

    auto record = [&](double t, const DriveInputs& u) {
        TrajectorySample row;
        row.t = t;
        row.current = u.current;
        row.cooling = u.cooling_power;
        row.t1 = s.t1;
        row.t2 = s.t2;
        row.t_inf = s.t_inf;
        row.soc = s.soc;
        row.vt = terminal_voltage(s.soc, u.current, params);
        row.qdot = heat_generation(u.current, s.t1, params);
        traj.samples.push_back(row);
    };

    for (std::size_t step = 0; step <= steps; ++step) {
        const double t = static_cast<double>(step) * scenario.dt;
        DriveInputs u{scenario.profile.current_at(t), scenario.cooling_at(t)};
        if (!std::isfinite(u.current) || !std::isfinite(u.cooling_power))
            throw integration_error("simulate: non-finite drive input", t);
        record(t, u);
        if (s.t1 < kMinTempK || s.t1 > kMaxTempK || s.t2 < kMinTempK || s.t2 > kMaxTempK ||
            s.t_inf < kMinTempK || s.t_inf > kMaxTempK)
            throw integration_error("simulate: temperature outside [200,450] K", t);
        if (traj.truncated || step == steps) break;
        s = rk4_step(s, u, params, scenario.dt, t);
        if (s.soc < 0.0) {
            s.soc = 0.0;
            traj.soc_clamped = true;
            traj.truncated = true;
        } else if (s.soc > 1.0) {
            s.soc = 1.0;
            traj.soc_clamped = true;
            traj.truncated = true;
        }
    }
    return traj;
}

/// C1*T1 + C2*T2 + Cinf*Tinf; conserved exactly when I = 0 and Qc = 0.
inline double thermal_energy(const ThermalState& s, const BatteryParams& p) {
    return p.c1 * s.t1 + p.c2 * s.t2 + p.c_inf * s.t_inf;
}

inline void save_trajectory(const Trajectory& traj, const std::string& path) {
    CsvWriter w(path);
    w.header({"t", "I", "Qc", "T1", "T2", "Tinf", "soc", "Vt", "Qdot"});
    for (const auto& r : traj.samples)
        w.row(r.t, r.current, r.cooling, r.t1, r.t2, r.t_inf, r.soc, r.vt, r.qdot);
}

} // namespace kantherm
