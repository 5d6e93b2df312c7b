#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "kantherm/dataset.hpp"
#include "kantherm/window.hpp"

using namespace kantherm;

namespace {

ScenarioSpec quick_scenario(const std::string& name, CurrentProfile profile, double duration,
                            std::uint64_t seed, bool pin = false) {
    ScenarioSpec sc;
    sc.name = name;
    sc.profile = std::move(profile);
    sc.duration = duration;
    sc.dt = 1.0;
    sc.initial_soc = 0.5;
    sc.noise_seed = seed;
    sc.pin_test = pin;
    return sc;
}

std::vector<ScenarioSpec> tiny_roster(int n_scenarios, double duration = 60.0) {
    std::vector<ScenarioSpec> roster;
    for (int i = 0; i < n_scenarios; ++i) {
        const bool dynamic = (i % 2 == 1);
        CurrentProfile prof = dynamic ? dynamic_profile(100 + static_cast<std::uint64_t>(i),
                                                        duration, 1.0)
                                      : cc_profile(1.0 + i % 3);
        roster.push_back(quick_scenario("s" + std::to_string(i), std::move(prof), duration,
                                        static_cast<std::uint64_t>(i) + 1));
    }
    return roster;
}

} // namespace

TEST_CASE("profiles") {
    SECTION("CC rates") {
        const CurrentProfile p1 = synth_profile("cc", 1.0, 100.0, 1.0);
        CHECK(p1.current_at(0.0) == Catch::Approx(2.3));
        CHECK(p1.current_at(57.0) == Catch::Approx(2.3));
        const CurrentProfile p3 = synth_profile("cc", 3.0, 100.0, 1.0);
        CHECK(p3.current_at(12.0) == Catch::Approx(6.9));
    }
    SECTION("dynamic profiles are seeded and bounded") {
        const CurrentProfile a = synth_profile("dynamic", 9, 300.0, 1.0);
        const CurrentProfile b = synth_profile("dynamic", 9, 300.0, 1.0);
        REQUIRE(a.samples.size() == b.samples.size());
        for (std::size_t i = 0; i < a.samples.size(); ++i)
            CHECK(a.samples[i].second == b.samples[i].second);
        for (const auto& [t, cur] : a.samples) CHECK(std::fabs(cur) <= 3.0 * kAmpsPerC + 1e-12);
        const CurrentProfile c = synth_profile("dynamic", 10, 300.0, 1.0);
        bool differs = false;
        for (std::size_t i = 0; i < std::min(a.samples.size(), c.samples.size()); ++i)
            if (a.samples[i].second != c.samples[i].second) differs = true;
        CHECK(differs);
    }
    SECTION("unknown kind") {
        CHECK_THROWS_AS(synth_profile("triangle", 1.0, 10.0, 1.0), config_error);
    }
    SECTION("write/load round trip") {
        const CurrentProfile a = synth_profile("dynamic", 3, 120.0, 1.0);
        const std::string path = "profile_roundtrip.csv";
        save_profile(a, path);
        const CurrentProfile b = load_profile(path);
        REQUIRE(a.samples.size() == b.samples.size());
        for (std::size_t i = 0; i < a.samples.size(); ++i) {
            CHECK(std::fabs(a.samples[i].first - b.samples[i].first) < 1e-12);
            CHECK(std::fabs(a.samples[i].second - b.samples[i].second) < 1e-12);
        }
        std::remove(path.c_str());
    }
    SECTION("two-sample file") {
        const std::string path = "profile_two.csv";
        {
            std::ofstream out(path);
            out << "0,0\n1,2.3\n";
        }
        const CurrentProfile p = load_profile(path);
        REQUIRE(p.samples.size() == 2);
        CHECK(p.current_at(0.5) == Catch::Approx(1.15));
        std::remove(path.c_str());
    }
    SECTION("non-monotonic time names the line") {
        const std::string path = "profile_bad.csv";
        {
            std::ofstream out(path);
            out << "0,0\n1,1\n2,1\n3,1\n4,1\n5,1\n4.5,1\n";
        }
        try {
            load_profile(path);
            FAIL("expected parse_error");
        } catch (const parse_error& e) {
            CHECK(e.line() == 7);
            CHECK(std::string(e.what()).find("line 7") != std::string::npos);
        }
        std::remove(path.c_str());
    }
}

TEST_CASE("noise injection") {
    const BatteryParams params;
    ScenarioSpec sc = quick_scenario("ramp", cc_profile(2.0), 300.0, 5);
    const Trajectory clean = simulate(sc, params);

    SECTION("zero fraction leaves the trajectory unchanged") {
        const Trajectory same = add_noise(clean, 0.0, 99);
        for (std::size_t i = 0; i < clean.samples.size(); ++i) {
            CHECK(same.samples[i].t1 == clean.samples[i].t1);
            CHECK(same.samples[i].current == clean.samples[i].current);
        }
    }
    SECTION("determinism under the seed") {
        const Trajectory a = add_noise(clean, 0.005, 7);
        const Trajectory b = add_noise(clean, 0.005, 7);
        for (std::size_t i = 0; i < a.samples.size(); ++i) {
            CHECK(a.samples[i].t1 == b.samples[i].t1);
            CHECK(a.samples[i].t2 == b.samples[i].t2);
        }
    }
    SECTION("sigma follows the channel range") {
        // Synthetic trajectory whose T2 spans exactly 20 K; fraction 0.005
        // implies sigma = 0.1 K. The sample deviation over 1e5 points must
        // land within 3%.
        Trajectory t;
        const std::size_t n = 100000;
        t.samples.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            t.samples[i].t = static_cast<double>(i);
            t.samples[i].t2 = 290.0 + 20.0 * static_cast<double>(i) / static_cast<double>(n - 1);
        }
        const Trajectory noisy = add_noise(t, 0.005, 31);
        double sum = 0.0, sum2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = noisy.samples[i].t2 - t.samples[i].t2;
            sum += d;
            sum2 += d * d;
        }
        const double mean = sum / static_cast<double>(n);
        const double sd = std::sqrt(sum2 / static_cast<double>(n) - mean * mean);
        CHECK(sd == Catch::Approx(0.1).epsilon(0.03));
    }
    SECTION("fraction outside [0,1) is rejected") {
        CHECK_THROWS_AS(add_noise(clean, -0.1, 1), std::invalid_argument);
        CHECK_THROWS_AS(add_noise(clean, 1.0, 1), std::invalid_argument);
    }
}

TEST_CASE("whole-scenario splits") {
    const BatteryParams params;
    SECTION("19 equal scenarios land near 74/16/10") {
        auto roster = tiny_roster(19);
        // Mark a CC-1C and a dynamic scenario for the test split.
        roster[0].pin_test = true;            // cc 1C
        roster[1].pin_test = true;            // dynamic
        const Dataset ds = build_dataset(roster, params, 0.0);
        const double total = static_cast<double>(ds.row_count());
        CHECK(std::fabs(ds.row_count(Split::Train) / total - 0.74) < 0.05);
        CHECK(std::fabs(ds.row_count(Split::Val) / total - 0.16) < 0.05);
        CHECK(std::fabs(ds.row_count(Split::Test) / total - 0.10) < 0.05);
        bool test_has_cc1 = false, test_has_dyn = false;
        for (const auto& s : ds.scenarios) {
            if (s.split != Split::Test) continue;
            if (s.kind == ProfileKind::ConstantCurrent && std::fabs(s.c_rate - 1.0) < 1e-9)
                test_has_cc1 = true;
            if (s.kind == ProfileKind::SyntheticDynamic) test_has_dyn = true;
        }
        CHECK(test_has_cc1);
        CHECK(test_has_dyn);
    }
    SECTION("ratios (1,0,0) put everything in train") {
        const Dataset ds = build_dataset(tiny_roster(4), params, 0.0, {1.0, 0.0, 0.0});
        CHECK(ds.row_count(Split::Train) == ds.row_count());
    }
    SECTION("too few scenarios is a config error") {
        CHECK_THROWS_AS(build_dataset(tiny_roster(2), params, 0.0), config_error);
    }
    SECTION("auto-pinning picks CC-1C and dynamic scenarios for test") {
        const Dataset ds = build_dataset(tiny_roster(10), params, 0.0);
        bool cc1 = false, dyn = false;
        for (const auto& s : ds.scenarios) {
            if (s.split != Split::Test) continue;
            if (s.kind == ProfileKind::ConstantCurrent && std::fabs(s.c_rate - 1.0) < 1e-9) cc1 = true;
            if (s.kind == ProfileKind::SyntheticDynamic) dyn = true;
        }
        CHECK(cc1);
        CHECK(dyn);
    }
}

TEST_CASE("normalization") {
    NormalizationStats st;
    st.mins = {290.0};
    st.maxs = {310.0};
    CHECK(st.apply(0, 290.0) == 0.0);
    CHECK(st.apply(0, 310.0) == 1.0);
    CHECK(st.apply(0, 295.0) == Catch::Approx(0.25).margin(1e-15));
    Rng rng(17);
    for (int i = 0; i < 200; ++i) {
        const double x = rng.uniform(250.0, 350.0);
        CHECK(std::fabs(st.invert(0, st.apply(0, x)) - x) < 1e-12);
    }
    SECTION("degenerate channel") {
        NormalizationStats flat;
        flat.mins = {5.0};
        flat.maxs = {5.0};
        CHECK(flat.apply(0, 5.0) == 0.5);
        CHECK(flat.invert(0, flat.apply(0, 5.0)) == 5.0);
    }
    SECTION("channel mismatch is a shape error") {
        CHECK_THROWS_AS(st.apply(3, 1.0), shape_error);
    }
    SECTION("values outside the fitted range do not error") {
        CHECK(st.apply(0, 400.0) > 1.0);
        CHECK(st.apply(0, 100.0) < 0.0);
    }
}

TEST_CASE("dataset stats come from the training split only") {
    const BatteryParams params;
    const Dataset ds = build_dataset(tiny_roster(8), params, 0.002);
    REQUIRE(ds.stats.channels() == 5);
    double tmin = std::numeric_limits<double>::infinity();
    double tmax = -tmin;
    for (const auto& s : ds.scenarios) {
        if (s.split != Split::Train) continue;
        for (const auto& r : s.rows) {
            tmin = std::min(tmin, r.target);
            tmax = std::max(tmax, r.target);
        }
    }
    CHECK(ds.stats.mins[4] == tmin);
    CHECK(ds.stats.maxs[4] == tmax);
    // Applying to val/test rows may leave [0,1] but must not throw.
    for (const auto& s : ds.scenarios)
        for (const auto& r : s.rows) (void)ds.stats.apply(4, r.target);
}

TEST_CASE("byte-identical dataset reruns") {
    const BatteryParams params;
    const auto roster = tiny_roster(5);
    const Dataset a = build_dataset(roster, params, 0.005);
    const Dataset b = build_dataset(roster, params, 0.005);
    REQUIRE(a.scenarios.size() == b.scenarios.size());
    for (std::size_t s = 0; s < a.scenarios.size(); ++s) {
        REQUIRE(a.scenarios[s].rows.size() == b.scenarios[s].rows.size());
        for (std::size_t r = 0; r < a.scenarios[s].rows.size(); ++r) {
            CHECK(a.scenarios[s].rows[r].target == b.scenarios[s].rows[r].target);
            CHECK(a.scenarios[s].rows[r].features == b.scenarios[s].rows[r].features);
        }
    }
}

TEST_CASE("dataset save/load round trip") {
    const BatteryParams params;
    const Dataset a = build_dataset(tiny_roster(4), params, 0.003);
    const std::string dir = "dataset_roundtrip_tmp";
    save_dataset(a, dir);
    const Dataset b = load_dataset(dir);
    REQUIRE(a.scenarios.size() == b.scenarios.size());
    CHECK(a.stats.mins == b.stats.mins);
    CHECK(a.stats.maxs == b.stats.maxs);
    for (std::size_t s = 0; s < a.scenarios.size(); ++s) {
        CHECK(a.scenarios[s].split == b.scenarios[s].split);
        REQUIRE(a.scenarios[s].rows.size() == b.scenarios[s].rows.size());
        for (std::size_t r = 0; r < a.scenarios[s].rows.size(); ++r) {
            CHECK(a.scenarios[s].rows[r].features == b.scenarios[s].rows[r].features);
            CHECK(a.scenarios[s].rows[r].target == b.scenarios[s].rows[r].target);
        }
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("histogram2d") {
    const BatteryParams params;
    SECTION("single row occupies one cell") {
        Dataset ds = build_dataset(tiny_roster(3, 30.0), params, 0.0, {1.0, 0.0, 0.0});
        ds.scenarios.resize(1);
        ds.scenarios[0].rows.resize(1);
        const Histogram2d h = histogram2d(ds, 0, 4, 4);
        std::size_t total = 0, nonzero = 0;
        for (std::size_t c : h.counts) {
            total += c;
            if (c > 0) ++nonzero;
        }
        CHECK(total == 1);
        CHECK(nonzero == 1);
    }
    SECTION("counts are conserved") {
        const Dataset ds = build_dataset(tiny_roster(5), params, 0.004);
        const Histogram2d h = histogram2d(ds, 0, 4, 7);
        std::size_t total = 0;
        for (std::size_t c : h.counts) total += c;
        CHECK(total == ds.row_count());
    }
    SECTION("uniform data fills 2x2 bins multinomially") {
        Dataset ds;
        ds.scenarios.emplace_back();
        ds.scenarios[0].name = "u";
        Rng rng(123);
        const std::size_t n = 40000;
        for (std::size_t i = 0; i < n; ++i) {
            DataRow r;
            r.features = {rng.uniform(), 0.0, 0.0, 0.0};
            r.target = rng.uniform();
            ds.scenarios[0].rows.push_back(r);
        }
        const Histogram2d h = histogram2d(ds, 0, 4, 2);
        const double expect = static_cast<double>(n) / 4.0;
        const double band = 3.0 * std::sqrt(expect * 0.75);
        for (std::size_t c : h.counts)
            CHECK(std::fabs(static_cast<double>(c) - expect) < band);
    }
    SECTION("empty dataset gives an empty grid") {
        Dataset ds;
        const Histogram2d h = histogram2d(ds, 0, 4, 3);
        CHECK(h.counts.empty());
    }
}

TEST_CASE("lookback windows") {
    const BatteryParams params;
    auto roster = tiny_roster(3, 99.0); // 100 rows per scenario
    const Dataset ds = build_dataset(roster, params, 0.0, {1.0, 0.0, 0.0});

    SECTION("n - L + 1 windows per scenario, never crossing boundaries") {
        const WindowSet ws = window(ds, Split::Train, 20);
        CHECK(ws.count() == 3 * 81);
        const WindowSet ws50 = window(ds, Split::Train, 50);
        CHECK(ws50.count() == 3 * 51);
        for (const auto& [seq, end] : ws50.windows) CHECK(end >= 49);
    }
    SECTION("exactly one window when rows == L") {
        const WindowSet ws = window(ds, Split::Train, 100);
        CHECK(ws.count() == 3);
    }
    SECTION("short scenarios are skipped and counted") {
        const WindowSet ws = window(ds, Split::Train, 101);
        CHECK(ws.count() == 0);
        CHECK(ws.skipped_scenarios == 3);
    }
}
