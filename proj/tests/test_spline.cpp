#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "kantherm/rng.hpp"
#include "kantherm/spline.hpp"

using namespace kantherm;

TEST_CASE("partition of unity inside the grid") {
    Rng rng(42);
    for (int k = 1; k <= 6; ++k) {
        for (int g = 1; g <= 6; ++g) {
            const SplineGrid grid(k, g, -0.5, 2.0);
            std::vector<double> b(static_cast<std::size_t>(grid.basis_count()));
            for (int trial = 0; trial < 1000; ++trial) {
                const double x = rng.uniform(grid.lo(), grid.hi());
                grid.basis(x, b.data());
                double sum = 0.0;
                for (double v : b) sum += v;
                REQUIRE(std::fabs(sum - 1.0) < 1e-12);
            }
        }
    }
}

TEST_CASE("piecewise-linear hats at an interval midpoint") {
    const SplineGrid grid(1, 5, 0.0, 1.0);
    REQUIRE(grid.basis_count() == 6);
    const auto b = grid.basis(0.1);
    CHECK(b[0] == Catch::Approx(0.5).margin(1e-14));
    CHECK(b[1] == Catch::Approx(0.5).margin(1e-14));
    for (std::size_t i = 2; i < b.size(); ++i) CHECK(b[i] == 0.0);
}

TEST_CASE("local support: at most order+1 non-zero bases") {
    Rng rng(7);
    for (int k = 1; k <= 6; ++k) {
        for (int g = 1; g <= 6; ++g) {
            const SplineGrid grid(k, g, 0.0, 1.0);
            for (int trial = 0; trial < 200; ++trial) {
                const double x = rng.uniform(0.0, 1.0);
                const auto b = grid.basis(x);
                int nonzero = 0;
                for (double v : b)
                    if (v != 0.0) ++nonzero;
                CHECK(nonzero <= k + 1);
            }
        }
    }
    const SplineGrid cubic(3, 5, 0.0, 1.0);
    const auto b = cubic.basis(0.5);
    int nonzero = 0;
    for (double v : b)
        if (v != 0.0) ++nonzero;
    CHECK(nonzero <= 4);
}

TEST_CASE("local evaluation agrees with the dense recursion") {
    Rng rng(3);
    for (int k = 1; k <= 6; ++k) {
        const SplineGrid grid(k, 5, -1.0, 2.0);
        double nz[SplineGrid::kMaxOrder + 1];
        double dnz[SplineGrid::kMaxOrder + 1];
        for (int trial = 0; trial < 500; ++trial) {
            const double x = rng.uniform(grid.lo(), grid.hi());
            const auto dense = grid.basis(x);
            const auto ddense = grid.basis_derivative(x);
            const int span = grid.local_basis_and_derivative(x, nz, dnz);
            for (int i = 0; i < grid.basis_count(); ++i) {
                const int r = i - (span - k);
                const double expect = (r >= 0 && r <= k) ? nz[r] : 0.0;
                const double dexpect = (r >= 0 && r <= k) ? dnz[r] : 0.0;
                CHECK(std::fabs(dense[static_cast<std::size_t>(i)] - expect) < 1e-13);
                CHECK(std::fabs(ddense[static_cast<std::size_t>(i)] - dexpect) < 1e-10);
            }
        }
    }
}

TEST_CASE("basis derivatives match finite differences") {
    Rng rng(11);
    const double step = 1e-6;
    for (int k = 1; k <= 4; ++k) {
        const SplineGrid grid(k, 5, 0.0, 1.0);
        for (int trial = 0; trial < 100; ++trial) {
            // Stay away from the degree-0/1 kink points at the knots.
            const double x = rng.uniform(0.05, 0.95);
            bool near_knot = false;
            for (double t : grid.knots())
                if (std::fabs(x - t) < 10 * step) near_knot = true;
            if (near_knot) continue;
            const auto d = grid.basis_derivative(x);
            const auto hi = grid.basis(x + step);
            const auto lo = grid.basis(x - step);
            for (int i = 0; i < grid.basis_count(); ++i) {
                const double fd = (hi[static_cast<std::size_t>(i)] - lo[static_cast<std::size_t>(i)]) / (2 * step);
                CHECK(d[static_cast<std::size_t>(i)] == Catch::Approx(fd).margin(1e-5));
            }
        }
    }
}

TEST_CASE("outside the extended knots everything vanishes, without error") {
    const SplineGrid grid(3, 5, 0.0, 1.0);
    for (double x : {-10.0, 5.0, 100.0}) {
        const auto b = grid.basis(x);
        for (double v : b) CHECK(v == 0.0);
    }
}

TEST_CASE("grid construction validates its inputs") {
    CHECK_THROWS_AS(SplineGrid(0, 5, 0.0, 1.0), config_error);
    CHECK_THROWS_AS(SplineGrid(3, 0, 0.0, 1.0), config_error);
    CHECK_THROWS_AS(SplineGrid(3, 5, 1.0, 1.0), config_error);
    const SplineGrid g(3, 5, 0.0, 1.0);
    CHECK(g.knots().size() == 5 + 2 * 3 + 1);
    for (std::size_t i = 1; i < g.knots().size(); ++i) CHECK(g.knots()[i] > g.knots()[i - 1]);
}
