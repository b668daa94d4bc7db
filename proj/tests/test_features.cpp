#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "fida/errors.hpp"
#include "fida/features.hpp"
#include "fida/models.hpp"
#include "fida/rng.hpp"

using namespace fida;

namespace {

Field1D make_field(int n, bool periodic, const std::function<double(double)>& f) {
    Grid1D g{0.0, 1.0 / n, n, periodic};
    Field1D u = Field1D::zeros(g);
    for (int i = 0; i < n; ++i) u.values[i] = f(g.center(i));
    return u;
}

}  // namespace

TEST_CASE("extract_front: constant field has no fronts") {
    Field1D u = make_field(128, true, [](double) { return 0.3; });
    FeatureSet fs = extract_front(u, 5.0);
    CHECK(fs.empty());
    CHECK(fs.kind == FeatureKind::front);
}

TEST_CASE("extract_front finds a tanh front at its steepest point") {
    // d/dx tanh((x-0.5)/0.02) peaks at 50 over x = 0.5.
    Field1D u = make_field(512, false, [](double x) { return std::tanh((x - 0.5) / 0.02); });
    FeatureSet fs = extract_front(u, 10.0);
    REQUIRE(fs.size() == 1);
    CHECK(std::abs(fs.points[0].x - 0.5) <= u.grid.dx);
    CHECK(fs.points[0].run.has_value());
}

TEST_CASE("extract_front separates two opposing fronts") {
    Field1D u = make_field(512, true, [](double x) {
        return std::tanh((x - 0.25) / 0.02) - std::tanh((x - 0.75) / 0.02) - 1.0;
    });
    FeatureSet fs = extract_front(u, 10.0);
    REQUIRE(fs.size() == 2);
    CHECK(std::abs(fs.points[0].x - 0.25) <= u.grid.dx);
    CHECK(std::abs(fs.points[1].x - 0.75) <= u.grid.dx);
}

TEST_CASE("extract_threshold: constant field below the threshold is empty") {
    Field1D u = make_field(64, true, [](double) { return -1.0; });
    CHECK(extract_threshold(u, 0.0).empty());
}

TEST_CASE("extract_threshold finds the sine super-level boundary") {
    Field1D u = make_field(512, true, [](double x) { return std::sin(2.0 * M_PI * x); });
    FeatureSet fs = extract_threshold(u, 0.0);
    REQUIRE(fs.size() == 2);
    CHECK(std::abs(fs.points[0].x - 0.0) < 1e-9);
    CHECK(std::abs(fs.points[1].x - 0.5) < 1e-9);
}

TEST_CASE("extract_threshold is exact for a linear field") {
    Field1D u = make_field(64, false, [](double x) { return 2.0 * x - 1.0; });
    FeatureSet fs = extract_threshold(u, 0.0);
    REQUIRE(fs.size() == 1);
    CHECK(fs.points[0].x == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("extract_argmax refines a parabola vertex exactly") {
    Field1D u = make_field(512, false, [](double x) { return -(x - 0.3) * (x - 0.3); });
    FeatureSet fs = extract_argmax(u, 0.0, true);
    REQUIRE(fs.size() == 1);
    CHECK(std::abs(fs.points[0].x - 0.3) < 1e-6);
    REQUIRE(fs.points[0].value.has_value());
    CHECK(std::abs(*fs.points[0].value) < 1e-9);
}

TEST_CASE("extract_argmax flags constant fields as degenerate") {
    Field1D u = make_field(64, true, [](double) { return 2.0; });
    FeatureSet fs = extract_argmax(u, 0.0);
    CHECK(fs.degenerate);
    CHECK(fs.empty());
}

TEST_CASE("extract_argmax returns both of two equal maxima") {
    Field1D u = make_field(512, true, [](double x) {
        const double a = (x - 0.25) / 0.05, b = (x - 0.75) / 0.05;
        return std::exp(-a * a) + std::exp(-b * b);
    });
    FeatureSet fs = extract_argmax(u, 1e-6);
    REQUIRE(fs.size() == 2);
    CHECK(std::abs(fs.points[0].x - 0.25) <= u.grid.dx);
    CHECK(std::abs(fs.points[1].x - 0.75) <= u.grid.dx);
}

TEST_CASE("extract_argmax with tol=0 returns one point whose value matches the max") {
    Field1D u = make_field(256, true,
                           [](double x) { return std::sin(2.0 * M_PI * x) + 0.3 * std::cos(4.0 * M_PI * x); });
    FeatureSet fs = extract_argmax(u, 0.0, true);
    REQUIRE(fs.size() == 1);
    CHECK(*fs.points[0].value >= max_value(u.values) - 1e-12);
    CHECK(*fs.points[0].value <= max_value(u.values) + 0.1);
}

TEST_CASE("extract_levelset 1-d matches threshold crossings") {
    Field1D u = make_field(512, true, [](double x) { return std::sin(2.0 * M_PI * x); });
    FeatureSet level = extract_levelset(u, 0.0);
    REQUIRE(level.size() == 2);
    CHECK(std::abs(level.points[0].x - 0.0) < 1e-9);
    CHECK(std::abs(level.points[1].x - 0.5) < 1e-9);

    Field1D lin = make_field(64, false, [](double x) { return 2.0 * x - 1.0; });
    FeatureSet lf = extract_levelset(lin, 0.0);
    REQUIRE(lf.size() == 1);
    CHECK(lf.points[0].x == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("extract_levelset flags an all-level field as degenerate") {
    Field1D u = make_field(32, true, [](double) { return 1.5; });
    FeatureSet fs = extract_levelset(u, 1.5);
    CHECK(fs.degenerate);
    CHECK(fs.empty());
}

TEST_CASE("extract_levelset 2-d traces a circle to within a cell diagonal") {
    const int m = 64;
    Grid1D gx{0.0, 1.0 / m, m, false}, gy{0.0, 1.0 / m, m, false};
    Field2D G = Field2D::zeros(gx, gy);
    for (int iy = 0; iy < m; ++iy)
        for (int ix = 0; ix < m; ++ix)
            G.at(ix, iy) = std::hypot(gx.center(ix) - 0.5, gy.center(iy) - 0.5) - 0.25;
    FeatureSet fs = extract_levelset(G, 0.0);
    CHECK(fs.dim == 2);
    CHECK(fs.size() > 20);
    const double diag = std::hypot(gx.dx, gy.dx);
    for (const auto& p : fs.points)
        CHECK(std::abs(std::hypot(p.x - 0.5, p.y - 0.5) - 0.25) <= diag);
}

TEST_CASE("extract_peaks refines sine maxima") {
    std::vector<std::pair<double, double>> series;
    for (int k = 0; k * 0.01 <= 4.0 * M_PI; ++k) series.emplace_back(k * 0.01, std::sin(k * 0.01));
    FeatureSet fs = extract_peaks(series);
    REQUIRE(fs.size() == 2);
    CHECK(std::abs(fs.points[0].x - M_PI / 2.0) < 1e-3);
    CHECK(std::abs(fs.points[1].x - 5.0 * M_PI / 2.0) < 1e-3);
    CHECK(std::abs(*fs.points[0].value - 1.0) < 1e-6);
    CHECK(std::abs(*fs.points[1].value - 1.0) < 1e-6);
}

TEST_CASE("extract_peaks: monotone series has no peaks") {
    std::vector<std::pair<double, double>> series;
    for (int k = 0; k < 50; ++k) series.emplace_back(k * 0.1, static_cast<double>(k));
    CHECK(extract_peaks(series).empty());
}

TEST_CASE("extract_peaks reports a plateau midpoint once") {
    std::vector<std::pair<double, double>> series = {
        {0.0, 0.0}, {1.0, 1.0}, {2.0, 1.0}, {3.0, 1.0}, {4.0, 0.0}};
    FeatureSet fs = extract_peaks(series);
    REQUIRE(fs.size() == 1);
    CHECK(fs.points[0].x == doctest::Approx(2.0));
    CHECK(*fs.points[0].value == doctest::Approx(1.0));
}

TEST_CASE("extract_peaks validates its input series") {
    CHECK_THROWS_AS(extract_peaks({{0.0, 1.0}, {1.0, 2.0}}), PreconditionError);
    CHECK_THROWS_AS(extract_peaks({{0.0, 1.0}, {0.0, 2.0}, {1.0, 0.0}}), PreconditionError);
}

// The peak-to-peak pairs of the chaotic output reproduce the classical
// unimodal return map: every coarse pair sits within 0.5 of the map built
// from a 10x finer integration (interpolated over z_k).
TEST_CASE("extract_peaks reproduces the unimodal return map of the chaotic output") {
    ParameterVector p = lorenz_canonical_params();
    OdeState x0{{1.0, 1.0, 1.0}};
    auto cut = [](const FeatureSet& fs) {
        std::vector<FeaturePoint> out;
        for (const auto& q : fs.points)
            if (q.x >= 5.0) out.push_back(q);
        return out;
    };
    auto coarse = integrate_ode(ode_rhs_for("lorenz"), x0, p, 0.0, 50.0, 1e-3);
    auto fine = integrate_ode(ode_rhs_for("lorenz"), x0, p, 0.0, 200.0, 1e-4);
    const auto pc = cut(extract_peaks(coarse.series(2)));
    const auto pf = cut(extract_peaks(fine.series(2)));
    REQUIRE(pc.size() > 30);
    REQUIRE(pf.size() > 200);

    std::vector<std::pair<double, double>> map;  // (z_k, z_{k+1}) sorted by z_k
    for (std::size_t k = 0; k + 1 < pf.size(); ++k) map.emplace_back(*pf[k].value, *pf[k + 1].value);
    std::sort(map.begin(), map.end());
    auto map_at = [&](double z) {
        if (z <= map.front().first) return map.front().second;
        if (z >= map.back().first) return map.back().second;
        auto it = std::lower_bound(map.begin(), map.end(), std::make_pair(z, -1e300));
        auto lo = it - 1;
        const double t = (z - lo->first) / (it->first - lo->first);
        return lo->second + t * (it->second - lo->second);
    };
    for (std::size_t k = 0; k + 1 < pc.size(); ++k)
        CHECK(std::abs(*pc[k + 1].value - map_at(*pc[k].value)) <= 0.5);
}

TEST_CASE("corrupt: zero noise with full detection is the identity") {
    Field1D u = make_field(256, true, [](double x) { return std::sin(2.0 * M_PI * x); });
    FeatureSet fs = extract_levelset(u, 0.0);
    FeatureNoiseSpec noise;  // all defaults: stddev 0, p_d 1, clutter 0
    FeatureSet out = corrupt(fs, noise, domain_of(u.grid));
    REQUIRE(out.size() == fs.size());
    for (std::size_t i = 0; i < fs.size(); ++i) CHECK(out.points[i].x == fs.points[i].x);
}

TEST_CASE("corrupt: zero detection probability empties the set") {
    Field1D u = make_field(256, true, [](double x) { return std::sin(2.0 * M_PI * x); });
    FeatureSet fs = extract_levelset(u, 0.0);
    FeatureNoiseSpec noise;
    noise.detect_prob = 0.0;
    CHECK(corrupt(fs, noise, domain_of(u.grid)).empty());
}

TEST_CASE("corrupt is deterministic under a seed") {
    Field1D u = make_field(256, true, [](double x) { return std::sin(4.0 * M_PI * x); });
    FeatureSet fs = extract_levelset(u, 0.2);
    FeatureNoiseSpec noise;
    noise.location_stddev = 0.01;
    noise.detect_prob = 0.8;
    noise.clutter_rate = 1.5;
    noise.seed = 99;
    FeatureSet a = corrupt(fs, noise, domain_of(u.grid));
    FeatureSet b = corrupt(fs, noise, domain_of(u.grid));
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.points[i].x == b.points[i].x);
}

TEST_CASE("corrupt cardinality: no clutter never adds, full detection never drops") {
    Field1D u = make_field(256, true, [](double x) { return std::sin(4.0 * M_PI * x); });
    FeatureSet fs = extract_levelset(u, 0.1);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        FeatureNoiseSpec thinning;
        thinning.detect_prob = 0.5;
        thinning.seed = seed;
        CHECK(corrupt(fs, thinning, domain_of(u.grid)).size() <= fs.size());

        FeatureNoiseSpec cluttering;
        cluttering.clutter_rate = 2.0;
        cluttering.location_stddev = 0.001;
        cluttering.seed = seed;
        CHECK(corrupt(fs, cluttering, domain_of(u.grid)).size() >= fs.size());
    }
}

// Translating the field by whole cells translates every feature location
// by the same amount, modulo the periodic domain.
TEST_CASE("extractors are translation-consistent on periodic grids") {
    const int n = 256;
    Rng rng(2024);
    for (int trial = 0; trial < 100; ++trial) {
        // Random smooth periodic field from a few Fourier modes.
        double a[4], b[4];
        for (int m = 0; m < 4; ++m) {
            a[m] = rng.normal();
            b[m] = rng.normal();
        }
        Field1D u = make_field(n, true, [&](double x) {
            double acc = 0.0;
            for (int m = 0; m < 4; ++m)
                acc += a[m] * std::cos(2.0 * M_PI * (m + 1) * x) +
                       b[m] * std::sin(2.0 * M_PI * (m + 1) * x);
            return acc;
        });
        const int shift = 1 + static_cast<int>(rng.uniform() * (n - 1));
        Field1D shifted = u;
        for (int i = 0; i < n; ++i) shifted.values[(i + shift) % n] = u.values[i];

        const int which = trial % 3;
        FeatureSet f0, f1;
        if (which == 0) {
            const double level = 0.3 * (a[0] + b[1]);
            f0 = extract_levelset(u, level);
            f1 = extract_levelset(shifted, level);
        } else if (which == 1) {
            f0 = extract_argmax(u, 0.0);
            f1 = extract_argmax(shifted, 0.0);
        } else {
            f0 = extract_front(u, 4.0);
            f1 = extract_front(shifted, 4.0);
        }
        REQUIRE(f0.size() == f1.size());
        const double length = u.grid.length();
        const double delta = shift * u.grid.dx;
        for (std::size_t k = 0; k < f0.size(); ++k) {
            double expect = std::fmod(f0.points[k].x + delta, length);
            // match against the set (order can rotate under the shift)
            double best = 1e9;
            for (const auto& q : f1.points) {
                double d = std::abs(q.x - expect);
                d = std::min(d, std::abs(d - length));
                best = std::min(best, d);
            }
            CHECK(best < 1e-9);
        }
    }
}
