#include <doctest.h>

#include <cmath>

#include "fida/errors.hpp"
#include "fida/io.hpp"
#include "fida/rng.hpp"

using namespace fida;

TEST_CASE("field JSON round trip") {
    Grid1D g{-1.0, 0.25, 8, false};
    Field1D u = Field1D::zeros(g);
    Rng rng(1);
    for (double& v : u.values) v = rng.normal();
    Field1D back = io::field1d_from_json(io::field_to_json(u));
    CHECK(back.grid == u.grid);
    for (int i = 0; i < g.n; ++i) CHECK(back.values[i] == u.values[i]);
}

TEST_CASE("2-d field JSON round trip and detection") {
    Grid1D gx{0.0, 0.5, 4, true}, gy{0.0, 0.25, 8, false};
    Field2D u = Field2D::zeros(gx, gy);
    Rng rng(2);
    for (double& v : u.values) v = rng.uniform();
    const std::string text = io::field_to_json(u);
    CHECK(io::json_is_field2d(text));
    CHECK(!io::json_is_field2d(io::field_to_json(Field1D::zeros(gx))));
    Field2D back = io::field2d_from_json(text);
    CHECK(back.gridx == gx);
    CHECK(back.gridy == gy);
    for (std::size_t i = 0; i < u.values.size(); ++i) CHECK(back.values[i] == u.values[i]);
}

TEST_CASE("feature-set JSON round trip preserves kind, values and 2-d locations") {
    FeatureSet fs;
    fs.kind = FeatureKind::argmax_with_value;
    fs.time = 1.5;
    fs.points.push_back({0.25, 0.0, 3.5, {}});
    fs.points.push_back({0.75, 0.0, std::nullopt, {}});
    fs.canonicalize();
    FeatureSet back = io::featureset_from_json(io::featureset_to_json(fs));
    CHECK(back.kind == fs.kind);
    CHECK(back.time == fs.time);
    REQUIRE(back.size() == 2);
    CHECK(back.points[0].x == 0.25);
    CHECK(*back.points[0].value == 3.5);
    CHECK(!back.points[1].value.has_value());

    FeatureSet fs2;
    fs2.kind = FeatureKind::level;
    fs2.dim = 2;
    fs2.points.push_back({0.1, 0.9, std::nullopt, {}});
    FeatureSet back2 = io::featureset_from_json(io::featureset_to_json(fs2));
    CHECK(back2.dim == 2);
    CHECK(back2.points[0].y == 0.9);
}

TEST_CASE("trajectory JSON round trip") {
    OdeTrajectory traj;
    traj.times = {0.0, 0.5, 1.0};
    traj.states = {{{1.0, 2.0}}, {{1.5, 1.0}}, {{0.5, -1.0}}};
    OdeTrajectory back = io::trajectory_from_json(io::trajectory_to_json(traj));
    REQUIRE(back.times.size() == 3);
    CHECK(back.states[2][1] == -1.0);
    CHECK(back.series(0)[1] == std::pair<double, double>{0.5, 1.5});
}

TEST_CASE("twin config JSON round trip is stable") {
    const std::string text = R"({
      "schema": 1,
      "seed": 42,
      "horizon": 1.0,
      "model": {
        "kind": "burgers",
        "grid": {"x0": 0.0, "dx": 0.0078125, "n": 128, "periodic": true},
        "nu": 0.001,
        "dt": 0.0005,
        "initial": {"kind": "sin", "amplitude": 1.0, "phase": 0.02}
      },
      "observations": {
        "schedule": {"start": 0.2, "stop": 1.0, "every": 0.05},
        "operator": {"op": "front", "m": 15.0},
        "noise": {"location_stddev": 0.01}
      },
      "method": {
        "kind": "enkf",
        "ensemble_size": 32,
        "featurization": {"k": 1, "rule": "leftmost_k", "pad": "nearest_duplicate"},
        "obs_noise_floor": 0.002
      },
      "prior": {"ic_stddev": 0.05, "ic_modes": 3}
    })";
    TwinConfig cfg = io::twin_config_from_json(text);
    CHECK(cfg.seed == 42);
    CHECK(cfg.model.grid.n == 128);
    CHECK(cfg.method.featurization.pad_policy == PadPolicy::nearest_duplicate);
    cfg.validate();

    const std::string echo = io::twin_config_to_json(cfg);
    TwinConfig cfg2 = io::twin_config_from_json(echo);
    CHECK(io::twin_config_to_json(cfg2) == echo);
}

TEST_CASE("config errors carry useful messages") {
    CHECK_THROWS_AS(io::twin_config_from_json("{ nope"), ConfigError);
    CHECK_THROWS_AS(io::twin_config_from_json(R"({"schema": 1})"), ConfigError);
    CHECK_THROWS_AS(io::field1d_from_json(R"({"values": [1, 2]})"), ConfigError);
    CHECK_THROWS_AS(
        io::field1d_from_json(R"({"grid": {"x0": 0, "dx": 0.1, "n": 3}, "values": [1]})"),
        PreconditionError);
}

TEST_CASE("report CSV has the documented flat columns") {
    TwinReport rep;
    rep.cycles.push_back({0, 0.5, 0.1, 0.2, 0.05, 40.0, 0, 0.01, 1.5, 0.25, false, 0.0, 0.0});
    const std::string csv = io::twin_report_to_csv(rep);
    CHECK(csv.rfind("cycle,time,rmse_analysis,rmse_freerun,spread,ess,param_est,param_err\n", 0) == 0);
    CHECK(csv.find("0,0.5,0.1,0.2,0.05,40,1.5,0.25") != std::string::npos);
}

TEST_CASE("format_double is shortest-round-trip stable") {
    CHECK(io::format_double(0.5) == "0.5");
    CHECK(io::format_double(1.0 / 3.0) == "0.3333333333333333");
    const double v = 0.1 + 0.2;
    CHECK(std::stod(io::format_double(v)) == v);
}
