#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "fida/io.hpp"

namespace fs = std::filesystem;

namespace {

struct CliResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

fs::path work_dir() {
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / "fida_cli_tests";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

CliResult run_cli(const std::string& args, const std::string& env = "") {
    const fs::path out = work_dir() / "stdout.txt";
    const fs::path err = work_dir() / "stderr.txt";
    const std::string cmd = env + (env.empty() ? "" : " ") + FIDA_CLI_PATH + " " + args + " > " +
                            out.string() + " 2> " + err.string();
    const int status = std::system(cmd.c_str());
    CliResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

void write(const fs::path& p, const std::string& text) {
    std::ofstream o(p, std::ios::binary);
    o << text;
}

const char* kConstantSim = R"({
  "schema": 1, "seed": 1, "horizon": 0.1,
  "model": {
    "kind": "burgers",
    "grid": {"x0": 0.0, "dx": 0.015625, "n": 64, "periodic": true},
    "nu": 0.001, "dt": 0.0005,
    "initial": {"kind": "values", "values": [%VALUES%]}
  },
  "snapshots": {"times": [0.1]},
  "output": {"dir": "%DIR%", "prefix": "const"}
})";

}  // namespace

TEST_CASE("cli simulate: a constant field is preserved exactly") {
    const fs::path dir = work_dir() / "sim_const";
    std::string values;
    for (int i = 0; i < 64; ++i) values += (i ? "," : "") + std::string("0.7");
    std::string cfg = kConstantSim;
    cfg.replace(cfg.find("%VALUES%"), 8, values);
    cfg.replace(cfg.find("%DIR%"), 5, dir.string());
    write(work_dir() / "const.json", cfg);

    CliResult r = run_cli("simulate --config " + (work_dir() / "const.json").string());
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.rfind("snapshots=1", 0) == 0);
    const fida::Field1D u = fida::io::field1d_from_json(slurp(dir / "const_snap0.json"));
    for (double v : u.values) CHECK(v == 0.7);
}

TEST_CASE("cli simulate: seeded runs are reproducible, blow-ups exit 3") {
    const char* lorenz = R"({
      "schema": 1, "seed": 9, "horizon": 2.0,
      "model": {
        "kind": "lorenz",
        "params": {"sigma": 10.0, "rho": 28.0, "beta": %BETA%},
        "dt": 0.001,
        "initial": {"kind": "state", "state": [1.0, 1.0, 1.0]},
        "process_noise": {"stddev": 0.05}
      },
      "snapshots": {"every": 0.5},
      "output": {"dir": "%DIR%", "prefix": "lz"}
    })";

    std::string good = lorenz;
    good.replace(good.find("%BETA%"), 6, "2.6666666666666665");
    const fs::path d1 = work_dir() / "lz1";
    const fs::path d2 = work_dir() / "lz2";
    std::string cfg1 = good, cfg2 = good;
    cfg1.replace(cfg1.find("%DIR%"), 5, d1.string());
    cfg2.replace(cfg2.find("%DIR%"), 5, d2.string());
    write(work_dir() / "lz1.json", cfg1);
    write(work_dir() / "lz2.json", cfg2);
    REQUIRE(run_cli("simulate --config " + (work_dir() / "lz1.json").string()).exit_code == 0);
    REQUIRE(run_cli("simulate --config " + (work_dir() / "lz2.json").string()).exit_code == 0);
    CHECK(slurp(d1 / "lz_trajectory.json") == slurp(d2 / "lz_trajectory.json"));

    std::string bad = lorenz;
    bad.replace(bad.find("%BETA%"), 6, "{\"value\": -30.0, \"lo\": -100.0, \"hi\": 100.0}");
    bad.replace(bad.find("%DIR%"), 5, (work_dir() / "lz3").string());
    write(work_dir() / "lz_bad.json", bad);
    CliResult r = run_cli("simulate --config " + (work_dir() / "lz_bad.json").string());
    CHECK(r.exit_code == 3);
    CHECK(r.err.find("t=") != std::string::npos);
}

TEST_CASE("cli features: level crossings of a sine field") {
    fida::Grid1D g{0.0, 1.0 / 256, 256, true};
    fida::Field1D u = fida::Field1D::zeros(g);
    for (int i = 0; i < g.n; ++i) u.values[i] = std::sin(2.0 * M_PI * g.center(i));
    const fs::path field = work_dir() / "sine.json";
    write(field, fida::io::field_to_json(u));

    const fs::path out = work_dir() / "sine_level.json";
    CliResult r = run_cli("features " + field.string() + " --op level --c 0 --out " + out.string());
    REQUIRE(r.exit_code == 0);
    CHECK(r.out == "count=2\n");
    const fida::FeatureSet fs2 = fida::io::featureset_from_json(slurp(out));
    REQUIRE(fs2.size() == 2);
    CHECK(std::abs(fs2.points[0].x - 0.0) < 1e-9);
    CHECK(std::abs(fs2.points[1].x - 0.5) < 1e-9);

    // constant field -> empty front set, count 0
    std::fill(u.values.begin(), u.values.end(), 1.0);
    const fs::path flat = work_dir() / "flat.json";
    write(flat, fida::io::field_to_json(u));
    r = run_cli("features " + flat.string() + " --op front --m 10 --out " +
                (work_dir() / "flat_f.json").string());
    REQUIRE(r.exit_code == 0);
    CHECK(r.out == "count=0\n");

    // missing required threshold -> config exit code
    r = run_cli("features " + flat.string() + " --op front");
    CHECK(r.exit_code == 2);

    // unknown operator -> config exit code
    r = run_cli("features " + flat.string() + " --op maxima");
    CHECK(r.exit_code == 2);
}

TEST_CASE("cli metric: distances, kind mismatch and empty-set handling") {
    const fs::path a = work_dir() / "a.json";
    const fs::path b = work_dir() / "b.json";
    const fs::path empty = work_dir() / "empty.json";
    const fs::path other_kind = work_dir() / "front.json";
    write(a, R"({"kind":"level","time":0,"degenerate":false,"points":[{"loc":0.0,"value":null}]})");
    write(b, R"({"kind":"level","time":0,"degenerate":false,"points":[{"loc":0.0,"value":null}]})");
    write(empty, R"({"kind":"level","time":0,"degenerate":false,"points":[]})");
    write(other_kind, R"({"kind":"front","time":0,"degenerate":false,"points":[{"loc":0.5,"value":null}]})");

    CliResult r = run_cli("metric " + a.string() + " " + b.string() + " --metric hausdorff");
    REQUIRE(r.exit_code == 0);
    CHECK(std::stod(r.out) == 0.0);

    r = run_cli("metric " + a.string() + " " + empty.string() + " --metric ospa --cutoff 1");
    REQUIRE(r.exit_code == 0);
    CHECK(std::stod(r.out) == 1.0);

    r = run_cli("metric " + a.string() + " " + empty.string() + " --metric hausdorff");
    CHECK(r.exit_code == 4);

    r = run_cli("metric " + a.string() + " " + other_kind.string() + " --metric ospa");
    CHECK(r.exit_code == 2);
}

namespace {

std::string small_twin_config(const std::string& dir, const std::string& seed) {
    return std::string(R"({
      "schema": 1, "seed": )") +
           seed + R"(, "horizon": 0.5,
      "model": {
        "kind": "burgers",
        "grid": {"x0": 0.0, "dx": 0.015625, "n": 64, "periodic": true},
        "nu": 0.001, "dt": 0.001,
        "initial": {"kind": "sin", "amplitude": 1.0, "phase": 0.0}
      },
      "observations": {
        "schedule": {"start": 0.25, "stop": 0.5, "every": 0.05},
        "operator": {"op": "front", "m": 10.0},
        "noise": {"location_stddev": 0.03125}
      },
      "method": {
        "kind": "enkf", "ensemble_size": 20,
        "featurization": {"k": 1, "rule": "leftmost_k", "pad": "nearest_duplicate"},
        "obs_noise_floor": 0.004
      },
      "prior": {
        "initial": {"kind": "sin", "amplitude": 1.0, "phase": 0.03},
        "ic_stddev": 0.05, "ic_modes": 3
      },
      "output": {"dir": ")" +
           dir + R"("}
    })";
}

}  // namespace

TEST_CASE("cli twin: reports, rerun determinism and seed precedence") {
    const fs::path d1 = work_dir() / "twin1";
    const fs::path d2 = work_dir() / "twin2";
    const fs::path d3 = work_dir() / "twin3";
    write(work_dir() / "twin1.json", small_twin_config(d1.string(), "42"));
    write(work_dir() / "twin2.json", small_twin_config(d2.string(), "42"));
    write(work_dir() / "twin3.json", small_twin_config(d3.string(), "1"));

    CliResult r1 = run_cli("twin --config " + (work_dir() / "twin1.json").string());
    REQUIRE(r1.exit_code == 0);
    CHECK(r1.out.rfind("cycles=6", 0) == 0);
    CliResult r2 = run_cli("twin --config " + (work_dir() / "twin2.json").string());
    REQUIRE(r2.exit_code == 0);

    CHECK(slurp(d1 / "report.json") == slurp(d2 / "report.json"));
    CHECK(slurp(d1 / "report.csv") == slurp(d2 / "report.csv"));

    // --seed beats FIDA_SEED, which beats the config seed.
    CliResult r3 = run_cli("--seed 42 twin --config " + (work_dir() / "twin3.json").string(),
                           "FIDA_SEED=999");
    REQUIRE(r3.exit_code == 0);
    CHECK(slurp(d3 / "report.csv") == slurp(d1 / "report.csv"));

    // bad schema version -> exit 2
    std::string bad = small_twin_config((work_dir() / "twin4").string(), "42");
    bad.replace(bad.find("\"schema\": 1"), 11, "\"schema\": 3");
    write(work_dir() / "twin4.json", bad);
    CHECK(run_cli("twin --config " + (work_dir() / "twin4.json").string()).exit_code == 2);
}

TEST_CASE("cli estimate: recovers the scanned parameter and writes the curve") {
    const fs::path dir = work_dir() / "est";
    const std::string cfg = std::string(R"({
      "schema": 1, "seed": 5, "horizon": 55.0,
      "model": {
        "kind": "lorenz",
        "params": {"sigma": 10.0, "rho": 28.0, "beta": 2.6666666666666665},
        "dt": 0.001,
        "initial": {"kind": "state", "state": [1.0, 1.0, 1.0]}
      },
      "observations": {"operator": {"op": "peaks", "component": 2}},
      "method": {
        "kind": "peakmap", "unknown": "rho", "bounds": [26.0, 30.0],
        "grid_points": 9, "refine_iters": 8, "transient_cut": 5.0
      },
      "output": {"dir": ")") + dir.string() + R"("}
    })";
    write(work_dir() / "est.json", cfg);
    CliResult r = run_cli("estimate --config " + (work_dir() / "est.json").string());
    REQUIRE(r.exit_code == 0);
    REQUIRE(r.out.rfind("p_hat=", 0) == 0);
    const double p_hat = std::stod(r.out.substr(6));
    CHECK(std::abs(p_hat - 28.0) <= 0.3);
    const std::string curve = slurp(dir / "cost_curve.csv");
    CHECK(curve.rfind("param,cost\n", 0) == 0);
    CHECK(std::count(curve.begin(), curve.end(), '\n') >= 10);
}
