#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "fida/errors.hpp"
#include "fida/features.hpp"
#include "fida/io.hpp"
#include "fida/models.hpp"
#include "fida/parallel.hpp"
#include "fida/rng.hpp"
#include "fida/setmetrics.hpp"
#include "fida/twinlab.hpp"
#include "fida/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Exit codes: 0 ok, 2 config, 3 numerical, 4 metric-domain, 5 estimation.
enum ExitCode { kOk = 0, kConfigError = 2, kNumericalError = 3, kMetricDomainError = 4, kEstimationError = 5 };

struct GlobalOptions {
    std::optional<std::uint64_t> seed;
    int threads = 0;
    int verbosity = 0;
};

std::optional<std::uint64_t> env_seed() {
    const char* v = std::getenv("FIDA_SEED");
    if (!v || !*v) return std::nullopt;
    try {
        return std::stoull(v);
    } catch (...) {
        throw fida::ConfigError("FIDA_SEED is not an integer");
    }
}

// CLI flag wins over FIDA_SEED, which wins over the config file.
void apply_seed_override(const GlobalOptions& opts, std::uint64_t& seed) {
    if (opts.seed) {
        seed = *opts.seed;
    } else if (auto s = env_seed()) {
        seed = *s;
    }
}

fs::path prepare_output_dir(const std::string& from_config, const std::string& from_flag) {
    fs::path dir = !from_flag.empty() ? fs::path(from_flag)
                                      : (!from_config.empty() ? fs::path(from_config) : fs::path("."));
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec && !fs::is_directory(dir)) throw fida::ConfigError("cannot create output directory: " + dir.string());
    return dir;
}

int cmd_simulate(const GlobalOptions& opts, const std::string& config_path, const std::string& out_flag) {
    const std::string text = fida::io::read_file(config_path);
    fida::TwinConfig cfg = fida::io::twin_config_from_json(text);
    apply_seed_override(opts, cfg.seed);

    // Snapshot schedule: explicit times or an interval; default is the horizon.
    json raw;
    try {
        raw = json::parse(text);
    } catch (const json::exception& e) {
        throw fida::ConfigError(std::string("invalid JSON: ") + e.what());
    }
    std::vector<double> snaps;
    if (raw.contains("snapshots")) {
        const json& js = raw.at("snapshots");
        if (js.contains("times")) {
            snaps = js.at("times").get<std::vector<double>>();
        } else if (js.contains("every")) {
            const double every = js.at("every").get<double>();
            if (every > 0.0)
                for (double t = every; t <= cfg.horizon + 1e-9; t += every) snaps.push_back(t);
        }
    }
    if (snaps.empty()) snaps = {cfg.horizon};
    std::sort(snaps.begin(), snaps.end());
    const std::string prefix =
        raw.contains("output") ? raw.at("output").value("prefix", "run") : std::string("run");

    const fs::path dir = prepare_output_dir(cfg.output_dir, out_flag);

    if (cfg.model.kind == "burgers" || cfg.model.kind == "levelset1d") {
        cfg.model.grid.validate();
        fida::Field1D u = fida::build_initial_field(cfg.model.grid, cfg.model.initial);
        const fida::ProcessNoiseSpec& noise = cfg.model.process_noise;
        fida::Rng rng(fida::substream(cfg.seed, {1}));
        double t = 0.0;
        int index = 0;
        for (double target : snaps) {
            while (t < target - 1e-12) {
                const double h = std::min(cfg.model.dt, target - t);
                u = fida::step_field_model(cfg.model, u, cfg.model.params, h);
                if (!noise.silent()) {
                    const double scale = std::sqrt(h);
                    for (std::size_t i = 0; i < u.values.size(); ++i) {
                        const double s = noise.stddev_for(i);
                        if (s > 0.0) u.values[i] += s * scale * rng.normal();
                    }
                }
                t += h;
            }
            const std::string stem = prefix + "_snap" + std::to_string(index++);
            fida::io::write_file((dir / (stem + ".json")).string(), fida::io::field_to_json(u));
            fida::io::write_file((dir / (stem + ".csv")).string(), fida::io::field_to_csv(u));
        }
        std::cout << "snapshots=" << snaps.size() << " final_time=" << fida::io::format_double(t)
                  << "\n";
    } else if (cfg.model.kind == "lorenz") {
        const fida::OdeState x0 = fida::build_initial_state(cfg.model.initial);
        fida::ProcessNoiseSpec noise = cfg.model.process_noise;
        noise.seed = fida::substream(cfg.seed, {1});
        const fida::OdeTrajectory full = fida::integrate_ode(
            fida::ode_rhs_for(cfg.model.kind), x0, cfg.model.params, 0.0, cfg.horizon, cfg.model.dt,
            noise);
        // Initial state plus the states nearest each requested time.
        fida::OdeTrajectory sampled;
        sampled.times.push_back(full.times.front());
        sampled.states.push_back(full.states.front());
        std::size_t cursor = 0;
        for (double target : snaps) {
            while (cursor + 1 < full.times.size() && full.times[cursor] < target - 1e-9) ++cursor;
            sampled.times.push_back(full.times[cursor]);
            sampled.states.push_back(full.states[cursor]);
        }
        const std::string stem = prefix + "_trajectory";
        fida::io::write_file((dir / (stem + ".json")).string(), fida::io::trajectory_to_json(sampled));
        fida::io::write_file((dir / (stem + ".csv")).string(), fida::io::trajectory_to_csv(sampled));
        std::cout << "snapshots=" << snaps.size() << " final_time="
                  << fida::io::format_double(full.times.back()) << "\n";
    } else {
        throw fida::ConfigError("unknown model kind: " + cfg.model.kind);
    }
    return kOk;
}

int cmd_features(const std::string& input_path, const std::string& op, double m, double c, double tol,
                 int component, double time, const std::string& out_path) {
    const std::string text = fida::io::read_file(input_path);
    fida::FeatureSet fs;
    if (op == "peaks") {
        const fida::OdeTrajectory traj = fida::io::trajectory_from_json(text);
        if (component < 0 || traj.states.empty() ||
            static_cast<std::size_t>(component) >= traj.states.front().size())
            throw fida::ConfigError("trajectory component out of range");
        fs = fida::extract_peaks(traj.series(static_cast<std::size_t>(component)));
    } else if (fida::io::json_is_field2d(text)) {
        const fida::Field2D u = fida::io::field2d_from_json(text);
        if (op == "level")
            fs = fida::extract_levelset(u, c, time);
        else
            throw fida::ConfigError("2-d fields support only --op level");
    } else {
        const fida::Field1D u = fida::io::field1d_from_json(text);
        if (op == "front")
            fs = fida::extract_front(u, m, time);
        else if (op == "threshold")
            fs = fida::extract_threshold(u, m, time);
        else if (op == "argmax")
            fs = fida::extract_argmax(u, tol, true, time);
        else if (op == "level")
            fs = fida::extract_levelset(u, c, time);
        else
            throw fida::ConfigError("unknown operator: " + op);
    }

    std::string out = out_path;
    if (out.empty()) out = fs::path(input_path).replace_extension("").string() + "_features.json";
    fida::io::write_file(out, fida::io::featureset_to_json(fs));
    std::cout << "count=" << fs.size() << "\n";
    return kOk;
}

int cmd_metric(const std::string& a_path, const std::string& b_path, const std::string& metric,
               double cutoff, double order, double value_weight) {
    const fida::FeatureSet a = fida::io::featureset_from_json(fida::io::read_file(a_path));
    const fida::FeatureSet b = fida::io::featureset_from_json(fida::io::read_file(b_path));
    fida::MetricSpec spec;
    spec.kind = fida::metric_kind_from_string(metric);
    spec.ospa_cutoff = cutoff;
    spec.ospa_order = order;
    spec.value_weight = value_weight;
    const double d = fida::set_distance(a, b, spec);
    std::printf("%.12g\n", d);
    return kOk;
}

int cmd_twin(const GlobalOptions& opts, const std::string& config_path, const std::string& out_flag) {
    fida::TwinConfig cfg = fida::io::twin_config_from_json(fida::io::read_file(config_path));
    apply_seed_override(opts, cfg.seed);
    const fida::TwinReport report = fida::run_twin(cfg);

    const fs::path dir = prepare_output_dir(cfg.output_dir, out_flag);
    fida::io::write_file((dir / "report.json").string(), fida::io::twin_report_to_json(report, cfg));
    fida::io::write_file((dir / "report.csv").string(), fida::io::twin_report_to_csv(report));
    fida::io::write_file((dir / "diagnostics.json").string(),
                         fida::io::twin_diagnostics_to_json(report));

    std::cout << "cycles=" << report.cycles.size() << " rmse_analysis="
              << fida::io::format_double(report.time_mean_rmse_analysis) << " rmse_freerun="
              << fida::io::format_double(report.time_mean_rmse_freerun);
    if (report.final_param_est)
        std::cout << " param_est=" << fida::io::format_double(*report.final_param_est)
                  << " param_err=" << fida::io::format_double(*report.final_param_err);
    std::cout << "\n";
    return kOk;
}

int cmd_estimate(const GlobalOptions& opts, const std::string& config_path, const std::string& out_flag) {
    fida::TwinConfig cfg = fida::io::twin_config_from_json(fida::io::read_file(config_path));
    apply_seed_override(opts, cfg.seed);
    if (cfg.method.kind != "peakmap")
        throw fida::ConfigError("estimate needs a config with method.kind == \"peakmap\"");
    const fida::TwinReport report = fida::run_twin(cfg);
    if (!report.estimate) throw fida::EstimationError("estimation produced no result");

    const fs::path dir = prepare_output_dir(cfg.output_dir, out_flag);
    json j;
    j["schema"] = fida::kSchemaVersion;
    j["p_hat"] = report.estimate->p_hat;
    j["cost"] = report.estimate->cost_at_p_hat;
    j["unknown"] = cfg.method.unknown;
    j["truth"] = cfg.model.params.get(cfg.method.unknown);
    fida::io::write_file((dir / "estimate.json").string(), j.dump(2) + "\n");
    fida::io::write_file((dir / "cost_curve.csv").string(),
                         fida::io::cost_curve_to_csv(report.estimate->cost_curve));

    std::cout << "p_hat=" << fida::io::format_double(report.estimate->p_hat)
              << " cost=" << fida::io::format_double(report.estimate->cost_at_p_hat) << "\n";
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Feature-informed data assimilation toolkit"};
    app.set_version_flag("--version", fida::kVersion);
    app.require_subcommand(1);

    GlobalOptions opts;
    std::uint64_t seed_flag = 0;
    auto* seed_opt = app.add_option("--seed", seed_flag, "Seed override (wins over FIDA_SEED)");
    app.add_option("--threads", opts.threads, "Worker thread cap (default: machine parallelism)");
    app.add_flag("-v,--verbose", opts.verbosity, "Verbose logging to stderr");

    std::string config_path, out_dir;
    auto* sim = app.add_subcommand("simulate", "Run a model and write snapshots");
    sim->add_option("--config", config_path, "Simulation config JSON")->required();
    sim->add_option("--out", out_dir, "Output directory override");

    std::string feat_input, feat_op, feat_out;
    double feat_m = 0.0, feat_c = 0.0, feat_tol = 0.0, feat_time = 0.0;
    int feat_component = 2;
    auto* feat = app.add_subcommand("features", "Extract a feature set from a field or trajectory");
    feat->add_option("input", feat_input, "Field or trajectory JSON file")->required();
    feat->add_option("--op", feat_op, "front|threshold|argmax|level|peaks")->required();
    auto* feat_m_opt = feat->add_option("--m", feat_m, "Gradient/value threshold");
    feat->add_option("--c", feat_c, "Level value");
    feat->add_option("--tol", feat_tol, "Relative argmax tolerance");
    feat->add_option("--component", feat_component, "Trajectory component for peaks");
    feat->add_option("--time", feat_time, "Observation time stamp");
    feat->add_option("--out", feat_out, "Output feature-set path");

    std::string metric_a, metric_b, metric_kind = "ospa";
    double metric_cutoff = 0.25, metric_order = 2.0, metric_weight = 0.0;
    auto* met = app.add_subcommand("metric", "Distance between two feature-set files");
    met->add_option("a", metric_a, "First feature-set JSON")->required();
    met->add_option("b", metric_b, "Second feature-set JSON")->required();
    met->add_option("--metric", metric_kind, "hausdorff|chamfer|ospa");
    met->add_option("--cutoff", metric_cutoff, "OSPA cutoff c");
    met->add_option("--order", metric_order, "OSPA order p");
    met->add_option("--value-weight", metric_weight, "Weight of the value component");

    std::string twin_config, twin_out;
    auto* twin = app.add_subcommand("twin", "Run a twin experiment and write the report");
    twin->add_option("--config", twin_config, "Twin config JSON")->required();
    twin->add_option("--out", twin_out, "Output directory override");

    std::string est_config, est_out;
    auto* est = app.add_subcommand("estimate", "Peak-map parameter estimation");
    est->add_option("--config", est_config, "Estimation config JSON")->required();
    est->add_option("--out", est_out, "Output directory override");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfigError;
    }

    if (seed_opt->count() > 0) opts.seed = seed_flag;
    if (opts.threads > 0) fida::set_max_threads(opts.threads);

    try {
        if (sim->parsed()) return cmd_simulate(opts, config_path, out_dir);
        if (feat->parsed()) {
            if ((feat_op == "front" || feat_op == "threshold") && feat_m_opt->count() == 0)
                throw fida::ConfigError("--m is required for --op " + feat_op);
            return cmd_features(feat_input, feat_op, feat_m, feat_c, feat_tol, feat_component,
                                feat_time, feat_out);
        }
        if (met->parsed())
            return cmd_metric(metric_a, metric_b, metric_kind, metric_cutoff, metric_order,
                              metric_weight);
        if (twin->parsed()) return cmd_twin(opts, twin_config, twin_out);
        if (est->parsed()) return cmd_estimate(opts, est_config, est_out);
    } catch (const fida::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const fida::KindMismatchError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const fida::EmptySetError& e) {
        std::cerr << "metric error: " << e.what() << "\n";
        return kMetricDomainError;
    } catch (const fida::BlowUpError& e) {
        std::cerr << "numerical failure at t=" << e.time << ": " << e.what() << "\n";
        return kNumericalError;
    } catch (const fida::InsufficientDataError& e) {
        std::cerr << "estimation error: " << e.what() << "\n";
        return kEstimationError;
    } catch (const fida::EstimationError& e) {
        std::cerr << "estimation error: " << e.what() << "\n";
        return kEstimationError;
    } catch (const fida::PreconditionError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kNumericalError;
    } catch (const fida::DomainError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kNumericalError;
    } catch (const fida::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kOk;
}
