#include "fida/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fida/errors.hpp"
#include "fida/version.hpp"

namespace fida::io {

using nlohmann::json;

namespace {

json parse(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("invalid JSON: ") + e.what());
    }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
    }
}

template <typename T>
T require(const json& j, const char* key) {
    if (!j.contains(key)) throw ConfigError(std::string("missing required key '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
    }
}

json grid_to_json(const Grid1D& g) {
    return {{"x0", g.x0}, {"dx", g.dx}, {"n", g.n}, {"periodic", g.periodic}};
}

Grid1D grid_from_json(const json& j) {
    Grid1D g;
    g.x0 = require<double>(j, "x0");
    g.dx = require<double>(j, "dx");
    g.n = require<int>(j, "n");
    g.periodic = get_or<bool>(j, "periodic", true);
    return g;
}

}  // namespace

std::string field_to_json(const Field1D& f) {
    json j;
    j["grid"] = grid_to_json(f.grid);
    j["values"] = f.values;
    return j.dump();
}

std::string field_to_json(const Field2D& f) {
    json j;
    j["grid"] = grid_to_json(f.gridx);
    j["gridy"] = grid_to_json(f.gridy);
    j["values"] = f.values;
    return j.dump();
}

Field1D field1d_from_json(const std::string& text) {
    const json j = parse(text);
    Field1D f;
    f.grid = grid_from_json(require<json>(j, "grid"));
    f.values = require<std::vector<double>>(j, "values");
    f.validate();
    return f;
}

Field2D field2d_from_json(const std::string& text) {
    const json j = parse(text);
    Field2D f;
    f.gridx = grid_from_json(require<json>(j, "grid"));
    f.gridy = grid_from_json(require<json>(j, "gridy"));
    f.values = require<std::vector<double>>(j, "values");
    f.validate();
    return f;
}

bool json_is_field2d(const std::string& text) { return parse(text).contains("gridy"); }

std::string featureset_to_json(const FeatureSet& fs) {
    json points = json::array();
    for (const auto& p : fs.points) {
        json pt;
        if (fs.dim == 2)
            pt["loc"] = {p.x, p.y};
        else
            pt["loc"] = p.x;
        pt["value"] = p.value ? json(*p.value) : json(nullptr);
        points.push_back(pt);
    }
    json j;
    j["kind"] = to_string(fs.kind);
    j["time"] = fs.time;
    j["degenerate"] = fs.degenerate;
    j["points"] = points;
    return j.dump();
}

FeatureSet featureset_from_json(const std::string& text) {
    const json j = parse(text);
    FeatureSet fs;
    fs.kind = feature_kind_from_string(require<std::string>(j, "kind"));
    fs.time = get_or<double>(j, "time", 0.0);
    fs.degenerate = get_or<bool>(j, "degenerate", false);
    for (const auto& pt : require<json>(j, "points")) {
        FeaturePoint p;
        const json& loc = pt.at("loc");
        if (loc.is_array()) {
            fs.dim = 2;
            p.x = loc.at(0).get<double>();
            p.y = loc.at(1).get<double>();
        } else {
            p.x = loc.get<double>();
        }
        if (pt.contains("value") && !pt.at("value").is_null()) p.value = pt.at("value").get<double>();
        fs.points.push_back(p);
    }
    fs.canonicalize();
    return fs;
}

std::string trajectory_to_json(const OdeTrajectory& traj) {
    json states = json::array();
    for (const auto& s : traj.states) states.push_back(s.components);
    json j;
    j["times"] = traj.times;
    j["states"] = states;
    return j.dump();
}

OdeTrajectory trajectory_from_json(const std::string& text) {
    const json j = parse(text);
    OdeTrajectory traj;
    traj.times = require<std::vector<double>>(j, "times");
    for (const auto& s : require<json>(j, "states")) traj.states.push_back({s.get<std::vector<double>>()});
    if (traj.times.size() != traj.states.size())
        throw ConfigError("trajectory times/states length mismatch");
    return traj;
}

namespace {

json params_to_json(const ParameterVector& p) {
    json j = json::object();
    for (const auto& e : p.entries()) {
        json entry;
        entry["value"] = e.value;
        if (std::isfinite(e.lo)) entry["lo"] = e.lo;
        if (std::isfinite(e.hi)) entry["hi"] = e.hi;
        j[e.name] = entry;
    }
    return j;
}

ParameterVector params_from_json(const json& j) {
    ParameterVector p;
    for (auto it = j.begin(); it != j.end(); ++it) {
        const json& v = it.value();
        if (v.is_number()) {
            p.define(it.key(), v.get<double>());
        } else {
            const double value = require<double>(v, "value");
            const double lo = get_or<double>(v, "lo", -std::numeric_limits<double>::infinity());
            const double hi = get_or<double>(v, "hi", std::numeric_limits<double>::infinity());
            p.define(it.key(), value, lo, hi);
        }
    }
    return p;
}

json initial_to_json(const InitialSpec& init) {
    json j;
    j["kind"] = init.kind;
    if (init.kind == "sin") {
        j["amplitude"] = init.amplitude;
        j["phase"] = init.phase;
    } else if (init.kind == "signed_distance") {
        j["front"] = init.front;
    } else if (init.kind == "values") {
        j["values"] = init.values;
    } else if (init.kind == "state") {
        j["state"] = init.state;
    }
    return j;
}

InitialSpec initial_from_json(const json& j) {
    InitialSpec init;
    init.kind = require<std::string>(j, "kind");
    init.amplitude = get_or<double>(j, "amplitude", 1.0);
    init.phase = get_or<double>(j, "phase", 0.0);
    init.front = get_or<double>(j, "front", 0.5);
    init.values = get_or<std::vector<double>>(j, "values", {});
    init.state = get_or<std::vector<double>>(j, "state", {});
    return init;
}

json noise_to_json(const ProcessNoiseSpec& n) {
    json j;
    j["stddev"] = n.stddev;
    return j;
}

ProcessNoiseSpec process_noise_from_json(const json& j) {
    ProcessNoiseSpec n;
    if (j.contains("stddev")) {
        const json& s = j.at("stddev");
        if (s.is_number())
            n.stddev = {s.get<double>()};
        else
            n.stddev = s.get<std::vector<double>>();
    }
    return n;
}

json metric_to_json(const MetricSpec& m) {
    return {{"kind", to_string(m.kind)},
            {"cutoff", m.ospa_cutoff},
            {"order", m.ospa_order},
            {"value_weight", m.value_weight}};
}

MetricSpec metric_from_json(const json& j, const MetricSpec& fallback) {
    MetricSpec m = fallback;
    if (j.contains("kind")) m.kind = metric_kind_from_string(j.at("kind").get<std::string>());
    m.ospa_cutoff = get_or<double>(j, "cutoff", m.ospa_cutoff);
    m.ospa_order = get_or<double>(j, "order", m.ospa_order);
    m.value_weight = get_or<double>(j, "value_weight", m.value_weight);
    return m;
}

json feature_noise_to_json(const FeatureNoiseSpec& n) {
    return {{"location_stddev", n.location_stddev},
            {"value_stddev", n.value_stddev},
            {"detect_prob", n.detect_prob},
            {"clutter_rate", n.clutter_rate}};
}

FeatureNoiseSpec feature_noise_from_json(const json& j) {
    FeatureNoiseSpec n;
    n.location_stddev = get_or<double>(j, "location_stddev", 0.0);
    n.value_stddev = get_or<double>(j, "value_stddev", 0.0);
    n.detect_prob = get_or<double>(j, "detect_prob", 1.0);
    n.clutter_rate = get_or<double>(j, "clutter_rate", 0.0);
    return n;
}

}  // namespace

TwinConfig twin_config_from_json(const std::string& text) {
    const json j = parse(text);
    TwinConfig cfg;
    cfg.schema = require<int>(j, "schema");
    cfg.seed = get_or<std::uint64_t>(j, "seed", 0);
    cfg.horizon = require<double>(j, "horizon");

    const json jm = require<json>(j, "model");
    cfg.model.kind = require<std::string>(jm, "kind");
    if (jm.contains("grid")) cfg.model.grid = grid_from_json(jm.at("grid"));
    cfg.model.nu = get_or<double>(jm, "nu", 1e-3);
    cfg.model.advection = get_or<double>(jm, "advection", 0.0);
    if (jm.contains("params")) cfg.model.params = params_from_json(jm.at("params"));
    cfg.model.dt = require<double>(jm, "dt");
    cfg.model.initial = initial_from_json(require<json>(jm, "initial"));
    if (jm.contains("process_noise"))
        cfg.model.process_noise = process_noise_from_json(jm.at("process_noise"));

    if (j.contains("observations")) {
        const json jo = j.at("observations");
        if (jo.contains("schedule")) {
            const json js = jo.at("schedule");
            cfg.observations.schedule.start = get_or<double>(js, "start", 0.0);
            cfg.observations.schedule.stop = get_or<double>(js, "stop", 0.0);
            cfg.observations.schedule.every = get_or<double>(js, "every", 0.0);
            cfg.observations.schedule.explicit_times = get_or<std::vector<double>>(js, "times", {});
        }
        if (jo.contains("operator")) {
            const json jop = jo.at("operator");
            cfg.observations.op.op = require<std::string>(jop, "op");
            cfg.observations.op.m = get_or<double>(jop, "m", 0.0);
            cfg.observations.op.c = get_or<double>(jop, "c", 0.0);
            cfg.observations.op.tol = get_or<double>(jop, "tol", 0.0);
            cfg.observations.op.component = get_or<int>(jop, "component", 2);
        }
        if (jo.contains("noise")) cfg.observations.noise = feature_noise_from_json(jo.at("noise"));
    }

    const json jme = get_or<json>(j, "method", json::object());
    cfg.method.kind = get_or<std::string>(jme, "kind", "");
    cfg.method.ensemble_size = get_or<int>(jme, "ensemble_size", 50);
    cfg.method.inflation = get_or<double>(jme, "inflation", 1.0);
    if (jme.contains("featurization")) {
        const json jf = jme.at("featurization");
        cfg.method.featurization.expected_cardinality = get_or<int>(jf, "k", 1);
        if (jf.contains("rule"))
            cfg.method.featurization.rule = selection_rule_from_string(jf.at("rule").get<std::string>());
        if (jf.contains("pad"))
            cfg.method.featurization.pad_policy = pad_policy_from_string(jf.at("pad").get<std::string>());
    }
    cfg.method.obs_noise_floor = get_or<double>(jme, "obs_noise_floor", 0.0);
    cfg.method.particle_count = get_or<int>(jme, "particles", 200);
    if (jme.contains("likelihood")) {
        const json jl = jme.at("likelihood");
        if (jl.contains("metric")) cfg.method.likelihood.metric = metric_from_json(jl.at("metric"), {});
        cfg.method.likelihood.bandwidth = get_or<double>(jl, "bandwidth", 0.1);
    }
    cfg.method.unknown = get_or<std::string>(jme, "unknown", "");
    if (jme.contains("bounds")) {
        const auto bounds = jme.at("bounds").get<std::vector<double>>();
        if (bounds.size() != 2) throw ConfigError("method bounds must be [lo, hi]");
        cfg.method.lo = bounds[0];
        cfg.method.hi = bounds[1];
    }
    cfg.method.grid_points = get_or<int>(jme, "grid_points", 17);
    cfg.method.refine_iters = get_or<int>(jme, "refine_iters", 20);
    cfg.method.transient_cut = get_or<double>(jme, "transient_cut", 5.0);
    if (jme.contains("metric"))
        cfg.method.peak_metric = metric_from_json(jme.at("metric"), cfg.method.peak_metric);

    if (j.contains("prior")) {
        const json jp = j.at("prior");
        if (jp.contains("initial")) cfg.prior.initial = initial_from_json(jp.at("initial"));
        cfg.prior.ic_stddev = get_or<double>(jp, "ic_stddev", 0.0);
        cfg.prior.ic_modes = get_or<int>(jp, "ic_modes", 3);
        if (jp.contains("params")) {
            for (auto it = jp.at("params").begin(); it != jp.at("params").end(); ++it) {
                ParamPrior pp;
                pp.name = it.key();
                const json& v = it.value();
                pp.dist = get_or<std::string>(v, "dist", "gaussian");
                pp.mean = get_or<double>(v, "mean", 0.0);
                pp.stddev = get_or<double>(v, "stddev", 0.0);
                pp.lo = get_or<double>(v, "lo", -1e300);
                pp.hi = get_or<double>(v, "hi", 1e300);
                cfg.prior.params.push_back(pp);
            }
        }
    }

    if (j.contains("output")) cfg.output_dir = get_or<std::string>(j.at("output"), "dir", "");
    return cfg;
}

std::string twin_config_to_json(const TwinConfig& cfg) {
    json jm;
    jm["kind"] = cfg.model.kind;
    if (cfg.model.is_field_model()) jm["grid"] = grid_to_json(cfg.model.grid);
    jm["nu"] = cfg.model.nu;
    jm["advection"] = cfg.model.advection;
    jm["params"] = params_to_json(cfg.model.params);
    jm["dt"] = cfg.model.dt;
    jm["initial"] = initial_to_json(cfg.model.initial);
    jm["process_noise"] = noise_to_json(cfg.model.process_noise);

    json js;
    if (!cfg.observations.schedule.explicit_times.empty()) {
        js["times"] = cfg.observations.schedule.explicit_times;
    } else {
        js["start"] = cfg.observations.schedule.start;
        js["stop"] = cfg.observations.schedule.stop;
        js["every"] = cfg.observations.schedule.every;
    }
    json jo;
    jo["schedule"] = js;
    jo["operator"] = {{"op", cfg.observations.op.op},
                      {"m", cfg.observations.op.m},
                      {"c", cfg.observations.op.c},
                      {"tol", cfg.observations.op.tol},
                      {"component", cfg.observations.op.component}};
    jo["noise"] = feature_noise_to_json(cfg.observations.noise);

    json jme;
    jme["kind"] = cfg.method.kind;
    if (cfg.method.kind == "enkf") {
        jme["ensemble_size"] = cfg.method.ensemble_size;
        jme["inflation"] = cfg.method.inflation;
        jme["featurization"] = {{"k", cfg.method.featurization.expected_cardinality},
                                {"rule", to_string(cfg.method.featurization.rule)},
                                {"pad", to_string(cfg.method.featurization.pad_policy)}};
        jme["obs_noise_floor"] = cfg.method.obs_noise_floor;
    } else if (cfg.method.kind == "pf") {
        jme["particles"] = cfg.method.particle_count;
        jme["likelihood"] = {{"metric", metric_to_json(cfg.method.likelihood.metric)},
                             {"bandwidth", cfg.method.likelihood.bandwidth}};
    } else if (cfg.method.kind == "peakmap") {
        jme["unknown"] = cfg.method.unknown;
        jme["bounds"] = {cfg.method.lo, cfg.method.hi};
        jme["grid_points"] = cfg.method.grid_points;
        jme["refine_iters"] = cfg.method.refine_iters;
        jme["transient_cut"] = cfg.method.transient_cut;
        jme["metric"] = metric_to_json(cfg.method.peak_metric);
    }

    json jp;
    if (cfg.prior.initial) jp["initial"] = initial_to_json(*cfg.prior.initial);
    jp["ic_stddev"] = cfg.prior.ic_stddev;
    jp["ic_modes"] = cfg.prior.ic_modes;
    if (!cfg.prior.params.empty()) {
        json params = json::object();
        for (const auto& pp : cfg.prior.params)
            params[pp.name] = {{"dist", pp.dist},
                               {"mean", pp.mean},
                               {"stddev", pp.stddev},
                               {"lo", pp.lo},
                               {"hi", pp.hi}};
        jp["params"] = params;
    }

    json j;
    j["schema"] = cfg.schema;
    j["seed"] = cfg.seed;
    j["horizon"] = cfg.horizon;
    j["model"] = jm;
    j["observations"] = jo;
    j["method"] = jme;
    j["prior"] = jp;
    if (!cfg.output_dir.empty()) j["output"] = {{"dir", cfg.output_dir}};
    return j.dump();
}

namespace {

json cycle_to_json(const CycleRecord& rec) {
    json j;
    j["cycle"] = rec.cycle;
    j["time"] = rec.time;
    j["rmse_analysis"] = rec.rmse_analysis;
    j["rmse_freerun"] = rec.rmse_freerun;
    j["spread"] = rec.spread;
    j["ess"] = rec.ess;
    j["featurization_failures"] = rec.featurization_failures;
    j["feature_error"] = rec.feature_error;
    j["param_est"] = rec.param_est;
    j["param_err"] = rec.param_err;
    j["analysis_skipped"] = rec.analysis_skipped;
    return j;
}

}  // namespace

std::string twin_report_to_json(const TwinReport& report, const TwinConfig& cfg) {
    json cycles = json::array();
    for (const auto& rec : report.cycles) cycles.push_back(cycle_to_json(rec));

    json j;
    j["schema"] = report.schema;
    j["version"] = report.version;
    j["seed"] = report.seed;
    j["config"] = json::parse(twin_config_to_json(cfg));
    j["cycles"] = cycles;
    j["summary"] = {{"cycle_count", report.cycles.size()},
                    {"time_mean_rmse_analysis", report.time_mean_rmse_analysis},
                    {"time_mean_rmse_freerun", report.time_mean_rmse_freerun},
                    {"final_param_est",
                     report.final_param_est ? json(*report.final_param_est) : json(nullptr)},
                    {"final_param_err",
                     report.final_param_err ? json(*report.final_param_err) : json(nullptr)}};
    j["failures"] = report.failures;
    if (report.estimate) {
        json curve = json::array();
        for (const auto& [p, c] : report.estimate->cost_curve) curve.push_back({p, c});
        j["estimate"] = {{"p_hat", report.estimate->p_hat},
                         {"cost", report.estimate->cost_at_p_hat},
                         {"cost_curve", curve}};
    }
    return j.dump(2) + "\n";
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

std::string twin_report_to_csv(const TwinReport& report) {
    std::string out = "cycle,time,rmse_analysis,rmse_freerun,spread,ess,param_est,param_err\n";
    for (const auto& rec : report.cycles) {
        out += std::to_string(rec.cycle);
        out += ',';
        out += format_double(rec.time);
        out += ',';
        out += format_double(rec.rmse_analysis);
        out += ',';
        out += format_double(rec.rmse_freerun);
        out += ',';
        out += format_double(rec.spread);
        out += ',';
        out += format_double(rec.ess);
        out += ',';
        out += format_double(rec.param_est);
        out += ',';
        out += format_double(rec.param_err);
        out += '\n';
    }
    return out;
}

std::string twin_diagnostics_to_json(const TwinReport& report) {
    json cycles = json::array();
    for (const auto& rec : report.cycles) {
        json j;
        j["cycle"] = rec.cycle;
        j["time"] = rec.time;
        j["spread"] = rec.spread;
        j["ess"] = rec.ess;
        j["featurization_failures"] = rec.featurization_failures;
        j["innovation_norm"] = rec.innovation_norm;
        j["wall_ms"] = rec.wall_ms;
        cycles.push_back(j);
    }
    json j;
    j["schema"] = report.schema;
    j["cycles"] = cycles;
    return j.dump(2) + "\n";
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write file: " + path);
    out << content;
    if (!out) throw ConfigError("failed writing file: " + path);
}

std::string field_to_csv(const Field1D& f) {
    std::string out = "x,u\n";
    for (int i = 0; i < f.grid.n; ++i) {
        out += format_double(f.grid.center(i));
        out += ',';
        out += format_double(f.values[i]);
        out += '\n';
    }
    return out;
}

std::string trajectory_to_csv(const OdeTrajectory& traj) {
    const std::size_t dim = traj.states.empty() ? 0 : traj.states.front().size();
    std::string out = "t";
    for (std::size_t c = 0; c < dim; ++c) out += ",x" + std::to_string(c);
    out += '\n';
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        out += format_double(traj.times[k]);
        for (std::size_t c = 0; c < dim; ++c) {
            out += ',';
            out += format_double(traj.states[k][c]);
        }
        out += '\n';
    }
    return out;
}

std::string cost_curve_to_csv(const std::vector<std::pair<double, double>>& curve) {
    std::string out = "param,cost\n";
    for (const auto& [p, c] : curve) {
        out += format_double(p);
        out += ',';
        out += format_double(c);
        out += '\n';
    }
    return out;
}

}  // namespace fida::io
