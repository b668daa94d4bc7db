#include "fida/twinlab.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "fida/errors.hpp"
#include "fida/parallel.hpp"
#include "fida/rng.hpp"
#include "fida/setmetrics.hpp"
#include "fida/version.hpp"

namespace fida {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

// Stream tags, fixed so reports are reproducible across builds.
enum : std::uint64_t { kTruthTag = 1, kInitTag = 2, kPropTag = 3, kObsTag = 4, kAnalysisTag = 5 };

double rms_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(a.size()));
}

}  // namespace

std::vector<double> ScheduleSpec::times() const {
    if (!explicit_times.empty()) {
        std::vector<double> t = explicit_times;
        std::sort(t.begin(), t.end());
        return t;
    }
    std::vector<double> t;
    if (every > 0.0) {
        for (int k = 0;; ++k) {
            const double tk = start + static_cast<double>(k) * every;
            if (tk > stop + 1e-9) break;
            t.push_back(tk);
        }
    }
    return t;
}

void TwinConfig::validate() const {
    if (schema != 1) throw ConfigError("unsupported config schema version");
    if (!(horizon > 0.0)) throw ConfigError("horizon must be > 0");
    if (!(model.dt > 0.0)) throw ConfigError("model dt must be > 0");

    const bool field_model = model.kind == "burgers" || model.kind == "levelset1d";
    if (!field_model && model.kind != "lorenz") throw ConfigError("unknown model kind: " + model.kind);
    try {
        model.process_noise.validate();
        observations.noise.validate();
        if (field_model) model.grid.validate();
    } catch (const PreconditionError& e) {
        throw ConfigError(e.what());
    }

    if (method.kind == "enkf" || method.kind == "pf") {
        if (!field_model)
            throw ConfigError("filter methods need a field model (burgers or levelset1d)");
        const auto times = observations.schedule.times();
        if (times.empty()) throw ConfigError("observation schedule is empty");
        for (double t : times)
            if (t <= 0.0 || t > horizon + 1e-9)
                throw ConfigError("observation times must lie within (0, horizon]");
        if (method.kind == "enkf") {
            if (method.ensemble_size < 2) throw ConfigError("ensemble size must be >= 2");
            method.featurization.validate();
        } else {
            if (method.particle_count < 2) throw ConfigError("particle count must be >= 2");
            method.likelihood.validate();
        }
    } else if (method.kind == "peakmap") {
        if (model.kind != "lorenz") throw ConfigError("peakmap estimation needs the lorenz model");
        if (method.unknown.empty()) throw ConfigError("peakmap estimation needs an unknown parameter name");
        if (!model.params.has(method.unknown))
            throw ConfigError("unknown parameter " + method.unknown + " not in model params");
        if (!(method.hi > method.lo)) throw ConfigError("estimation bounds need hi > lo");
    } else {
        throw ConfigError("unknown method kind: " + method.kind);
    }

    for (const auto& pp : prior.params) {
        if (!model.params.has(pp.name))
            throw ConfigError("prior parameter " + pp.name + " not in model params");
        if (!(pp.lo <= pp.hi)) throw ConfigError("prior parameter " + pp.name + " has lo > hi");
        if (pp.dist != "gaussian" && pp.dist != "uniform")
            throw ConfigError("unknown prior distribution: " + pp.dist);
    }
}

Field1D build_initial_field(const Grid1D& grid, const InitialSpec& init) {
    grid.validate();
    Field1D u = Field1D::zeros(grid);
    if (init.kind == "sin") {
        const double length = grid.length();
        for (int i = 0; i < grid.n; ++i) {
            const double frac = (grid.center(i) - grid.x0) / length;
            u.values[i] = init.amplitude * std::sin(2.0 * M_PI * (frac - init.phase));
        }
    } else if (init.kind == "signed_distance") {
        for (int i = 0; i < grid.n; ++i) u.values[i] = grid.center(i) - init.front;
    } else if (init.kind == "values") {
        if (init.values.size() != static_cast<std::size_t>(grid.n))
            throw ConfigError("initial values length does not match the grid");
        u.values = init.values;
    } else {
        throw ConfigError("unknown field initial kind: " + init.kind);
    }
    u.validate();
    return u;
}

OdeState build_initial_state(const InitialSpec& init) {
    if (init.kind != "state" || init.state.empty())
        throw ConfigError("ODE models need an initial of kind 'state'");
    return {init.state};
}

Field1D step_field_model(const ModelSpec& model, const Field1D& u, const ParameterVector& params,
                         double dt) {
    if (model.kind == "burgers") return burgers_step(u, model.nu, dt);
    if (model.kind == "levelset1d") {
        Field1D vel = u;
        std::fill(vel.values.begin(), vel.values.end(), model.advection);
        return levelset_step(u, vel, params.get("sl"), dt);
    }
    throw ConfigError("unknown field model kind: " + model.kind);
}

namespace {

// Advance one field from t to t_next in model-dt steps, adding per-step
// process noise from the member's own stream.
void propagate_field(const ModelSpec& model, std::vector<double>& state, const ParameterVector& params,
                     double t, double t_next, Rng& rng) {
    Field1D u{model.grid, state};
    while (t < t_next - 1e-12) {
        const double h = std::min(model.dt, t_next - t);
        u = step_field_model(model, u, params, h);
        if (!model.process_noise.silent()) {
            const double scale = std::sqrt(h);
            for (std::size_t i = 0; i < u.values.size(); ++i) {
                const double s = model.process_noise.stddev_for(i);
                if (s > 0.0) u.values[i] += s * scale * rng.normal();
            }
        }
        t += h;
    }
    state = std::move(u.values);
}

void propagate_ode(const ModelSpec& model, std::vector<double>& state, const ParameterVector& params,
                   double t, double t_next, Rng& rng) {
    const OdeRhs rhs = ode_rhs_for(model.kind);
    OdeState x{state};
    while (t < t_next - 1e-12) {
        const double h = std::min(model.dt, t_next - t);
        x = rk4_step(rhs, t, x, h, params);
        if (!model.process_noise.silent()) {
            const double scale = std::sqrt(h);
            for (std::size_t i = 0; i < x.size(); ++i) {
                const double s = model.process_noise.stddev_for(i);
                if (s > 0.0) x[i] += s * scale * rng.normal();
            }
        }
        for (double v : x.components)
            if (!(std::abs(v) <= kBlowUpGuard))
                throw BlowUpError("member trajectory exceeded the overflow guard", t + h);
        t += h;
    }
    state = std::move(x.components);
}

void propagate(const ModelSpec& model, std::vector<double>& state, const ParameterVector& params,
               double t, double t_next, Rng& rng) {
    if (model.is_field_model())
        propagate_field(model, state, params, t, t_next, rng);
    else
        propagate_ode(model, state, params, t, t_next, rng);
}

FeatureSet apply_operator(const OperatorSpec& op, const Field1D& u, double time) {
    if (op.op == "front") return extract_front(u, op.m, time);
    if (op.op == "threshold") return extract_threshold(u, op.m, time);
    if (op.op == "argmax") return extract_argmax(u, op.tol, true, time);
    if (op.op == "level") return extract_levelset(u, op.c, time);
    throw ConfigError("unknown observation operator: " + op.op);
}

ParameterVector draw_member_params(const ModelSpec& model, const PriorSpec& prior, Rng& rng) {
    ParameterVector params = model.params;
    for (const auto& pp : prior.params) {
        double v;
        if (pp.dist == "uniform") {
            v = rng.uniform(pp.lo, pp.hi);
        } else {
            v = pp.mean + pp.stddev * rng.normal();
            v = std::clamp(v, pp.lo, pp.hi);
        }
        params.define(pp.name, v, pp.lo, pp.hi);
    }
    return params;
}

// Smooth random field: a few low-wavenumber Fourier modes with Gaussian
// coefficients, pointwise standard deviation ic_stddev.
void perturb_field(std::vector<double>& values, const Grid1D& grid, double stddev, int modes,
                   Rng& rng) {
    if (stddev <= 0.0 || modes < 1) return;
    const double length = grid.length();
    const double amp = stddev / std::sqrt(static_cast<double>(modes));
    for (int m = 1; m <= modes; ++m) {
        const double a = amp * rng.normal();
        const double b = amp * rng.normal();
        for (int i = 0; i < grid.n; ++i) {
            const double arg = 2.0 * M_PI * m * (grid.center(i) - grid.x0) / length;
            values[i] += a * std::cos(arg) / M_SQRT2 + b * std::sin(arg) / M_SQRT2;
        }
    }
}

struct Population {
    std::vector<Member> members;
    std::vector<double> weights;           // pf only
    std::vector<Rng> prop_streams;
};

Population init_population(const TwinConfig& cfg, int count) {
    Population pop;
    pop.members.reserve(static_cast<std::size_t>(count));
    const InitialSpec& init = cfg.prior.initial ? *cfg.prior.initial : cfg.model.initial;
    for (int i = 0; i < count; ++i) {
        Rng rng(substream(cfg.seed, {kInitTag, static_cast<std::uint64_t>(i)}));
        Member m;
        if (cfg.model.is_field_model()) {
            Field1D u = build_initial_field(cfg.model.grid, init);
            perturb_field(u.values, cfg.model.grid, cfg.prior.ic_stddev, cfg.prior.ic_modes, rng);
            m.state = std::move(u.values);
        } else {
            OdeState x = build_initial_state(init);
            for (double& v : x.components) v += cfg.prior.ic_stddev * rng.normal();
            m.state = std::move(x.components);
        }
        m.params = draw_member_params(cfg.model, cfg.prior, rng);
        pop.members.push_back(std::move(m));
        pop.prop_streams.emplace_back(substream(cfg.seed, {kPropTag, static_cast<std::uint64_t>(i)}));
    }
    pop.weights.assign(static_cast<std::size_t>(count), 1.0 / static_cast<double>(count));
    return pop;
}

void propagate_population(const TwinConfig& cfg, Population& pop, double t, double t_next) {
    parallel_for(static_cast<int>(pop.members.size()), [&](int i) {
        propagate(cfg.model, pop.members[i].state, pop.members[i].params, t, t_next,
                  pop.prop_streams[i]);
    });
}

std::vector<double> weighted_mean(const Population& pop, bool weighted) {
    std::vector<double> mean(pop.members.front().state.size(), 0.0);
    const double uniform = 1.0 / static_cast<double>(pop.members.size());
    for (std::size_t k = 0; k < pop.members.size(); ++k) {
        const double w = weighted ? pop.weights[k] : uniform;
        for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += w * pop.members[k].state[i];
    }
    return mean;
}

double population_spread(const Population& pop) {
    Ensemble tmp;
    tmp.members = pop.members;
    return tmp.state_spread();
}

// Distance between the features of two fields; OSPA so that empty forecasts
// still score (cutoff penalty) instead of crashing.
double feature_distance(const TwinConfig& cfg, const std::vector<double>& state,
                        const FeatureSet& truth_fs, double time) {
    MetricSpec spec;
    spec.kind = MetricKind::ospa;
    spec.ospa_cutoff = 0.25 * cfg.model.grid.length();
    spec.ospa_order = 1.0;
    try {
        const Field1D u{cfg.model.grid, state};
        const FeatureSet fs = apply_operator(cfg.observations.op, u, time);
        return ospa(fs, truth_fs, spec);
    } catch (const Error&) {
        return kNan;
    }
}

TwinReport run_twin_peakmap(const TwinConfig& cfg) {
    TwinReport report;
    report.version = kVersion;
    report.seed = cfg.seed;

    const OdeState x0 = build_initial_state(cfg.model.initial);
    ProcessNoiseSpec noise = cfg.model.process_noise;
    noise.seed = substream(cfg.seed, {kTruthTag});
    const OdeTrajectory traj = integrate_ode(ode_rhs_for(cfg.model.kind), x0, cfg.model.params, 0.0,
                                             cfg.horizon, cfg.model.dt, noise);

    const auto component = static_cast<std::size_t>(cfg.observations.op.component);
    FeatureSet peaks = extract_peaks(traj.series(component));
    FeatureNoiseSpec obs_noise = cfg.observations.noise;
    obs_noise.seed = substream(cfg.seed, {kObsTag, 0});
    DomainBounds domain{0.0, cfg.horizon, 0.0, 0.0};
    const FeatureSet observed = corrupt(peaks, obs_noise, domain);

    PeakMapProblem problem;
    problem.model_id = cfg.model.kind;
    problem.base_params = cfg.model.params;
    problem.unknown = cfg.method.unknown;
    problem.initial_state = x0;
    problem.t0 = 0.0;
    problem.t1 = cfg.horizon;
    problem.dt = cfg.model.dt;
    problem.transient_cut = cfg.method.transient_cut;
    problem.output_component = component;
    problem.metric = cfg.method.peak_metric;

    const auto start = std::chrono::steady_clock::now();
    const EstimateResult est =
        estimate_parameter(problem, cfg.method.lo, cfg.method.hi, cfg.method.grid_points,
                           cfg.method.refine_iters, observed);
    const double truth_value = cfg.model.params.get(cfg.method.unknown);

    CycleRecord rec;
    rec.cycle = 0;
    rec.time = cfg.horizon;
    rec.rmse_analysis = kNan;
    rec.rmse_freerun = kNan;
    rec.spread = kNan;
    rec.ess = kNan;
    rec.feature_error = kNan;
    rec.param_est = est.p_hat;
    rec.param_err = std::abs(est.p_hat - truth_value);
    rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                      .count();
    report.cycles.push_back(rec);
    report.time_mean_rmse_analysis = kNan;
    report.time_mean_rmse_freerun = kNan;
    report.final_param_est = est.p_hat;
    report.final_param_err = rec.param_err;
    report.estimate = est;
    return report;
}

TwinReport run_twin_filter(const TwinConfig& cfg, bool assimilate) {
    TwinReport report;
    report.version = kVersion;
    report.seed = cfg.seed;

    const std::vector<double> times = cfg.observations.schedule.times();
    const int count = cfg.method.kind == "enkf" ? cfg.method.ensemble_size : cfg.method.particle_count;
    const bool is_pf = cfg.method.kind == "pf";
    const bool is_field = cfg.model.is_field_model();

    // Truth arm.
    std::vector<double> truth = is_field ? build_initial_field(cfg.model.grid, cfg.model.initial).values
                                         : build_initial_state(cfg.model.initial).components;
    Rng truth_rng(substream(cfg.seed, {kTruthTag}));

    // Analysis arm and the control arm (identical initial population and
    // propagation noise streams; only the analysis differs).
    Population pop = init_population(cfg, count);
    Population free_pop = init_population(cfg, count);

    // Single estimated parameter, if any, drives the param_est/err columns.
    const std::string tracked = cfg.prior.params.size() == 1 ? cfg.prior.params.front().name : "";
    const double tracked_truth = tracked.empty() ? kNan : cfg.model.params.get(tracked);

    const DomainBounds domain = is_field ? domain_of(cfg.model.grid) : DomainBounds{};
    double t = 0.0;
    for (std::size_t k = 0; k < times.size(); ++k) {
        const auto cycle_start = std::chrono::steady_clock::now();
        const double t_obs = times[k];

        propagate(cfg.model, truth, cfg.model.params, t, t_obs, truth_rng);
        propagate_population(cfg, pop, t, t_obs);
        propagate_population(cfg, free_pop, t, t_obs);

        FeatureSet truth_fs;
        FeatureSet y_fs;
        if (is_field) {
            truth_fs = apply_operator(cfg.observations.op, Field1D{cfg.model.grid, truth}, t_obs);
            FeatureNoiseSpec obs_noise = cfg.observations.noise;
            obs_noise.seed = substream(cfg.seed, {kObsTag, static_cast<std::uint64_t>(k)});
            y_fs = corrupt(truth_fs, obs_noise, domain);
        }

        CycleRecord rec;
        rec.cycle = static_cast<int>(k);
        rec.time = t_obs;
        rec.ess = static_cast<double>(count);

        if (assimilate && cfg.method.kind == "enkf") {
            EnkfDiagnostics diag;
            try {
                const FeaturizeResult y_vec = featurize(y_fs, cfg.method.featurization);
                const std::size_t n_loc =
                    static_cast<std::size_t>(cfg.method.featurization.expected_cardinality);
                std::vector<double> r_diag(y_vec.vec.size());
                const double sd_loc =
                    std::max(cfg.observations.noise.location_stddev, cfg.method.obs_noise_floor);
                const double sd_val =
                    std::max(cfg.observations.noise.value_stddev, cfg.method.obs_noise_floor);
                for (std::size_t i = 0; i < r_diag.size(); ++i) {
                    const double sd = i < n_loc ? sd_loc : sd_val;
                    r_diag[i] = sd * sd;
                }

                const MemberObservation h = [&](const Member& m) -> std::optional<std::vector<double>> {
                    try {
                        const Field1D u{cfg.model.grid, m.state};
                        return featurize(apply_operator(cfg.observations.op, u, t_obs),
                                         cfg.method.featurization)
                            .vec;
                    } catch (const Error&) {
                        return std::nullopt;
                    }
                };
                EnkfOptions options;
                options.inflation = cfg.method.inflation;
                Ensemble ens;
                ens.members = pop.members;
                const Ensemble analysed =
                    enkf_analysis(ens, y_vec.vec, r_diag, h,
                                  substream(cfg.seed, {kAnalysisTag, static_cast<std::uint64_t>(k)}),
                                  options, &diag);
                pop.members = analysed.members;
                rec.featurization_failures = diag.featurization_failures;
                rec.innovation_norm = diag.innovation_norm;
            } catch (const Error& e) {
                rec.analysis_skipped = true;
                report.failures.push_back("cycle " + std::to_string(k) + ": " + e.what());
            }
        } else if (assimilate && is_pf) {
            PfDiagnostics diag;
            const ParticleObservation h = [&](const Member& m) {
                const Field1D u{cfg.model.grid, m.state};
                return apply_operator(cfg.observations.op, u, t_obs);
            };
            ParticleSet ps;
            ps.particles = pop.members;
            ps.weights = pop.weights;
            const ParticleSet updated =
                pf_update(ps, y_fs, cfg.method.likelihood, h,
                          substream(cfg.seed, {kAnalysisTag, static_cast<std::uint64_t>(k)}), &diag);
            pop.members = updated.particles;
            pop.weights = updated.weights;
            rec.ess = diag.ess_before;
            if (diag.weight_underflow)
                report.failures.push_back("cycle " + std::to_string(k) + ": weight underflow");
        }

        const std::vector<double> mean = weighted_mean(pop, is_pf);
        const std::vector<double> free_mean = weighted_mean(free_pop, false);
        rec.rmse_analysis = rms_diff(mean, truth);
        rec.rmse_freerun = rms_diff(free_mean, truth);
        rec.spread = population_spread(pop);
        rec.feature_error = is_field ? feature_distance(cfg, mean, truth_fs, t_obs) : kNan;
        if (!tracked.empty()) {
            double acc = 0.0;
            for (std::size_t i = 0; i < pop.members.size(); ++i) {
                const double w = is_pf ? pop.weights[i] : 1.0 / static_cast<double>(count);
                acc += w * pop.members[i].params.get(tracked);
            }
            rec.param_est = acc;
            rec.param_err = std::abs(acc - tracked_truth);
        } else {
            rec.param_est = kNan;
            rec.param_err = kNan;
        }
        rec.wall_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - cycle_start)
                .count();
        report.cycles.push_back(rec);
        t = t_obs;
    }

    double acc_a = 0.0, acc_f = 0.0;
    for (const auto& rec : report.cycles) {
        acc_a += rec.rmse_analysis;
        acc_f += rec.rmse_freerun;
    }
    report.time_mean_rmse_analysis = acc_a / static_cast<double>(report.cycles.size());
    report.time_mean_rmse_freerun = acc_f / static_cast<double>(report.cycles.size());
    if (!tracked.empty() && !report.cycles.empty()) {
        report.final_param_est = report.cycles.back().param_est;
        report.final_param_err = report.cycles.back().param_err;
    }
    return report;
}

}  // namespace

TwinReport run_twin(const TwinConfig& cfg) {
    cfg.validate();
    if (cfg.method.kind == "peakmap") return run_twin_peakmap(cfg);
    return run_twin_filter(cfg, true);
}

std::vector<double> free_run_baseline(const TwinConfig& cfg) {
    if (cfg.method.kind == "peakmap")
        throw ConfigError("free-run baseline applies to filter methods");
    // Lighter validation than run_twin: the control arm never evaluates the
    // observation operator, so ODE models are allowed here too.
    if (cfg.schema != 1) throw ConfigError("unsupported config schema version");
    if (!(cfg.horizon > 0.0)) throw ConfigError("horizon must be > 0");
    if (!(cfg.model.dt > 0.0)) throw ConfigError("model dt must be > 0");
    const auto times = cfg.observations.schedule.times();
    if (times.empty()) throw ConfigError("observation schedule is empty");
    for (double t : times)
        if (t <= 0.0 || t > cfg.horizon + 1e-9)
            throw ConfigError("observation times must lie within (0, horizon]");

    const TwinReport report = run_twin_filter(cfg, false);
    std::vector<double> rmse;
    rmse.reserve(report.cycles.size());
    for (const auto& rec : report.cycles) rmse.push_back(rec.rmse_freerun);
    return rmse;
}

}  // namespace fida
