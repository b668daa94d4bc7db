#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fida/assimilation.hpp"
#include "fida/features.hpp"
#include "fida/models.hpp"

namespace fida {

// Initial condition recipes shared by truth and prior. "sin" and
// "signed_distance" are parametric; "values"/"state" are explicit.
struct InitialSpec {
    std::string kind = "sin";  // sin | signed_distance | values | state
    double amplitude = 1.0;
    double phase = 0.0;        // fraction of the domain length
    double front = 0.5;        // zero-crossing location for signed_distance
    std::vector<double> values;
    std::vector<double> state;
};

struct ModelSpec {
    std::string kind;  // burgers | levelset1d | lorenz
    Grid1D grid;
    double nu = 1e-3;        // burgers
    double advection = 0.0;  // levelset1d constant velocity
    ParameterVector params;  // lorenz sigma/rho/beta; levelset1d sl
    double dt = 1e-3;
    InitialSpec initial;
    ProcessNoiseSpec process_noise;

    bool is_field_model() const { return kind == "burgers" || kind == "levelset1d"; }
};

struct ScheduleSpec {
    double start = 0.0;
    double stop = 0.0;
    double every = 0.0;
    std::vector<double> explicit_times;  // overrides start/stop/every if set

    std::vector<double> times() const;
};

struct OperatorSpec {
    std::string op;  // front | threshold | argmax | level | peaks
    double m = 0.0;
    double c = 0.0;
    double tol = 0.0;
    int component = 2;  // observed ODE component for the peaks operator
};

struct ObservationSpec {
    ScheduleSpec schedule;
    OperatorSpec op;
    FeatureNoiseSpec noise;
};

struct MethodSpec {
    std::string kind;  // enkf | pf | peakmap

    // enkf
    int ensemble_size = 50;
    double inflation = 1.0;
    FeaturizationSpec featurization;
    double obs_noise_floor = 0.0;  // lower bound on the assumed obs stddev

    // pf
    int particle_count = 200;
    LikelihoodSpec likelihood;

    // peakmap
    std::string unknown;
    double lo = 0.0;
    double hi = 0.0;
    int grid_points = 17;
    int refine_iters = 20;
    double transient_cut = 5.0;
    MetricSpec peak_metric{MetricKind::chamfer, 0.25, 2.0, 0.0};
};

struct ParamPrior {
    std::string name;
    std::string dist = "gaussian";  // gaussian | uniform
    double mean = 0.0;
    double stddev = 0.0;
    double lo = -1e300;
    double hi = 1e300;
};

struct PriorSpec {
    std::optional<InitialSpec> initial;  // defaults to the truth initial
    double ic_stddev = 0.0;  // smooth (low-mode Fourier) field perturbations,
                             // per-component Gaussian for ODE states
    int ic_modes = 3;
    std::vector<ParamPrior> params;  // parameters the method estimates
};

struct TwinConfig {
    int schema = 1;
    std::uint64_t seed = 0;
    ModelSpec model;
    double horizon = 1.0;
    ObservationSpec observations;
    MethodSpec method;
    PriorSpec prior;
    std::string output_dir;  // empty: no files written

    void validate() const;
};

struct CycleRecord {
    int cycle = 0;
    double time = 0.0;
    double rmse_analysis = 0.0;
    double rmse_freerun = 0.0;
    double spread = 0.0;
    double ess = 0.0;
    int featurization_failures = 0;
    // Set distance between features of the analysis mean and of the truth
    // field (uncorrupted); nan when not applicable.
    double feature_error = 0.0;
    double param_est = 0.0;
    double param_err = 0.0;
    bool analysis_skipped = false;
    double wall_ms = 0.0;  // diagnostics only, kept out of report files
    double innovation_norm = 0.0;
};

struct TwinReport {
    int schema = 1;
    std::string version;
    std::uint64_t seed = 0;
    std::vector<CycleRecord> cycles;
    double time_mean_rmse_analysis = 0.0;
    double time_mean_rmse_freerun = 0.0;
    std::optional<double> final_param_est;
    std::optional<double> final_param_err;
    std::vector<std::string> failures;  // method failures recorded, not crashed
    std::optional<EstimateResult> estimate;  // peakmap route
};

TwinReport run_twin(const TwinConfig& cfg);

// The control arm: identical setup, no analysis steps. Returns the RMSE of
// the free-running ensemble mean at every scheduled observation time.
std::vector<double> free_run_baseline(const TwinConfig& cfg);

// Truth-generation helpers shared with the CLI.
Field1D build_initial_field(const Grid1D& grid, const InitialSpec& init);
OdeState build_initial_state(const InitialSpec& init);
Field1D step_field_model(const ModelSpec& model, const Field1D& u, const ParameterVector& params,
                         double dt);

}  // namespace fida
