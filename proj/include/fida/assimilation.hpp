#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fida/features.hpp"
#include "fida/models.hpp"
#include "fida/setmetrics.hpp"

namespace fida {

// One ensemble member / particle: a flat state vector (field values or ODE
// components) plus its own copy of the bounded parameters.
struct Member {
    std::vector<double> state;
    ParameterVector params;
};

struct Ensemble {
    std::vector<Member> members;

    std::size_t size() const { return members.size(); }
    std::vector<double> state_mean() const;
    // Mean over state entries of the per-entry ensemble standard deviation.
    double state_spread() const;
    double param_mean(const std::string& name) const;
};

struct ParticleSet {
    std::vector<Member> particles;
    std::vector<double> weights;

    std::size_t size() const { return particles.size(); }
    double effective_sample_size() const;
    std::vector<double> state_mean() const;   // weighted
    double param_mean(const std::string& name) const;  // weighted
    void validate() const;
};

enum class SelectionRule { leftmost_k, largest_k };
enum class PadPolicy { reject, nearest_duplicate };

const char* to_string(SelectionRule rule);
SelectionRule selection_rule_from_string(const std::string& name);
const char* to_string(PadPolicy policy);
PadPolicy pad_policy_from_string(const std::string& name);

// Bridges a variable-cardinality feature set to the fixed-length vector a
// Kalman-type update needs: pick k points by rule, emit sorted locations
// (then values, for value-carrying kinds).
struct FeaturizationSpec {
    int expected_cardinality = 1;
    SelectionRule rule = SelectionRule::leftmost_k;
    PadPolicy pad_policy = PadPolicy::reject;

    void validate() const;
};

struct FeaturizeResult {
    std::vector<double> vec;
    bool padded = false;
};

FeaturizeResult featurize(const FeatureSet& fs, const FeaturizationSpec& spec);

// Predicted observation for one member; nullopt marks a featurization
// failure (member is left unchanged and counted in diagnostics).
using MemberObservation = std::function<std::optional<std::vector<double>>(const Member&)>;

struct EnkfOptions {
    double inflation = 1.0;     // multiplicative, applied to forecast anomalies
    bool perturb_obs = true;    // stochastic EnKF observation perturbations
    double ridge = 1e-10;       // added to P_yy + R if the solve is singular
};

struct EnkfDiagnostics {
    int featurization_failures = 0;
    bool ridge_applied = false;
    double innovation_norm = 0.0;
    double spread_before = 0.0;
    double spread_after = 0.0;
    double wall_ms = 0.0;
};

// Perturbed-observation EnKF analysis with jointly updated (augmented)
// parameters, clipped to their bounds afterwards.
Ensemble enkf_analysis(const Ensemble& ens, const std::vector<double>& y_obs,
                       const std::vector<double>& r_diag, const MemberObservation& h,
                       std::uint64_t seed, const EnkfOptions& options = {},
                       EnkfDiagnostics* diag = nullptr);

struct LikelihoodSpec {
    MetricSpec metric;      // OSPA by default: defined for empty sets
    double bandwidth = 0.1; // lambda in exp(-d^2 / (2 lambda^2))

    void validate() const;
};

using ParticleObservation = std::function<FeatureSet(const Member&)>;

struct PfDiagnostics {
    double ess_before = 0.0;
    double ess_after = 0.0;
    bool resampled = false;
    bool weight_underflow = false;
    double wall_ms = 0.0;
};

// Set-distance pseudo-likelihood reweighting with systematic resampling
// once the effective sample size drops below half the particle count.
ParticleSet pf_update(const ParticleSet& ps, const FeatureSet& y_obs,
                      const LikelihoodSpec& lik, const ParticleObservation& h,
                      std::uint64_t seed, PfDiagnostics* diag = nullptr);

// Peak-map parameter estimation: compare clouds of successive peak-value
// pairs (z_k, z_{k+1}), which are time-free, between observed and simulated
// peaks of a scalar output.
struct PeakMapProblem {
    std::string model_id = "lorenz";
    ParameterVector base_params;
    std::string unknown;          // name of the single scanned parameter
    OdeState initial_state;
    double t0 = 0.0;
    double t1 = 100.0;
    double dt = 1e-3;
    double transient_cut = 5.0;   // peaks before this time are dropped
    std::size_t output_component = 2;
    MetricSpec metric;            // chamfer over the pair clouds

    void validate() const;
};

// Minimum number of observed peaks (after the transient cut) to estimate from.
inline constexpr std::size_t kMinObservedPeaks = 10;

std::vector<FeaturePoint> peak_pairs(const FeatureSet& peaks);

// Chamfer distance between peak-pair clouds; +inf sentinel when the
// simulation at this parameter value blows up or yields too few peaks.
double peak_map_cost(const PeakMapProblem& problem, double value,
                     const FeatureSet& observed_peaks);

struct EstimateResult {
    double p_hat = 0.0;
    double cost_at_p_hat = 0.0;
    // Every (parameter, cost) evaluation, sorted ascending by parameter.
    std::vector<std::pair<double, double>> cost_curve;
};

// Coarse grid scan over [lo, hi] followed by golden-section refinement in
// the bracketing interval of the grid minimum.
EstimateResult estimate_parameter(const PeakMapProblem& problem, double lo, double hi,
                                  int grid_points, int refine_iters,
                                  const FeatureSet& observed_peaks);

}  // namespace fida
