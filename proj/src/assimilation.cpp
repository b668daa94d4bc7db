#include "fida/assimilation.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "fida/errors.hpp"
#include "fida/rng.hpp"

namespace fida {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double elapsed_ms(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

std::vector<double> Ensemble::state_mean() const {
    std::vector<double> mean(members.empty() ? 0 : members.front().state.size(), 0.0);
    for (const auto& m : members)
        for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += m.state[i];
    for (double& v : mean) v /= static_cast<double>(members.size());
    return mean;
}

double Ensemble::state_spread() const {
    if (members.size() < 2) return 0.0;
    const std::vector<double> mean = state_mean();
    double acc = 0.0;
    for (std::size_t i = 0; i < mean.size(); ++i) {
        double var = 0.0;
        for (const auto& m : members) {
            const double d = m.state[i] - mean[i];
            var += d * d;
        }
        acc += std::sqrt(var / static_cast<double>(members.size() - 1));
    }
    return acc / static_cast<double>(mean.size());
}

double Ensemble::param_mean(const std::string& name) const {
    double acc = 0.0;
    for (const auto& m : members) acc += m.params.get(name);
    return acc / static_cast<double>(members.size());
}

double ParticleSet::effective_sample_size() const {
    double s2 = 0.0;
    for (double w : weights) s2 += w * w;
    return s2 > 0.0 ? 1.0 / s2 : 0.0;
}

std::vector<double> ParticleSet::state_mean() const {
    std::vector<double> mean(particles.empty() ? 0 : particles.front().state.size(), 0.0);
    for (std::size_t k = 0; k < particles.size(); ++k)
        for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += weights[k] * particles[k].state[i];
    return mean;
}

double ParticleSet::param_mean(const std::string& name) const {
    double acc = 0.0;
    for (std::size_t k = 0; k < particles.size(); ++k) acc += weights[k] * particles[k].params.get(name);
    return acc;
}

void ParticleSet::validate() const {
    if (weights.size() != particles.size())
        throw PreconditionError("particle/weight count mismatch");
    double sum = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) throw PreconditionError("particle weights must be >= 0");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw PreconditionError("particle weights must sum to 1");
}

const char* to_string(SelectionRule rule) {
    return rule == SelectionRule::leftmost_k ? "leftmost_k" : "largest_k";
}

SelectionRule selection_rule_from_string(const std::string& name) {
    if (name == "leftmost_k") return SelectionRule::leftmost_k;
    if (name == "largest_k") return SelectionRule::largest_k;
    throw ConfigError("unknown selection rule: " + name);
}

const char* to_string(PadPolicy policy) {
    return policy == PadPolicy::reject ? "reject" : "nearest_duplicate";
}

PadPolicy pad_policy_from_string(const std::string& name) {
    if (name == "reject") return PadPolicy::reject;
    if (name == "nearest_duplicate") return PadPolicy::nearest_duplicate;
    throw ConfigError("unknown pad policy: " + name);
}

void FeaturizationSpec::validate() const {
    if (expected_cardinality < 1) throw PreconditionError("expected cardinality must be >= 1");
}

FeaturizeResult featurize(const FeatureSet& fs, const FeaturizationSpec& spec) {
    spec.validate();
    const auto k = static_cast<std::size_t>(spec.expected_cardinality);

    std::vector<FeaturePoint> pts = fs.points;  // canonical: ascending by location
    FeaturizeResult out;

    if (pts.size() > k) {
        if (spec.rule == SelectionRule::leftmost_k) {
            pts.resize(k);
        } else {
            // largest_k: by value for value-carrying kinds, by location otherwise.
            std::stable_sort(pts.begin(), pts.end(), [&](const FeaturePoint& a, const FeaturePoint& b) {
                if (fs.carries_values()) return a.value.value_or(0.0) > b.value.value_or(0.0);
                return a.x > b.x;
            });
            pts.resize(k);
        }
    } else if (pts.size() < k) {
        if (spec.pad_policy == PadPolicy::reject || pts.empty())
            throw CardinalityError("feature set has " + std::to_string(pts.size()) +
                                   " points, expected " + std::to_string(k));
        out.padded = true;
        // Repeat boundary points, alternating right/left.
        bool right = true;
        while (pts.size() < k) {
            std::stable_sort(pts.begin(), pts.end(),
                             [](const FeaturePoint& a, const FeaturePoint& b) { return a.x < b.x; });
            pts.push_back(right ? pts.back() : pts.front());
            right = !right;
        }
    }

    std::stable_sort(pts.begin(), pts.end(), [](const FeaturePoint& a, const FeaturePoint& b) {
        if (a.x != b.x) return a.x < b.x;
        return a.y < b.y;
    });

    for (const auto& p : pts) {
        out.vec.push_back(p.x);
        if (fs.dim == 2) out.vec.push_back(p.y);
    }
    if (fs.carries_values())
        for (const auto& p : pts) out.vec.push_back(p.value.value_or(0.0));
    return out;
}

namespace {

// Flatten [state; params] into the augmented analysis vector.
Eigen::VectorXd augment(const Member& m) {
    Eigen::VectorXd v(m.state.size() + m.params.size());
    for (std::size_t i = 0; i < m.state.size(); ++i) v[static_cast<Eigen::Index>(i)] = m.state[i];
    for (std::size_t j = 0; j < m.params.size(); ++j)
        v[static_cast<Eigen::Index>(m.state.size() + j)] = m.params.entries()[j].value;
    return v;
}

void unaugment(const Eigen::VectorXd& v, Member& m) {
    for (std::size_t i = 0; i < m.state.size(); ++i) m.state[i] = v[static_cast<Eigen::Index>(i)];
    for (std::size_t j = 0; j < m.params.size(); ++j)
        m.params.entries()[j].value = v[static_cast<Eigen::Index>(m.state.size() + j)];
    m.params.clip_to_bounds();
}

}  // namespace

Ensemble enkf_analysis(const Ensemble& ens, const std::vector<double>& y_obs,
                       const std::vector<double>& r_diag, const MemberObservation& h,
                       std::uint64_t seed, const EnkfOptions& options, EnkfDiagnostics* diag) {
    const auto start = std::chrono::steady_clock::now();
    if (ens.size() < 2) throw PreconditionError("EnKF needs at least 2 members");
    const auto d = static_cast<Eigen::Index>(y_obs.size());
    if (r_diag.size() != y_obs.size())
        throw PreconditionError("observation covariance diagonal size mismatch");

    EnkfDiagnostics local;
    EnkfDiagnostics& dg = diag ? *diag : local;
    dg = {};
    dg.spread_before = ens.state_spread();

    // Predicted observations; members that fail stay unchanged.
    std::vector<std::optional<std::vector<double>>> predictions(ens.size());
    for (std::size_t i = 0; i < ens.size(); ++i) {
        predictions[i] = h(ens.members[i]);
        if (predictions[i] && predictions[i]->size() != y_obs.size()) predictions[i].reset();
    }
    std::vector<std::size_t> valid;
    for (std::size_t i = 0; i < ens.size(); ++i)
        if (predictions[i]) valid.push_back(i);
    dg.featurization_failures = static_cast<int>(ens.size() - valid.size());

    Ensemble out = ens;
    if (valid.size() < 2) {
        dg.spread_after = out.state_spread();
        dg.wall_ms = elapsed_ms(start);
        return out;  // nothing to update against
    }

    const auto nv = static_cast<Eigen::Index>(valid.size());
    const auto na = static_cast<Eigen::Index>(ens.members.front().state.size() +
                                              ens.members.front().params.size());

    Eigen::MatrixXd states(na, nv);
    Eigen::MatrixXd obs(d, nv);
    for (Eigen::Index c = 0; c < nv; ++c) {
        states.col(c) = augment(ens.members[valid[c]]);
        const auto& pred = *predictions[valid[c]];
        for (Eigen::Index r = 0; r < d; ++r) obs(r, c) = pred[static_cast<std::size_t>(r)];
    }

    const Eigen::VectorXd x_mean = states.rowwise().mean();
    const Eigen::VectorXd y_mean = obs.rowwise().mean();

    // Multiplicative inflation acts on the forecast anomalies (members move).
    if (options.inflation != 1.0)
        states = (x_mean.replicate(1, nv) + options.inflation * (states.colwise() - x_mean)).eval();

    const double norm = 1.0 / std::sqrt(static_cast<double>(nv - 1));
    Eigen::MatrixXd anom_x = (states.colwise() - x_mean) * norm;
    Eigen::MatrixXd anom_y = (obs.colwise() - y_mean) * norm;

    Eigen::MatrixXd p_xy = anom_x * anom_y.transpose();
    Eigen::MatrixXd p_yy = anom_y * anom_y.transpose();
    Eigen::MatrixXd s = p_yy;
    for (Eigen::Index r = 0; r < d; ++r) s(r, r) += r_diag[static_cast<std::size_t>(r)];

    Eigen::LLT<Eigen::MatrixXd> llt(s);
    if (llt.info() != Eigen::Success) {
        for (Eigen::Index r = 0; r < d; ++r) s(r, r) += options.ridge;
        dg.ridge_applied = true;
        llt.compute(s);
    }
    Eigen::MatrixXd gain;
    if (llt.info() == Eigen::Success) {
        gain = llt.solve(p_xy.transpose()).transpose();
    } else {
        gain = p_xy * s.completeOrthogonalDecomposition().pseudoInverse();
        dg.ridge_applied = true;
    }

    Eigen::VectorXd y_target(d);
    for (Eigen::Index r = 0; r < d; ++r) y_target[r] = y_obs[static_cast<std::size_t>(r)];
    dg.innovation_norm = (y_target - y_mean).norm();

    for (Eigen::Index c = 0; c < nv; ++c) {
        Eigen::VectorXd perturbed = y_target;
        if (options.perturb_obs) {
            Rng rng(seed, valid[c]);
            for (Eigen::Index r = 0; r < d; ++r)
                perturbed[r] += std::sqrt(std::max(r_diag[static_cast<std::size_t>(r)], 0.0)) * rng.normal();
        }
        Eigen::VectorXd predicted(d);
        const auto& pred = *predictions[valid[c]];
        for (Eigen::Index r = 0; r < d; ++r) predicted[r] = pred[static_cast<std::size_t>(r)];
        const Eigen::VectorXd updated = states.col(c) + gain * (perturbed - predicted);
        unaugment(updated, out.members[valid[c]]);
    }

    dg.spread_after = out.state_spread();
    dg.wall_ms = elapsed_ms(start);
    return out;
}

void LikelihoodSpec::validate() const {
    metric.validate();
    if (!(bandwidth > 0.0)) throw PreconditionError("likelihood bandwidth must be > 0");
}

ParticleSet pf_update(const ParticleSet& ps, const FeatureSet& y_obs, const LikelihoodSpec& lik,
                      const ParticleObservation& h, std::uint64_t seed, PfDiagnostics* diag) {
    const auto start = std::chrono::steady_clock::now();
    ps.validate();
    lik.validate();

    PfDiagnostics local;
    PfDiagnostics& dg = diag ? *diag : local;
    dg = {};

    const std::size_t np = ps.size();
    std::vector<double> logw(np);
    for (std::size_t i = 0; i < np; ++i) {
        const FeatureSet predicted = h(ps.particles[i]);
        const double dist = set_distance(predicted, y_obs, lik.metric);
        const double prior = ps.weights[i] > 0.0 ? std::log(ps.weights[i]) : -kInf;
        logw[i] = prior - dist * dist / (2.0 * lik.bandwidth * lik.bandwidth);
    }

    const double peak = *std::max_element(logw.begin(), logw.end());
    ParticleSet out = ps;
    double total = 0.0;
    if (std::isfinite(peak)) {
        for (std::size_t i = 0; i < np; ++i) {
            out.weights[i] = std::exp(logw[i] - peak);
            total += out.weights[i];
        }
    }
    if (!(total > 0.0) || !std::isfinite(total)) {
        // Every weight underflowed: reset to uniform and flag it.
        dg.weight_underflow = true;
        std::fill(out.weights.begin(), out.weights.end(), 1.0 / static_cast<double>(np));
    } else {
        for (double& w : out.weights) w /= total;
    }

    dg.ess_before = out.effective_sample_size();
    if (dg.ess_before < static_cast<double>(np) / 2.0) {
        // Systematic resampling: one uniform offset, np evenly spaced picks.
        dg.resampled = true;
        Rng rng(seed, 0x7265736d706cULL);
        const double u0 = rng.uniform() / static_cast<double>(np);
        std::vector<Member> resampled;
        resampled.reserve(np);
        double cumulative = out.weights[0];
        std::size_t idx = 0;
        for (std::size_t j = 0; j < np; ++j) {
            const double target = u0 + static_cast<double>(j) / static_cast<double>(np);
            while (target > cumulative && idx + 1 < np) cumulative += out.weights[++idx];
            resampled.push_back(out.particles[idx]);
        }
        out.particles = std::move(resampled);
        std::fill(out.weights.begin(), out.weights.end(), 1.0 / static_cast<double>(np));
    }
    dg.ess_after = out.effective_sample_size();
    dg.wall_ms = elapsed_ms(start);
    return out;
}

void PeakMapProblem::validate() const {
    if (!(dt > 0.0)) throw PreconditionError("peak-map dt must be > 0");
    if (!(t1 > t0)) throw PreconditionError("peak-map horizon must be positive");
    if (!base_params.has(unknown)) throw PreconditionError("unknown parameter " + unknown + " not defined");
    if (!(transient_cut >= t0)) throw PreconditionError("transient cut before start time");
}

std::vector<FeaturePoint> peak_pairs(const FeatureSet& peaks) {
    std::vector<FeaturePoint> pairs;
    if (peaks.points.size() < 2) return pairs;
    pairs.reserve(peaks.points.size() - 1);
    for (std::size_t k = 0; k + 1 < peaks.points.size(); ++k) {
        FeaturePoint p;
        p.x = peaks.points[k].value.value_or(0.0);
        p.y = peaks.points[k + 1].value.value_or(0.0);
        pairs.push_back(p);
    }
    return pairs;
}

namespace {

FeatureSet cut_transient(const FeatureSet& peaks, double cut) {
    FeatureSet out = peaks;
    out.points.clear();
    for (const auto& p : peaks.points)
        if (p.x >= cut) out.points.push_back(p);
    return out;
}

FeatureSet pair_cloud(const FeatureSet& peaks) {
    FeatureSet cloud;
    cloud.kind = FeatureKind::level;  // plain 2-d point cloud
    cloud.dim = 2;
    cloud.points = peak_pairs(peaks);
    cloud.canonicalize();
    return cloud;
}

}  // namespace

double peak_map_cost(const PeakMapProblem& problem, double value, const FeatureSet& observed_peaks) {
    problem.validate();
    if (observed_peaks.kind != FeatureKind::peaks)
        throw PreconditionError("peak-map estimation needs a peaks feature set");

    const FeatureSet observed = cut_transient(observed_peaks, problem.transient_cut);
    if (observed.points.size() < kMinObservedPeaks)
        throw InsufficientDataError("need at least " + std::to_string(kMinObservedPeaks) +
                                    " observed peaks after the transient cut, have " +
                                    std::to_string(observed.points.size()));

    ParameterVector params = problem.base_params;
    params.set(problem.unknown, value);

    OdeTrajectory traj;
    try {
        traj = integrate_ode(ode_rhs_for(problem.model_id), problem.initial_state, params,
                             problem.t0, problem.t1, problem.dt);
    } catch (const BlowUpError&) {
        return kInf;  // divergent simulation sentinel
    }

    FeatureSet simulated = cut_transient(extract_peaks(traj.series(problem.output_component)),
                                         problem.transient_cut);
    const FeatureSet cloud_obs = pair_cloud(observed);
    const FeatureSet cloud_sim = pair_cloud(simulated);
    if (cloud_obs.empty() || cloud_sim.empty()) return kInf;
    return chamfer(cloud_obs, cloud_sim, problem.metric);
}

EstimateResult estimate_parameter(const PeakMapProblem& problem, double lo, double hi,
                                  int grid_points, int refine_iters,
                                  const FeatureSet& observed_peaks) {
    if (grid_points < 5) throw PreconditionError("grid scan needs at least 5 points");
    if (!(hi > lo)) throw PreconditionError("estimation bounds need hi > lo");
    if (refine_iters < 0) throw PreconditionError("refine iterations must be >= 0");

    EstimateResult result;
    auto evaluate = [&](double p) {
        const double c = peak_map_cost(problem, p, observed_peaks);
        result.cost_curve.emplace_back(p, c);
        return std::isfinite(c) ? c : 1e300;
    };

    std::vector<double> grid(static_cast<std::size_t>(grid_points));
    std::vector<double> cost(static_cast<std::size_t>(grid_points));
    std::size_t best = 0;
    bool any_finite = false;
    for (int i = 0; i < grid_points; ++i) {
        grid[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(grid_points - 1);
        cost[i] = evaluate(grid[i]);
        if (cost[i] < 1e300) any_finite = true;
        if (cost[i] < cost[best]) best = static_cast<std::size_t>(i);
    }
    if (!any_finite) throw EstimationError("every grid evaluation diverged");

    // Golden-section refinement inside the bracketing interval.
    double a = grid[best == 0 ? 0 : best - 1];
    double b = grid[best + 1 < grid.size() ? best + 1 : best];
    constexpr double kGolden = 0.6180339887498949;
    double x1 = b - kGolden * (b - a);
    double x2 = a + kGolden * (b - a);
    double f1 = evaluate(x1);
    double f2 = evaluate(x2);
    for (int it = 0; it < refine_iters; ++it) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - kGolden * (b - a);
            f1 = evaluate(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + kGolden * (b - a);
            f2 = evaluate(x2);
        }
    }

    std::sort(result.cost_curve.begin(), result.cost_curve.end());
    std::size_t arg = 0;
    for (std::size_t i = 1; i < result.cost_curve.size(); ++i)
        if (result.cost_curve[i].second < result.cost_curve[arg].second) arg = i;
    result.p_hat = result.cost_curve[arg].first;
    result.cost_at_p_hat = result.cost_curve[arg].second;
    return result;
}

}  // namespace fida
