#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "fida/field.hpp"

namespace fida {

struct OdeState {
    std::vector<double> components;

    std::size_t size() const { return components.size(); }
    double operator[](std::size_t i) const { return components[i]; }
    double& operator[](std::size_t i) { return components[i]; }
};

struct ParameterEntry {
    std::string name;
    double value = 0.0;
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
};

// Ordered set of named, bounded parameters.
class ParameterVector {
public:
    ParameterVector() = default;

    void define(const std::string& name, double value,
                double lo = -std::numeric_limits<double>::infinity(),
                double hi = std::numeric_limits<double>::infinity());
    bool has(const std::string& name) const;
    double get(const std::string& name) const;
    void set(const std::string& name, double value);
    const ParameterEntry& entry(const std::string& name) const;

    void clip_to_bounds();
    void validate() const;

    std::size_t size() const { return entries_.size(); }
    const std::vector<ParameterEntry>& entries() const { return entries_; }
    std::vector<ParameterEntry>& entries() { return entries_; }

private:
    std::vector<ParameterEntry> entries_;
};

// Additive per-step model error. One stddev entry broadcasts to every
// component/cell; the draw is scaled by sqrt(dt).
struct ProcessNoiseSpec {
    std::vector<double> stddev;
    std::uint64_t seed = 0;

    bool silent() const;
    double stddev_for(std::size_t i) const;
    void validate() const;
};

using OdeRhs = std::function<OdeState(double, const OdeState&, const ParameterVector&)>;

// Trajectories blow up (and estimation must notice) once any component
// passes this guard.
inline constexpr double kBlowUpGuard = 1e12;

OdeState lorenz_rhs(const OdeState& state, const ParameterVector& p);
ParameterVector lorenz_canonical_params();
OdeRhs ode_rhs_for(const std::string& model_id);

struct OdeTrajectory {
    std::vector<double> times;
    std::vector<OdeState> states;

    std::vector<std::pair<double, double>> series(std::size_t component) const;
};

OdeState rk4_step(const OdeRhs& rhs, double t, const OdeState& state, double h,
                  const ParameterVector& p);

OdeTrajectory integrate_ode(const OdeRhs& rhs, const OdeState& x0, const ParameterVector& p,
                            double t0, double t1, double dt,
                            const ProcessNoiseSpec& noise = {});

Field1D burgers_step(const Field1D& u, double nu, double dt);

Field1D levelset_step(const Field1D& g, const Field1D& velocity, double flame_speed, double dt);
Field2D levelset_step(const Field2D& g, const Field2D& velocity_x, const Field2D& velocity_y,
                      double flame_speed, double dt);

struct ReinitReport {
    double residual = 0.0;  // max | |grad G| - 1 | away from the interface band
};

Field1D reinitialize(const Field1D& g, int iterations, ReinitReport* report = nullptr);
Field2D reinitialize(const Field2D& g, int iterations, ReinitReport* report = nullptr);

}  // namespace fida
