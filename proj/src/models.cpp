#include "fida/models.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fida/errors.hpp"
#include "fida/rng.hpp"

namespace fida {

void ParameterVector::define(const std::string& name, double value, double lo, double hi) {
    if (!(lo <= hi)) throw PreconditionError("parameter " + name + " has lo > hi");
    for (auto& e : entries_) {
        if (e.name == name) {
            e.value = value;
            e.lo = lo;
            e.hi = hi;
            return;
        }
    }
    entries_.push_back({name, value, lo, hi});
}

bool ParameterVector::has(const std::string& name) const {
    for (const auto& e : entries_)
        if (e.name == name) return true;
    return false;
}

const ParameterEntry& ParameterVector::entry(const std::string& name) const {
    for (const auto& e : entries_)
        if (e.name == name) return e;
    throw PreconditionError("unknown parameter: " + name);
}

double ParameterVector::get(const std::string& name) const { return entry(name).value; }

void ParameterVector::set(const std::string& name, double value) {
    for (auto& e : entries_) {
        if (e.name == name) {
            e.value = value;
            return;
        }
    }
    throw PreconditionError("unknown parameter: " + name);
}

void ParameterVector::clip_to_bounds() {
    for (auto& e : entries_) e.value = std::clamp(e.value, e.lo, e.hi);
}

void ParameterVector::validate() const {
    for (const auto& e : entries_) {
        if (!std::isfinite(e.value)) throw DomainError("parameter " + e.name + " is not finite");
        if (e.value < e.lo || e.value > e.hi)
            throw PreconditionError("parameter " + e.name + " outside [lo, hi]");
    }
}

bool ProcessNoiseSpec::silent() const {
    for (double s : stddev)
        if (s > 0.0) return false;
    return true;
}

double ProcessNoiseSpec::stddev_for(std::size_t i) const {
    if (stddev.empty()) return 0.0;
    if (stddev.size() == 1) return stddev[0];
    return stddev[i];
}

void ProcessNoiseSpec::validate() const {
    for (double s : stddev)
        if (!(s >= 0.0)) throw PreconditionError("process noise stddev must be >= 0");
}

OdeState lorenz_rhs(const OdeState& state, const ParameterVector& p) {
    if (state.size() != 3) throw PreconditionError("lorenz state needs 3 components");
    for (double v : state.components)
        if (!std::isfinite(v)) throw DomainError("lorenz state is not finite");
    const double sigma = p.get("sigma");
    const double rho = p.get("rho");
    const double beta = p.get("beta");
    const double x = state[0], y = state[1], z = state[2];
    return {{sigma * (y - x), x * (rho - z) - y, x * y - beta * z}};
}

ParameterVector lorenz_canonical_params() {
    ParameterVector p;
    p.define("sigma", 10.0, 0.0, 100.0);
    p.define("rho", 28.0, 0.0, 200.0);
    p.define("beta", 8.0 / 3.0, 0.0, 50.0);
    return p;
}

OdeRhs ode_rhs_for(const std::string& model_id) {
    if (model_id == "lorenz")
        return [](double, const OdeState& s, const ParameterVector& p) { return lorenz_rhs(s, p); };
    throw PreconditionError("unknown ODE model: " + model_id);
}

std::vector<std::pair<double, double>> OdeTrajectory::series(std::size_t component) const {
    std::vector<std::pair<double, double>> out;
    out.reserve(times.size());
    for (std::size_t k = 0; k < times.size(); ++k) out.emplace_back(times[k], states[k][component]);
    return out;
}

OdeState rk4_step(const OdeRhs& rhs, double t, const OdeState& state, double h,
                  const ParameterVector& p) {
    const std::size_t n = state.size();
    OdeState k1 = rhs(t, state, p);
    OdeState tmp{std::vector<double>(n)};
    for (std::size_t i = 0; i < n; ++i) tmp[i] = state[i] + 0.5 * h * k1[i];
    OdeState k2 = rhs(t + 0.5 * h, tmp, p);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = state[i] + 0.5 * h * k2[i];
    OdeState k3 = rhs(t + 0.5 * h, tmp, p);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = state[i] + h * k3[i];
    OdeState k4 = rhs(t + h, tmp, p);
    OdeState out{std::vector<double>(n)};
    for (std::size_t i = 0; i < n; ++i)
        out[i] = state[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    return out;
}

OdeTrajectory integrate_ode(const OdeRhs& rhs, const OdeState& x0, const ParameterVector& p,
                            double t0, double t1, double dt, const ProcessNoiseSpec& noise) {
    if (!(t1 > t0)) throw PreconditionError("integration needs t1 > t0");
    if (!(dt > 0.0)) throw PreconditionError("integration needs dt > 0");
    noise.validate();

    OdeTrajectory traj;
    const auto steps = static_cast<std::size_t>(std::ceil((t1 - t0) / dt - 1e-9));
    traj.times.reserve(steps + 1);
    traj.states.reserve(steps + 1);
    traj.times.push_back(t0);
    traj.states.push_back(x0);

    Rng rng(noise.seed);
    OdeState x = x0;
    for (std::size_t k = 0; k < steps; ++k) {
        const double t = t0 + static_cast<double>(k) * dt;
        const double t_next = (k + 1 == steps) ? t1 : t0 + static_cast<double>(k + 1) * dt;
        const double h = t_next - t;
        x = rk4_step(rhs, t, x, h, p);
        if (!noise.stddev.empty()) {
            const double scale = std::sqrt(h);
            for (std::size_t i = 0; i < x.size(); ++i) {
                const double s = noise.stddev_for(i);
                if (s > 0.0) x[i] += s * scale * rng.normal();
            }
        }
        for (double v : x.components) {
            if (!(std::abs(v) <= kBlowUpGuard))
                throw BlowUpError("trajectory exceeded the overflow guard at t=" + std::to_string(t_next),
                                  t_next);
        }
        traj.times.push_back(t_next);
        traj.states.push_back(x);
    }
    return traj;
}

namespace {

// Neighbour index with periodic wrap or edge clamping.
inline int shift(int i, int d, int n, bool periodic) {
    int j = i + d;
    if (periodic) {
        if (j < 0) j += n;
        if (j >= n) j -= n;
        return j;
    }
    return std::clamp(j, 0, n - 1);
}

double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace

Field1D burgers_step(const Field1D& u, double nu, double dt) {
    u.validate();
    if (!(nu >= 0.0)) throw PreconditionError("viscosity must be >= 0");
    if (!(dt > 0.0)) throw PreconditionError("dt must be > 0");
    if (!u.grid.periodic) throw PreconditionError("burgers_step requires a periodic grid");

    const int n = u.grid.n;
    const double dx = u.grid.dx;
    const double umax = max_abs(u.values);
    if (umax > 0.0 && dt > 0.5 * dx / umax)
        throw PreconditionError("CFL violated: dt > 0.5*dx/max|u| (dt=" + std::to_string(dt) +
                                ", bound=" + std::to_string(0.5 * dx / umax) + ")");
    if (nu > 0.0 && dt > 0.25 * dx * dx / nu)
        throw PreconditionError("CFL violated: dt > 0.25*dx^2/nu (dt=" + std::to_string(dt) +
                                ", bound=" + std::to_string(0.25 * dx * dx / nu) + ")");

    // Interface flux at i+1/2: local Lax-Friedrichs for u^2/2 plus the
    // viscous flux, so the update telescopes and mass is conserved exactly.
    std::vector<double> flux(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double ul = u.values[i];
        const double ur = u.values[shift(i, +1, n, true)];
        const double alpha = std::max(std::abs(ul), std::abs(ur));
        double f = 0.25 * (ul * ul + ur * ur) - 0.5 * alpha * (ur - ul);
        if (nu > 0.0) f -= nu * (ur - ul) / dx;
        flux[i] = f;
    }

    Field1D out = u;
    for (int i = 0; i < n; ++i) {
        const double f_right = flux[i];
        const double f_left = flux[shift(i, -1, n, true)];
        out.values[i] = u.values[i] - dt / dx * (f_right - f_left);
    }
    return out;
}

namespace {

struct Diffs {
    double minus = 0.0;
    double plus = 0.0;
};

// One-sided differences along one axis. idx is the coordinate index along
// the differenced axis, stride its flat step, fixed_offset the flat index
// contribution of the other axes. Missing edge differences are replicated.
inline Diffs one_sided(const std::vector<double>& v, int stride, int n, int idx, double h,
                       bool periodic, int fixed_offset) {
    Diffs d;
    const bool has_lo = periodic || idx > 0;
    const bool has_hi = periodic || idx < n - 1;
    const int lo = fixed_offset + shift(idx, -1, n, periodic) * stride;
    const int hi = fixed_offset + shift(idx, +1, n, periodic) * stride;
    const int at = fixed_offset + idx * stride;
    if (has_lo) d.minus = (v[at] - v[lo]) / h;
    if (has_hi) d.plus = (v[hi] - v[at]) / h;
    if (!has_lo) d.minus = d.plus;
    if (!has_hi) d.plus = d.minus;
    return d;
}

// Godunov numerical |grad| for motion that grows the set {G > 0}
// (G_t = speed * |grad G| with speed >= 0).
inline double godunov_expand_sq(const Diffs& d) {
    const double a = std::min(d.minus, 0.0);
    const double b = std::max(d.plus, 0.0);
    return std::max(a * a, b * b);
}

// Godunov numerical |grad| for the opposite motion (shrinking {G > 0}).
inline double godunov_shrink_sq(const Diffs& d) {
    const double a = std::max(d.minus, 0.0);
    const double b = std::min(d.plus, 0.0);
    return std::max(a * a, b * b);
}

inline double upwind_advect(double vel, const Diffs& d) {
    return vel > 0.0 ? vel * d.minus : vel * d.plus;
}

}  // namespace

Field1D levelset_step(const Field1D& g, const Field1D& velocity, double flame_speed, double dt) {
    g.validate();
    velocity.validate();
    if (!(g.grid == velocity.grid)) throw PreconditionError("level-set field and velocity grids differ");
    if (!(flame_speed >= 0.0)) throw PreconditionError("flame speed must be >= 0");
    if (!(dt > 0.0)) throw PreconditionError("dt must be > 0");

    const int n = g.grid.n;
    const double dx = g.grid.dx;
    const double speed = max_abs(velocity.values) + flame_speed;
    if (speed > 0.0 && dt * speed > 0.5 * dx)
        throw PreconditionError("CFL violated: dt*(max|u|+sL) > 0.5*dx (dt=" + std::to_string(dt) +
                                ", bound=" + std::to_string(0.5 * dx / speed) + ")");

    Field1D out = g;
    for (int i = 0; i < n; ++i) {
        const Diffs d = one_sided(g.values, 1, n, i, dx, g.grid.periodic, 0);
        double rate = -upwind_advect(velocity.values[i], d);
        if (flame_speed > 0.0) rate += flame_speed * std::sqrt(godunov_expand_sq(d));
        out.values[i] = g.values[i] + dt * rate;
    }
    return out;
}

Field2D levelset_step(const Field2D& g, const Field2D& velocity_x, const Field2D& velocity_y,
                      double flame_speed, double dt) {
    g.validate();
    velocity_x.validate();
    velocity_y.validate();
    if (!(g.gridx == velocity_x.gridx) || !(g.gridy == velocity_x.gridy) ||
        !(g.gridx == velocity_y.gridx) || !(g.gridy == velocity_y.gridy))
        throw PreconditionError("level-set field and velocity grids differ");
    if (!(flame_speed >= 0.0)) throw PreconditionError("flame speed must be >= 0");
    if (!(dt > 0.0)) throw PreconditionError("dt must be > 0");

    const int nx = g.gridx.n, ny = g.gridy.n;
    const double h = std::min(g.gridx.dx, g.gridy.dx);
    const double speed = std::max(max_abs(velocity_x.values), max_abs(velocity_y.values)) + flame_speed;
    if (speed > 0.0 && dt * speed > 0.5 * h)
        throw PreconditionError("CFL violated: dt*(max|u|+sL) > 0.5*min(dx,dy)");

    Field2D out = g;
    for (int iy = 0; iy < ny; ++iy) {
        for (int ix = 0; ix < nx; ++ix) {
            const Diffs dxd =
                one_sided(g.values, 1, nx, ix, g.gridx.dx, g.gridx.periodic, iy * nx);
            const Diffs dyd =
                one_sided(g.values, nx, ny, iy, g.gridy.dx, g.gridy.periodic, ix);
            double rate = -upwind_advect(velocity_x.at(ix, iy), dxd) -
                          upwind_advect(velocity_y.at(ix, iy), dyd);
            if (flame_speed > 0.0)
                rate += flame_speed * std::sqrt(godunov_expand_sq(dxd) + godunov_expand_sq(dyd));
            out.at(ix, iy) = g.at(ix, iy) + dt * rate;
        }
    }
    return out;
}

namespace {

inline double smoothed_sign(double g0, double h) { return g0 / std::sqrt(g0 * g0 + h * h); }

}  // namespace

Field1D reinitialize(const Field1D& g, int iterations, ReinitReport* report) {
    g.validate();
    if (iterations < 0) throw PreconditionError("iterations must be >= 0");

    const int n = g.grid.n;
    const double dx = g.grid.dx;
    const double dtau = 0.45 * dx;
    const Field1D g0 = g;

    Field1D cur = g;
    for (int it = 0; it < iterations; ++it) {
        Field1D next = cur;
        for (int i = 0; i < n; ++i) {
            const double s = smoothed_sign(g0.values[i], dx);
            const Diffs d = one_sided(cur.values, 1, n, i, dx, g.grid.periodic, 0);
            const double grad =
                std::sqrt(s > 0.0 ? godunov_shrink_sq(d) : godunov_expand_sq(d));
            next.values[i] = cur.values[i] - dtau * s * (grad - 1.0);
        }
        cur = std::move(next);
    }

    if (report) {
        double worst = 0.0;
        const double band = 3.0 * dx;
        for (int i = 0; i < n; ++i) {
            if (std::abs(cur.values[i]) <= band) continue;
            const double s = smoothed_sign(cur.values[i], dx);
            const Diffs d = one_sided(cur.values, 1, n, i, dx, g.grid.periodic, 0);
            const double grad =
                std::sqrt(s > 0.0 ? godunov_shrink_sq(d) : godunov_expand_sq(d));
            worst = std::max(worst, std::abs(grad - 1.0));
        }
        report->residual = worst;
    }
    return cur;
}

Field2D reinitialize(const Field2D& g, int iterations, ReinitReport* report) {
    g.validate();
    if (iterations < 0) throw PreconditionError("iterations must be >= 0");

    const int nx = g.gridx.n, ny = g.gridy.n;
    const double h = std::min(g.gridx.dx, g.gridy.dx);
    const double dtau = 0.225 * h;
    const Field2D g0 = g;

    auto godunov_grad = [&](const Field2D& f, int ix, int iy, double s) {
        const Diffs dxd = one_sided(f.values, 1, nx, ix, g.gridx.dx, g.gridx.periodic, iy * nx);
        const Diffs dyd = one_sided(f.values, nx, ny, iy, g.gridy.dx, g.gridy.periodic, ix);
        return std::sqrt(s > 0.0 ? godunov_shrink_sq(dxd) + godunov_shrink_sq(dyd)
                                 : godunov_expand_sq(dxd) + godunov_expand_sq(dyd));
    };

    Field2D cur = g;
    for (int it = 0; it < iterations; ++it) {
        Field2D next = cur;
        for (int iy = 0; iy < ny; ++iy) {
            for (int ix = 0; ix < nx; ++ix) {
                const double s = smoothed_sign(g0.at(ix, iy), h);
                const double grad = godunov_grad(cur, ix, iy, s);
                next.at(ix, iy) = cur.at(ix, iy) - dtau * s * (grad - 1.0);
            }
        }
        cur = std::move(next);
    }

    if (report) {
        double worst = 0.0;
        const double band = 3.0 * std::max(g.gridx.dx, g.gridy.dx);
        for (int iy = 0; iy < ny; ++iy) {
            for (int ix = 0; ix < nx; ++ix) {
                if (std::abs(cur.at(ix, iy)) <= band) continue;
                const double s = smoothed_sign(cur.at(ix, iy), h);
                worst = std::max(worst, std::abs(godunov_grad(cur, ix, iy, s) - 1.0));
            }
        }
        report->residual = worst;
    }
    return cur;
}

}  // namespace fida
