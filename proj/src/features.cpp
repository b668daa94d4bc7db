#include "fida/features.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fida/errors.hpp"
#include "fida/rng.hpp"

namespace fida {

const char* to_string(FeatureKind kind) {
    switch (kind) {
        case FeatureKind::front: return "front";
        case FeatureKind::argmax: return "argmax";
        case FeatureKind::argmax_with_value: return "argmax_with_value";
        case FeatureKind::level: return "level";
        case FeatureKind::peaks: return "peaks";
    }
    return "unknown";
}

FeatureKind feature_kind_from_string(const std::string& name) {
    if (name == "front") return FeatureKind::front;
    if (name == "argmax") return FeatureKind::argmax;
    if (name == "argmax_with_value") return FeatureKind::argmax_with_value;
    if (name == "level") return FeatureKind::level;
    if (name == "peaks") return FeatureKind::peaks;
    throw ConfigError("unknown feature kind: " + name);
}

void FeatureSet::canonicalize() {
    std::sort(points.begin(), points.end(), [](const FeaturePoint& a, const FeaturePoint& b) {
        if (a.x != b.x) return a.x < b.x;
        return a.y < b.y;
    });
    std::vector<FeaturePoint> unique;
    unique.reserve(points.size());
    for (const auto& p : points) {
        if (!unique.empty() && std::abs(p.x - unique.back().x) <= kPointDistinctTol &&
            std::abs(p.y - unique.back().y) <= kPointDistinctTol)
            continue;
        unique.push_back(p);
    }
    points = std::move(unique);
}

void FeatureNoiseSpec::validate() const {
    if (!(location_stddev >= 0.0)) throw PreconditionError("location_stddev must be >= 0");
    if (!(value_stddev >= 0.0)) throw PreconditionError("value_stddev must be >= 0");
    if (!(detect_prob >= 0.0 && detect_prob <= 1.0)) throw PreconditionError("detect_prob must be in [0,1]");
    if (!(clutter_rate >= 0.0)) throw PreconditionError("clutter_rate must be >= 0");
}

DomainBounds domain_of(const Grid1D& g) {
    DomainBounds b;
    b.xlo = g.x0;
    b.xhi = g.x0 + g.length();
    return b;
}

namespace {

inline int wrap_index(int i, int n) {
    if (i < 0) return i + n;
    if (i >= n) return i - n;
    return i;
}

// Central-difference gradient with periodic wrap or one-sided edges.
std::vector<double> gradient(const Field1D& u) {
    const int n = u.grid.n;
    const double dx = u.grid.dx;
    std::vector<double> g(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        if (u.grid.periodic) {
            g[i] = (u.values[wrap_index(i + 1, n)] - u.values[wrap_index(i - 1, n)]) / (2.0 * dx);
        } else if (i == 0) {
            g[i] = (u.values[1] - u.values[0]) / dx;
        } else if (i == n - 1) {
            g[i] = (u.values[n - 1] - u.values[n - 2]) / dx;
        } else {
            g[i] = (u.values[i + 1] - u.values[i - 1]) / (2.0 * dx);
        }
    }
    return g;
}

// Crossing locations of s(x) = 0 between consecutive cell centers, by
// linear interpolation; exact-zero cells count as crossings when adjacent
// to a nonzero cell.
std::vector<double> zero_crossings(const Field1D& u, const std::vector<double>& s) {
    const int n = u.grid.n;
    std::vector<double> out;
    const int edges = u.grid.periodic ? n : n - 1;
    for (int i = 0; i < edges; ++i) {
        const int j = wrap_index(i + 1, n);
        const double a = s[i], b = s[j];
        const double xa = u.grid.center(i);
        if ((a < 0.0 && b > 0.0) || (a > 0.0 && b < 0.0)) {
            out.push_back(xa + u.grid.dx * a / (a - b));
        } else if (a == 0.0 && b != 0.0) {
            out.push_back(xa);
        } else if (a != 0.0 && b == 0.0) {
            out.push_back(xa + u.grid.dx);
        }
    }
    return out;
}

}  // namespace

FeatureSet extract_front(const Field1D& u, double threshold, double time) {
    u.validate();
    if (!(threshold > 0.0)) throw PreconditionError("front threshold must be > 0");

    FeatureSet fs;
    fs.kind = FeatureKind::front;
    fs.time = time;

    const int n = u.grid.n;
    const std::vector<double> grad = gradient(u);
    std::vector<bool> mask(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) mask[i] = std::abs(grad[i]) > threshold;

    // Contiguous runs, merged across the periodic seam, each reduced to the
    // cell with the largest gradient magnitude.
    std::vector<std::pair<int, int>> runs;  // [first, last] inclusive
    int i = 0;
    while (i < n) {
        if (!mask[i]) {
            ++i;
            continue;
        }
        int j = i;
        while (j + 1 < n && mask[j + 1]) ++j;
        runs.emplace_back(i, j);
        i = j + 1;
    }
    if (u.grid.periodic && runs.size() >= 2 && runs.front().first == 0 && runs.back().second == n - 1) {
        runs.front().first = runs.back().first - n;  // wrapped run, negative start
        runs.pop_back();
    }

    for (const auto& [first, last] : runs) {
        int best = first;
        double best_mag = -1.0;
        for (int k = first; k <= last; ++k) {
            const int idx = wrap_index(k < 0 ? k + n : k, n);
            const double mag = std::abs(grad[idx]);
            if (mag > best_mag) {
                best_mag = mag;
                best = idx;
            }
        }
        FeaturePoint pt;
        pt.x = u.grid.center(best);
        pt.run = {u.grid.center(wrap_index(first < 0 ? first + n : first, n)),
                  u.grid.center(wrap_index(last, n))};
        fs.points.push_back(pt);
    }
    fs.canonicalize();
    return fs;
}

FeatureSet extract_threshold(const Field1D& u, double threshold, double time) {
    u.validate();
    FeatureSet fs;
    fs.kind = FeatureKind::front;
    fs.time = time;
    std::vector<double> s(u.values.size());
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = u.values[i] - threshold;
    for (double x : zero_crossings(u, s)) fs.points.push_back({x});
    fs.canonicalize();
    return fs;
}

FeatureSet extract_argmax(const Field1D& u, double tol, bool with_value, double time) {
    u.validate();
    if (!(tol >= 0.0)) throw PreconditionError("argmax tolerance must be >= 0");

    FeatureSet fs;
    fs.kind = with_value ? FeatureKind::argmax_with_value : FeatureKind::argmax;
    fs.time = time;

    const int n = u.grid.n;
    const double vmax = max_value(u.values);
    const double vmin = min_value(u.values);
    const double range = vmax - vmin;
    if (range <= 1e-12 * std::max({1.0, std::abs(vmax), std::abs(vmin)})) {
        fs.degenerate = true;  // the maximizer is the whole domain
        return fs;
    }

    const double cutoff = vmax - tol * range;
    std::vector<bool> mask(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) mask[i] = u.values[i] >= cutoff;

    std::vector<std::pair<int, int>> runs;
    int i = 0;
    while (i < n) {
        if (!mask[i]) {
            ++i;
            continue;
        }
        int j = i;
        while (j + 1 < n && mask[j + 1]) ++j;
        runs.emplace_back(i, j);
        i = j + 1;
    }
    if (u.grid.periodic && runs.size() >= 2 && runs.front().first == 0 && runs.back().second == n - 1) {
        runs.front().first = runs.back().first - n;
        runs.pop_back();
    }

    for (const auto& [first, last] : runs) {
        int best = wrap_index(first < 0 ? first + n : first, n);
        double best_val = u.values[best];
        for (int k = first; k <= last; ++k) {
            const int idx = wrap_index(k < 0 ? k + n : k, n);
            if (u.values[idx] > best_val) {
                best_val = u.values[idx];
                best = idx;
            }
        }

        // Sub-grid refinement through the 3-point stencil; exact for
        // parabolas, skipped at non-periodic edges.
        double loc = u.grid.center(best);
        double val = u.values[best];
        const bool interior = u.grid.periodic || (best > 0 && best < n - 1);
        if (interior) {
            const double um = u.values[wrap_index(best - 1, n)];
            const double up = u.values[wrap_index(best + 1, n)];
            const double d2 = um - 2.0 * val + up;
            if (std::abs(d2) > 1e-300) {
                double delta = (um - up) / (2.0 * d2);
                delta = std::clamp(delta, -0.5, 0.5);
                loc += delta * u.grid.dx;
                val = val + 0.5 * (up - um) * delta + 0.5 * d2 * delta * delta;
            }
        }
        FeaturePoint pt;
        pt.x = loc;
        if (with_value) pt.value = val;
        fs.points.push_back(pt);
    }
    fs.canonicalize();
    return fs;
}

FeatureSet extract_levelset(const Field1D& u, double level, double time) {
    u.validate();
    FeatureSet fs;
    fs.kind = FeatureKind::level;
    fs.time = time;

    double dev = 0.0;
    std::vector<double> s(u.values.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        s[i] = u.values[i] - level;
        dev = std::max(dev, std::abs(s[i]));
    }
    if (dev <= 1e-12) {
        fs.degenerate = true;  // the whole field sits on the level
        return fs;
    }
    for (double x : zero_crossings(u, s)) fs.points.push_back({x});
    fs.canonicalize();
    return fs;
}

namespace {

struct Corner {
    double x, y, s;
};

// Crossing of the zero level on the segment between two corners.
inline bool edge_crossing(const Corner& a, const Corner& b, double* cx, double* cy) {
    if ((a.s < 0.0 && b.s > 0.0) || (a.s > 0.0 && b.s < 0.0)) {
        const double t = a.s / (a.s - b.s);
        *cx = a.x + t * (b.x - a.x);
        *cy = a.y + t * (b.y - a.y);
        return true;
    }
    if (a.s == 0.0 && b.s != 0.0) {
        *cx = a.x;
        *cy = a.y;
        return true;
    }
    if (a.s != 0.0 && b.s == 0.0) {
        *cx = b.x;
        *cy = b.y;
        return true;
    }
    return false;
}

}  // namespace

FeatureSet extract_levelset(const Field2D& u, double level, double time) {
    u.validate();
    FeatureSet fs;
    fs.kind = FeatureKind::level;
    fs.dim = 2;
    fs.time = time;

    double dev = 0.0;
    for (double v : u.values) dev = std::max(dev, std::abs(v - level));
    if (dev <= 1e-12) {
        fs.degenerate = true;
        return fs;
    }

    const int nx = u.gridx.n, ny = u.gridy.n;
    const int cx_count = u.gridx.periodic ? nx : nx - 1;
    const int cy_count = u.gridy.periodic ? ny : ny - 1;

    for (int iy = 0; iy < cy_count; ++iy) {
        for (int ix = 0; ix < cx_count; ++ix) {
            const int ix1 = wrap_index(ix + 1, nx);
            const int iy1 = wrap_index(iy + 1, ny);
            const double x0 = u.gridx.center(ix), x1 = x0 + u.gridx.dx;
            const double y0 = u.gridy.center(iy), y1 = y0 + u.gridy.dx;
            const Corner c00{x0, y0, u.at(ix, iy) - level};
            const Corner c10{x1, y0, u.at(ix1, iy) - level};
            const Corner c11{x1, y1, u.at(ix1, iy1) - level};
            const Corner c01{x0, y1, u.at(ix, iy1) - level};

            // Marching squares: collect edge crossings in fixed order
            // (bottom, right, top, left) and pair them up into segments.
            double px[4], py[4];
            int count = 0;
            const Corner* edges[4][2] = {{&c00, &c10}, {&c10, &c11}, {&c11, &c01}, {&c01, &c00}};
            for (auto& e : edges) {
                double qx, qy;
                if (edge_crossing(*e[0], *e[1], &qx, &qy) && count < 4) {
                    px[count] = qx;
                    py[count] = qy;
                    ++count;
                }
            }
            for (int k = 0; k + 1 < count; k += 2) {
                FeaturePoint pt;
                pt.x = 0.5 * (px[k] + px[k + 1]);
                pt.y = 0.5 * (py[k] + py[k + 1]);
                fs.points.push_back(pt);
            }
        }
    }
    fs.canonicalize();
    return fs;
}

FeatureSet extract_peaks(const std::vector<std::pair<double, double>>& series) {
    if (series.size() < 3) throw PreconditionError("peak extraction needs at least 3 samples");
    for (std::size_t i = 1; i < series.size(); ++i) {
        if (!(series[i].first > series[i - 1].first))
            throw PreconditionError("peak extraction needs strictly increasing sample times");
    }

    FeatureSet fs;
    fs.kind = FeatureKind::peaks;

    const std::size_t n = series.size();
    std::size_t i = 1;
    while (i + 1 < n) {
        const double zp = series[i - 1].second;
        const double z = series[i].second;
        if (!(z > zp)) {
            ++i;
            continue;
        }
        // Plateau: run of equal values starting at i.
        std::size_t j = i;
        while (j + 1 < n && series[j + 1].second == z) ++j;
        if (j + 1 >= n) break;          // plateau runs into the end: not interior
        if (series[j + 1].second > z) {  // ascending through, not a peak
            i = j + 1;
            continue;
        }
        FeaturePoint pt;
        if (j > i) {
            // Plateau peak: report the midpoint once, no refinement.
            pt.x = 0.5 * (series[i].first + series[j].first);
            pt.value = z;
        } else {
            const double tm = series[i - 1].first, t0 = series[i].first, tp = series[i + 1].first;
            const double zm = zp, z0 = z, zc = series[i + 1].second;
            // Quadratic through three samples (uniform or not): vertex of
            // the Lagrange interpolant.
            const double d21 = t0 - tm, d32 = tp - t0;
            const double s1 = (z0 - zm) / d21, s2 = (zc - z0) / d32;
            const double curv = (s2 - s1) / (d21 + d32);  // half the 2nd derivative
            pt.x = t0;
            pt.value = z0;
            if (curv < 0.0) {
                // Vertex of q(t) = zm + s1 (t - tm) + curv (t - tm)(t - t0):
                // q'(t) = s1 + curv (2t - tm - t0) = 0.
                const double t_star = 0.5 * (tm + t0 - s1 / curv);
                if (t_star >= tm && t_star <= tp) {
                    pt.x = t_star;
                    pt.value = zm + s1 * (t_star - tm) + curv * (t_star - tm) * (t_star - t0);
                }
            }
        }
        fs.points.push_back(pt);
        i = j + 1;
    }
    fs.canonicalize();
    return fs;
}

FeatureSet corrupt(const FeatureSet& fs, const FeatureNoiseSpec& noise, const DomainBounds& domain) {
    noise.validate();
    Rng rng(noise.seed);

    FeatureSet out;
    out.kind = fs.kind;
    out.dim = fs.dim;
    out.time = fs.time;
    out.degenerate = fs.degenerate;

    // Value range of the clean set, used for clutter values.
    double vlo = 0.0, vhi = 0.0;
    if (fs.carries_values() && !fs.points.empty()) {
        vlo = vhi = fs.points.front().value.value_or(0.0);
        for (const auto& p : fs.points) {
            const double v = p.value.value_or(0.0);
            vlo = std::min(vlo, v);
            vhi = std::max(vhi, v);
        }
    }

    for (const auto& p : fs.points) {
        if (rng.uniform() >= noise.detect_prob) continue;  // missed detection
        FeaturePoint q = p;
        if (noise.location_stddev > 0.0) {
            q.x += noise.location_stddev * rng.normal();
            if (fs.dim == 2) q.y += noise.location_stddev * rng.normal();
        }
        if (q.value && noise.value_stddev > 0.0) q.value = *q.value + noise.value_stddev * rng.normal();
        out.points.push_back(q);
    }

    const std::uint64_t clutter = rng.poisson(noise.clutter_rate);
    for (std::uint64_t k = 0; k < clutter; ++k) {
        FeaturePoint q;
        q.x = rng.uniform(domain.xlo, domain.xhi);
        if (fs.dim == 2) q.y = rng.uniform(domain.ylo, domain.yhi);
        if (fs.carries_values()) q.value = rng.uniform(vlo, vhi);
        out.points.push_back(q);
    }

    out.canonicalize();
    return out;
}

}  // namespace fida
