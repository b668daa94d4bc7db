#include "fida/setmetrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fida/errors.hpp"

namespace fida {

const char* to_string(MetricKind kind) {
    switch (kind) {
        case MetricKind::hausdorff: return "hausdorff";
        case MetricKind::chamfer: return "chamfer";
        case MetricKind::ospa: return "ospa";
    }
    return "unknown";
}

MetricKind metric_kind_from_string(const std::string& name) {
    if (name == "hausdorff") return MetricKind::hausdorff;
    if (name == "chamfer") return MetricKind::chamfer;
    if (name == "ospa") return MetricKind::ospa;
    throw ConfigError("unknown metric: " + name);
}

void MetricSpec::validate() const {
    if (!(ospa_cutoff > 0.0)) throw PreconditionError("ospa cutoff must be > 0");
    if (!(ospa_order >= 1.0)) throw PreconditionError("ospa order must be >= 1");
    if (!(value_weight >= 0.0)) throw PreconditionError("value weight must be >= 0");
}

double point_distance(const FeaturePoint& a, const FeaturePoint& b, int dim, double value_weight) {
    const double dx = a.x - b.x;
    double d2 = dx * dx;
    if (dim == 2) {
        const double dy = a.y - b.y;
        d2 += dy * dy;
    }
    if (value_weight > 0.0 && (a.value || b.value)) {
        const double dv = a.value.value_or(0.0) - b.value.value_or(0.0);
        d2 += value_weight * value_weight * dv * dv;
    }
    return std::sqrt(d2);
}

namespace {

void check_kinds(const FeatureSet& a, const FeatureSet& b) {
    if (a.kind != b.kind)
        throw KindMismatchError(std::string("cannot compare feature sets of kind ") + to_string(a.kind) +
                                " and " + to_string(b.kind));
    if (a.dim != b.dim) throw KindMismatchError("cannot compare feature sets of different dimension");
}

// Worst / mean nearest-neighbour distance from a to b.
struct Directed {
    double worst = 0.0;
    double mean = 0.0;
};

Directed directed_distances(const FeatureSet& a, const FeatureSet& b, const MetricSpec& spec) {
    Directed out;
    double sum = 0.0;
    for (const auto& pa : a.points) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& pb : b.points) best = std::min(best, point_distance(pa, pb, a.dim, spec.value_weight));
        out.worst = std::max(out.worst, best);
        sum += best;
    }
    out.mean = sum / static_cast<double>(a.points.size());
    return out;
}

}  // namespace

double hausdorff(const FeatureSet& a, const FeatureSet& b, const MetricSpec& spec) {
    spec.validate();
    check_kinds(a, b);
    if (a.empty() || b.empty())
        throw EmptySetError("hausdorff distance is undefined for empty sets; use ospa");
    return std::max(directed_distances(a, b, spec).worst, directed_distances(b, a, spec).worst);
}

double chamfer(const FeatureSet& a, const FeatureSet& b, const MetricSpec& spec) {
    spec.validate();
    check_kinds(a, b);
    if (a.empty() || b.empty())
        throw EmptySetError("chamfer distance is undefined for empty sets; use ospa");
    return 0.5 * (directed_distances(a, b, spec).mean + directed_distances(b, a, spec).mean);
}

std::vector<int> solve_assignment(const std::vector<double>& cost, int rows, int cols) {
    if (rows > cols) throw PreconditionError("solve_assignment requires rows <= cols");
    if (cost.size() != static_cast<std::size_t>(rows) * cols)
        throw PreconditionError("cost matrix size mismatch");

    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(static_cast<std::size_t>(rows) + 1, 0.0);
    std::vector<double> v(static_cast<std::size_t>(cols) + 1, 0.0);
    std::vector<int> match(static_cast<std::size_t>(cols) + 1, 0);  // row matched to column j
    std::vector<int> way(static_cast<std::size_t>(cols) + 1, 0);

    for (int i = 1; i <= rows; ++i) {
        match[0] = i;
        int j0 = 0;
        std::vector<double> minv(static_cast<std::size_t>(cols) + 1, inf);
        std::vector<char> used(static_cast<std::size_t>(cols) + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = match[j0];
            int j1 = -1;
            double delta = inf;
            for (int j = 1; j <= cols; ++j) {
                if (used[j]) continue;
                const double cur = cost[static_cast<std::size_t>(i0 - 1) * cols + (j - 1)] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= cols; ++j) {
                if (used[j]) {
                    u[match[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (match[j0] != 0);
        do {
            const int j1 = way[j0];
            match[j0] = match[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    std::vector<int> result(static_cast<std::size_t>(rows), -1);
    for (int j = 1; j <= cols; ++j)
        if (match[j] > 0) result[match[j] - 1] = j - 1;
    return result;
}

double ospa(const FeatureSet& a, const FeatureSet& b, const MetricSpec& spec) {
    spec.validate();
    check_kinds(a, b);

    const FeatureSet& small = a.size() <= b.size() ? a : b;
    const FeatureSet& large = a.size() <= b.size() ? b : a;
    const int m = static_cast<int>(small.size());
    const int n = static_cast<int>(large.size());
    if (n == 0) return 0.0;
    const double c = spec.ospa_cutoff;
    const double p = spec.ospa_order;
    if (m == 0) return c;

    std::vector<double> cost(static_cast<std::size_t>(m) * n);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
            cost[static_cast<std::size_t>(i) * n + j] = std::pow(
                std::min(point_distance(small.points[i], large.points[j], a.dim, spec.value_weight), c), p);

    const std::vector<int> assignment = solve_assignment(cost, m, n);
    double total = 0.0;
    for (int i = 0; i < m; ++i) total += cost[static_cast<std::size_t>(i) * n + assignment[i]];
    total += std::pow(c, p) * static_cast<double>(n - m);
    return std::pow(total / static_cast<double>(n), 1.0 / p);
}

double set_distance(const FeatureSet& a, const FeatureSet& b, const MetricSpec& spec) {
    switch (spec.kind) {
        case MetricKind::hausdorff: return hausdorff(a, b, spec);
        case MetricKind::chamfer: return chamfer(a, b, spec);
        case MetricKind::ospa: return ospa(a, b, spec);
    }
    throw PreconditionError("unknown metric kind");
}

}  // namespace fida
