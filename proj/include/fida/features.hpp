#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fida/field.hpp"

namespace fida {

enum class FeatureKind { front, argmax, argmax_with_value, level, peaks };

const char* to_string(FeatureKind kind);
FeatureKind feature_kind_from_string(const std::string& name);

// Two points closer than this (in location) are collapsed to one.
inline constexpr double kPointDistinctTol = 1e-12;

struct FeaturePoint {
    double x = 0.0;
    double y = 0.0;  // meaningful when the owning set has dim == 2
    std::optional<double> value;
    // Raw super-threshold run [lo, hi] a front point was reduced from.
    std::optional<std::pair<double, double>> run;
};

// Finite set of feature points, canonically sorted ascending by location
// (by time for peaks). May be empty; cardinality is data-dependent.
struct FeatureSet {
    FeatureKind kind = FeatureKind::level;
    int dim = 1;
    double time = 0.0;
    bool degenerate = false;
    std::vector<FeaturePoint> points;

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }
    bool carries_values() const {
        return kind == FeatureKind::argmax_with_value || kind == FeatureKind::peaks;
    }
    void canonicalize();
};

// Point-process corruption of a feature set: independent thinning with
// probability detect_prob, Gaussian jitter on kept points, Poisson clutter
// uniform over the domain.
struct FeatureNoiseSpec {
    double location_stddev = 0.0;
    double value_stddev = 0.0;
    double detect_prob = 1.0;
    double clutter_rate = 0.0;
    std::uint64_t seed = 0;

    void validate() const;
};

struct DomainBounds {
    double xlo = 0.0;
    double xhi = 1.0;
    double ylo = 0.0;
    double yhi = 1.0;
};

DomainBounds domain_of(const Grid1D& g);

// Locations where |central-difference gradient| exceeds the threshold,
// one representative point per contiguous run.
FeatureSet extract_front(const Field1D& u, double threshold, double time = 0.0);

// Boundary locations of the super-level region {u > threshold}.
FeatureSet extract_threshold(const Field1D& u, double threshold, double time = 0.0);

// Locations within tol*range of the field maximum, sub-grid refined.
FeatureSet extract_argmax(const Field1D& u, double tol, bool with_value = false,
                          double time = 0.0);

// Crossing locations of u - level (1-d) or marching-squares contour
// segment midpoints (2-d).
FeatureSet extract_levelset(const Field1D& u, double level, double time = 0.0);
FeatureSet extract_levelset(const Field2D& u, double level, double time = 0.0);

// Interior local maxima (t*, z*) of a sampled scalar series, sub-grid
// refined; plateaus report their midpoint once.
FeatureSet extract_peaks(const std::vector<std::pair<double, double>>& series);

FeatureSet corrupt(const FeatureSet& fs, const FeatureNoiseSpec& noise,
                   const DomainBounds& domain);

}  // namespace fida
