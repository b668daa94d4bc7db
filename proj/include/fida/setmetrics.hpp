#pragma once

#include <string>
#include <vector>

#include "fida/features.hpp"

namespace fida {

enum class MetricKind { hausdorff, chamfer, ospa };

const char* to_string(MetricKind kind);
MetricKind metric_kind_from_string(const std::string& name);

struct MetricSpec {
    MetricKind kind = MetricKind::ospa;
    double ospa_cutoff = 0.25;
    double ospa_order = 2.0;
    // Weight of the value component in the point distance
    // d((x,u),(x',u')) = sqrt(|x-x'|^2 + w^2 |u-u'|^2). Zero ignores values.
    double value_weight = 0.0;

    void validate() const;
};

double point_distance(const FeaturePoint& a, const FeaturePoint& b, int dim,
                      double value_weight);

// max over both directions of the worst nearest-neighbour distance.
// Throws EmptySetError on an empty operand.
double hausdorff(const FeatureSet& a, const FeatureSet& b, const MetricSpec& spec);

// Symmetrised mean nearest-neighbour distance. Not a metric (no triangle
// inequality); throws EmptySetError on an empty operand.
double chamfer(const FeatureSet& a, const FeatureSet& b, const MetricSpec& spec);

// Optimal SubPattern Assignment distance in [0, cutoff]; defined for empty
// sets (both empty -> 0, one empty -> cutoff).
double ospa(const FeatureSet& a, const FeatureSet& b, const MetricSpec& spec);

double set_distance(const FeatureSet& a, const FeatureSet& b, const MetricSpec& spec);

// Exact min-cost assignment of rows to columns (rows <= cols) by the
// Hungarian algorithm with potentials; returns the column matched to each row.
std::vector<int> solve_assignment(const std::vector<double>& cost, int rows, int cols);

}  // namespace fida
