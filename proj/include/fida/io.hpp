#pragma once

#include <string>
#include <vector>

#include "fida/features.hpp"
#include "fida/models.hpp"
#include "fida/twinlab.hpp"

namespace fida::io {

// Field file format:
//   {"grid": {"x0": f, "dx": f, "n": int, "periodic": bool}, "values": [f,...]}
// 2-d adds "gridy" and row-major "values".
std::string field_to_json(const Field1D& f);
std::string field_to_json(const Field2D& f);
Field1D field1d_from_json(const std::string& text);
Field2D field2d_from_json(const std::string& text);
bool json_is_field2d(const std::string& text);

// FeatureSet file format:
//   {"kind": str, "time": f, "degenerate": bool,
//    "points": [{"loc": f|[f,f], "value": f|null}, ...]}
std::string featureset_to_json(const FeatureSet& fs);
FeatureSet featureset_from_json(const std::string& text);

// Trajectory file format: {"times": [f,...], "states": [[f,...],...]}
std::string trajectory_to_json(const OdeTrajectory& traj);
OdeTrajectory trajectory_from_json(const std::string& text);

TwinConfig twin_config_from_json(const std::string& text);
std::string twin_config_to_json(const TwinConfig& cfg);

std::string twin_report_to_json(const TwinReport& report, const TwinConfig& cfg);
std::string twin_report_to_csv(const TwinReport& report);
std::string twin_diagnostics_to_json(const TwinReport& report);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

std::string field_to_csv(const Field1D& f);
std::string trajectory_to_csv(const OdeTrajectory& traj);
std::string cost_curve_to_csv(const std::vector<std::pair<double, double>>& curve);

// Deterministic shortest-round-trip formatting used in all CSV output.
std::string format_double(double v);

}  // namespace fida::io
