#pragma once

#include <string>

#include "gpmm/mesh.hpp"

namespace gpmm {

// Landmark files: JSON array of {"id": string, "coordinates": [x,y,z]}.
LandmarkSet load_landmarks(const std::string& path);
void save_landmarks(const LandmarkSet& landmarks, const std::string& path);

// Polyline files: JSON array of [x,y,z] triples, at least two.
Polyline3 load_polyline(const std::string& path);
void save_polyline(const Polyline3& line, const std::string& path);

// Indicator map files: {"level": j, "weights": [per-vertex]} or an array of
// such objects. Weights are clamped to [0,1] on load.
struct IndicatorMapData {
  int level = 0;
  Eigen::VectorXd weights;
};
std::vector<IndicatorMapData> load_indicator_maps(const std::string& path);

}  // namespace gpmm
