#pragma once

#include <string>

#include "gpmm/lowrank.hpp"
#include "gpmm/modelbuild.hpp"

namespace gpmm {

// Model container: a single-line JSON manifest followed by little-endian
// float32 blocks (mean, variances, basis per model) and the reference mesh
// embedded as a binary PLY block. Offsets in the manifest are relative to
// the first byte after the manifest line. Save/load/save is byte-identical.
void save_prior(const LowRankGP& model, const std::string& path);
LowRankGP load_prior(const std::string& path);

void save_morphable(const MorphableModel& model, const std::string& path);
MorphableModel load_morphable(const std::string& path);

// "gpmm-prior" or "morphable-model"; throws on anything else.
std::string container_type(const std::string& path);

}  // namespace gpmm
