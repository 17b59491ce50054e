#pragma once

#include <string>

#include "gpmm/kernels.hpp"

namespace gpmm {

// Parses a JSON kernel expression tree into a matrix-valued prior over the
// reference surface. Node types:
//   {"type":"squared_exponential","scaling":s,"sigma":mm}          (scalar)
//   {"type":"bspline_multiscale","j_lo":j,"j_hi":J,"scales":[..]}  (matrix)
//   {"type":"spatially_varying","levels":[{"j":j,"scale":s}, ..],
//    "indicator_map_path":"maps.json"}                             (matrix)
//   {"type":"mirror_symmetric","child":node}                       (matrix)
//   {"type":"sample_covariance","prototype_paths":["a.ply", ..]}   (matrix)
//   {"type":"isotropic","child":scalar-node}                       (matrix)
//   {"type":"add","children":[..]}   {"type":"scale","factor":f,"child":..}
//   {"type":"multiply","children":[..]}                            (scalar)
// sample_covariance prototypes are meshes with the reference topology; the
// displacement fields are their vertex differences from the reference.
// Relative paths resolve against the config file location.
FieldPrior load_kernel_config(const std::string& path, ReferencePtr reference);

// Same, from an in-memory document; `base_dir` anchors relative paths.
FieldPrior parse_kernel_config(const std::string& json_text, ReferencePtr reference,
                               const std::string& base_dir = ".");

}  // namespace gpmm
