#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "gpmm/mesh.hpp"

namespace gpmm {

enum class PlyFormat { Ascii, BinaryLittleEndian };

// Reads an ascii or binary_little_endian PLY. Vertex x/y/z are required;
// red/green/blue (uchar) become colors in [0,1]; other scalar properties are
// skipped. The mesh is validated before it is returned.
TriangleMesh load_mesh(const std::string& path);
TriangleMesh load_mesh(std::istream& in, const std::string& name = "<stream>");

// Writes x,y,z as float32 plus red,green,blue as uchar when colors are
// present. Binary output round-trips coordinates bit-exactly.
void save_mesh(const TriangleMesh& mesh, const std::string& path,
               PlyFormat format = PlyFormat::BinaryLittleEndian,
               const std::vector<std::string>& comments = {});
void save_mesh(const TriangleMesh& mesh, std::ostream& out,
               PlyFormat format = PlyFormat::BinaryLittleEndian,
               const std::vector<std::string>& comments = {});

}  // namespace gpmm
