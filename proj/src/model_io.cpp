#include "gpmm/model_io.hpp"

#include <cstring>
#include <fstream>
#include <sstream>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "gpmm/error.hpp"
#include "gpmm/ply_io.hpp"

namespace gpmm {

namespace {

using nlohmann::json;

struct BlockWriter {
  json manifest_blocks = json::object();
  std::string data;

  void add(const std::string& name, const std::string& bytes) {
    manifest_blocks[name] = {{"offset", data.size()}, {"length", bytes.size()}};
    data += bytes;
  }

  void add_floats(const std::string& name, const double* values, std::size_t count) {
    std::string bytes(count * sizeof(float), '\0');
    for (std::size_t i = 0; i < count; ++i) {
      const float f = static_cast<float>(values[i]);
      std::memcpy(bytes.data() + i * sizeof(float), &f, sizeof(float));
    }
    add(name, bytes);
  }
};

struct BlockReader {
  json manifest;
  std::string data;

  std::string_view block(const std::string& name, const std::string& path) const {
    const auto& blocks = manifest.at("blocks");
    if (!blocks.contains(name))
      throw Error(path + ": container has no block '" + name + "'");
    const std::size_t offset = blocks.at(name).at("offset").get<std::size_t>();
    const std::size_t length = blocks.at(name).at("length").get<std::size_t>();
    if (offset + length > data.size())
      throw Error(path + ": block '" + name + "' exceeds the file");
    return std::string_view(data).substr(offset, length);
  }

  void read_floats(const std::string& name, const std::string& path, double* out,
                   std::size_t count) const {
    const std::string_view bytes = block(name, path);
    if (bytes.size() != count * sizeof(float))
      throw Error(path + ": block '" + name + "' has " + std::to_string(bytes.size()) +
                  " bytes, expected " + std::to_string(count * sizeof(float)));
    for (std::size_t i = 0; i < count; ++i) {
      float f;
      std::memcpy(&f, bytes.data() + i * sizeof(float), sizeof(float));
      out[i] = static_cast<double>(f);
    }
  }
};

void add_submodel(BlockWriter& writer, const std::string& prefix, const LowRankGP& model) {
  writer.add_floats(prefix + "mean", model.mean.data(),
                    static_cast<std::size_t>(model.mean.size()));
  writer.add_floats(prefix + "variances", model.variances.data(),
                    static_cast<std::size_t>(model.variances.size()));
  writer.add_floats(prefix + "basis", model.basis.data(),
                    static_cast<std::size_t>(model.basis.size()));
}

LowRankGP read_submodel(const BlockReader& reader, const std::string& prefix,
                        Eigen::Index rank, ReferencePtr reference,
                        const std::string& path) {
  const Eigen::Index n = reference->mesh().vertex_count();
  LowRankGP model;
  model.reference = std::move(reference);
  model.mean.resize(3, n);
  reader.read_floats(prefix + "mean", path, model.mean.data(),
                     static_cast<std::size_t>(3 * n));
  model.variances.resize(rank);
  reader.read_floats(prefix + "variances", path, model.variances.data(),
                     static_cast<std::size_t>(rank));
  model.basis.resize(3 * n, rank);
  reader.read_floats(prefix + "basis", path, model.basis.data(),
                     static_cast<std::size_t>(3 * n * rank));
  return model;
}

std::string mesh_bytes(const TriangleMesh& mesh) {
  std::ostringstream out(std::ios::binary);
  save_mesh(mesh, out, PlyFormat::BinaryLittleEndian);
  return out.str();
}

void write_container(const std::string& path, json manifest, const BlockWriter& writer) {
  manifest["blocks"] = writer.manifest_blocks;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open output file: " + path);
  out << manifest.dump() << "\n" << writer.data;
  out.close();
  if (!out) throw Error("failed to write container: " + path);
}

BlockReader read_container(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open container: " + path);
  BlockReader reader;
  std::string line;
  if (!std::getline(in, line)) throw Error(path + ": empty container");
  try {
    reader.manifest = json::parse(line);
  } catch (const json::exception& e) {
    throw Error(path + ": bad manifest: " + e.what());
  }
  std::ostringstream rest(std::ios::binary);
  rest << in.rdbuf();
  reader.data = rest.str();
  return reader;
}

ReferencePtr reference_from(const BlockReader& reader, const std::string& path) {
  const std::string_view bytes = reader.block("reference.ply", path);
  std::istringstream in(std::string(bytes), std::ios::binary);
  return make_reference(load_mesh(in, path + "#reference.ply"));
}

}  // namespace

void save_prior(const LowRankGP& model, const std::string& path) {
  BlockWriter writer;
  add_submodel(writer, "", model);
  writer.add("reference.ply", mesh_bytes(model.reference->mesh()));

  json manifest;
  manifest["type"] = "gpmm-prior";
  manifest["rank"] = model.rank();
  manifest["vertex_count"] = model.vertex_count();
  write_container(path, std::move(manifest), writer);
}

LowRankGP load_prior(const std::string& path) {
  const BlockReader reader = read_container(path);
  if (reader.manifest.value("type", "") != "gpmm-prior")
    throw Error(path + ": not a gpmm-prior container");
  const auto rank = reader.manifest.at("rank").get<Eigen::Index>();
  ReferencePtr reference = reference_from(reader, path);
  const auto vertex_count = reader.manifest.at("vertex_count").get<Eigen::Index>();
  if (vertex_count != reference->mesh().vertex_count())
    throw Error(path + ": manifest vertex count does not match the embedded mesh");
  return read_submodel(reader, "", rank, std::move(reference), path);
}

void save_morphable(const MorphableModel& model, const std::string& path) {
  BlockWriter writer;
  add_submodel(writer, "shape.", model.shape);
  add_submodel(writer, "color.", model.color);
  add_submodel(writer, "expression.", model.expression);
  writer.add("reference.ply", mesh_bytes(model.reference()->mesh()));

  json manifest;
  manifest["type"] = "morphable-model";
  manifest["vertex_count"] = model.reference()->mesh().vertex_count();
  manifest["ranks"] = {{"shape", model.shape.rank()},
                       {"color", model.color.rank()},
                       {"expression", model.expression.rank()}};
  write_container(path, std::move(manifest), writer);
}

MorphableModel load_morphable(const std::string& path) {
  const BlockReader reader = read_container(path);
  if (reader.manifest.value("type", "") != "morphable-model")
    throw Error(path + ": not a morphable-model container");
  ReferencePtr reference = reference_from(reader, path);
  const auto& ranks = reader.manifest.at("ranks");
  MorphableModel model;
  model.shape = read_submodel(reader, "shape.", ranks.at("shape").get<Eigen::Index>(),
                              reference, path);
  model.color = read_submodel(reader, "color.", ranks.at("color").get<Eigen::Index>(),
                              reference, path);
  model.expression = read_submodel(reader, "expression.",
                                   ranks.at("expression").get<Eigen::Index>(), reference, path);
  return model;
}

std::string container_type(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open container: " + path);
  std::string line;
  if (!std::getline(in, line)) throw Error(path + ": empty container");
  try {
    const json manifest = json::parse(line);
    const std::string type = manifest.value("type", "");
    if (type != "gpmm-prior" && type != "morphable-model")
      throw Error(path + ": unknown container type '" + type + "'");
    return type;
  } catch (const json::exception& e) {
    throw Error(path + ": bad manifest: " + e.what());
  }
}

}  // namespace gpmm
