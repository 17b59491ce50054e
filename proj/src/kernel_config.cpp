#include "gpmm/kernel_config.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "gpmm/error.hpp"
#include "gpmm/json_io.hpp"
#include "gpmm/ply_io.hpp"

namespace gpmm {

namespace {

using nlohmann::json;

struct Node {
  ScalarKernelPtr scalar;
  MatrixKernelPtr matrix;
  Eigen::Matrix3Xd mean;  // empty = zero

  bool is_scalar() const { return scalar != nullptr; }
};

Eigen::Matrix3Xd add_means(const Eigen::Matrix3Xd& a, const Eigen::Matrix3Xd& b) {
  if (a.size() == 0) return b;
  if (b.size() == 0) return a;
  if (a.cols() != b.cols()) throw Error("kernel config: mean field size mismatch");
  return a + b;
}

struct Parser {
  ReferencePtr reference;
  std::filesystem::path base_dir;

  std::string resolve(const std::string& path) const {
    std::filesystem::path p(path);
    if (p.is_absolute()) return p.string();
    return (base_dir / p).string();
  }

  Node parse(const json& j) const {
    if (!j.is_object() || !j.contains("type"))
      throw Error("kernel config: every node needs a 'type'");
    const std::string type = j.at("type").get<std::string>();

    if (type == "squared_exponential") {
      Node node;
      node.scalar = squared_exponential(j.at("scaling").get<double>(),
                                        j.at("sigma").get<double>());
      return node;
    }
    if (type == "bspline_multiscale") {
      Node node;
      node.matrix = multiscale_bspline(j.at("j_lo").get<int>(), j.at("j_hi").get<int>(),
                                       j.at("scales").get<std::vector<double>>());
      return node;
    }
    if (type == "spatially_varying") return parse_spatially_varying(j);
    if (type == "mirror_symmetric") {
      const Node child = parse(j.at("child"));
      Node node;
      node.matrix = child.is_scalar() ? mirror_symmetrize(child.scalar)
                                      : mirror_symmetrize(child.matrix);
      node.mean = child.mean;
      return node;
    }
    if (type == "sample_covariance") return parse_sample_covariance(j);
    if (type == "isotropic") {
      const Node child = parse(j.at("child"));
      if (!child.is_scalar())
        throw Error("kernel config: 'isotropic' needs a scalar child");
      Node node;
      node.matrix = isotropic(child.scalar);
      return node;
    }
    if (type == "add") return parse_add(j);
    if (type == "scale") {
      const Node child = parse(j.at("child"));
      const double factor = j.at("factor").get<double>();
      Node node;
      if (child.is_scalar()) {
        node.scalar = scale(factor, child.scalar);
      } else {
        node.matrix = scale(factor, child.matrix);
        node.mean = child.mean;
      }
      return node;
    }
    if (type == "multiply") {
      const auto& children = j.at("children");
      if (!children.is_array() || children.size() < 2)
        throw Error("kernel config: 'multiply' needs at least 2 children");
      Node result = parse(children[0]);
      for (std::size_t i = 1; i < children.size(); ++i) {
        const Node next = parse(children[i]);
        if (!result.is_scalar() || !next.is_scalar())
          throw Error("kernel config: 'multiply' is defined for scalar kernels only");
        result.scalar = multiply(result.scalar, next.scalar);
      }
      return result;
    }
    throw Error("kernel config: unknown node type '" + type + "'");
  }

  Node parse_add(const json& j) const {
    const auto& children = j.at("children");
    if (!children.is_array() || children.size() < 2)
      throw Error("kernel config: 'add' needs at least 2 children");
    Node result = parse(children[0]);
    for (std::size_t i = 1; i < children.size(); ++i) {
      const Node next = parse(children[i]);
      if (result.is_scalar() != next.is_scalar())
        throw Error("kernel config: 'add' children must all be scalar or all matrix");
      if (result.is_scalar()) {
        result.scalar = add(result.scalar, next.scalar);
      } else {
        result.matrix = add(result.matrix, next.matrix);
        result.mean = add_means(result.mean, next.mean);
      }
    }
    return result;
  }

  Node parse_spatially_varying(const json& j) const {
    const auto maps = load_indicator_maps(resolve(j.at("indicator_map_path").get<std::string>()));
    std::vector<VaryingLevel> levels;
    for (const auto& level : j.at("levels")) {
      const int level_j = level.at("j").get<int>();
      const double s = level.contains("scale") ? level.at("scale").get<double>() : 1.0;
      ScalarKernelPtr kernel = scale(s, bspline_level_kernel(level_j));

      const IndicatorMapData* found = nullptr;
      for (const auto& map : maps) {
        if (map.level == level_j) found = &map;
      }
      // Levels without a map entry stay active everywhere.
      Eigen::VectorXd weights =
          found ? found->weights
                : Eigen::VectorXd::Ones(reference->mesh().vertex_count());
      levels.push_back({std::move(kernel), IndicatorMap(reference, std::move(weights))});
    }
    Node node;
    node.matrix = spatially_varying(std::move(levels));
    return node;
  }

  Node parse_sample_covariance(const json& j) const {
    const auto paths = j.at("prototype_paths").get<std::vector<std::string>>();
    std::vector<DeformationPrototype> prototypes;
    for (const std::string& path : paths) {
      const TriangleMesh proto = load_mesh(resolve(path));
      if (proto.vertex_count() != reference->mesh().vertex_count())
        throw Error("kernel config: prototype " + path + " has " +
                    std::to_string(proto.vertex_count()) +
                    " vertices, reference has " +
                    std::to_string(reference->mesh().vertex_count()));
      prototypes.push_back(proto.vertices - reference->mesh().vertices);
    }
    const SampleCovariance cov = sample_covariance_kernel(reference, prototypes);
    Node node;
    node.matrix = cov.kernel;
    node.mean = cov.mean;
    return node;
  }
};

FieldPrior finish(Node node) {
  if (node.is_scalar())
    throw Error("kernel config: top-level kernel must be matrix-valued; wrap scalar "
                "kernels in an 'isotropic' or 'mirror_symmetric' node");
  FieldPrior prior;
  prior.kernel = std::move(node.matrix);
  prior.mean = std::move(node.mean);
  return prior;
}

}  // namespace

FieldPrior parse_kernel_config(const std::string& json_text, ReferencePtr reference,
                               const std::string& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(std::string("kernel config: ") + e.what());
  }
  Parser parser{std::move(reference), base_dir};
  return finish(parser.parse(j));
}

FieldPrior load_kernel_config(const std::string& path, ReferencePtr reference) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open kernel config: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_kernel_config(text, std::move(reference),
                             std::filesystem::path(path).parent_path().string());
}

}  // namespace gpmm
