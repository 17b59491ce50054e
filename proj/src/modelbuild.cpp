#include "gpmm/modelbuild.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "gpmm/error.hpp"

namespace gpmm {

namespace {

constexpr double kSingularClamp = 1e-10;  // relative to the largest value

void check_topology(const TriangleMesh& mesh, const TriangleMesh& reference,
                    const std::string& what) {
  if (mesh.vertex_count() != reference.vertex_count())
    throw Error(what + ": vertex count " + std::to_string(mesh.vertex_count()) +
                " does not match reference " + std::to_string(reference.vertex_count()));
  if (mesh.triangles.cols() != reference.triangles.cols() ||
      mesh.triangles != reference.triangles)
    throw Error(what + ": triangle list differs from the reference topology");
}

// PCA in KL form over per-vertex 3-vector fields.
LowRankGP pca_model(const std::vector<Eigen::Matrix3Xd>& fields, ReferencePtr reference) {
  const Eigen::Index n = reference->mesh().vertex_count();
  const Eigen::Index count = static_cast<Eigen::Index>(fields.size());

  LowRankGP model;
  model.reference = std::move(reference);
  model.mean = Eigen::Matrix3Xd::Zero(3, n);
  for (const auto& field : fields) model.mean += field;
  model.mean /= static_cast<double>(count);

  if (count < 2) {
    model.basis.resize(3 * n, 0);
    model.variances.resize(0);
    return model;
  }

  Eigen::MatrixXd centered(3 * n, count);
  double field_scale = 0.0;
  for (Eigen::Index i = 0; i < count; ++i) {
    const Eigen::Matrix3Xd dev = fields[static_cast<std::size_t>(i)] - model.mean;
    centered.col(i) = Eigen::Map<const Eigen::VectorXd>(dev.data(), dev.size());
    field_scale = std::max(field_scale, fields[static_cast<std::size_t>(i)].norm());
  }

  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinU);
  const Eigen::VectorXd singular = svd.singularValues();
  // Anchor against the data magnitude as well, so identical samples whose
  // centered matrix is pure roundoff collapse to rank zero.
  const double clamp =
      singular.size() > 0
          ? std::max(kSingularClamp * singular[0], 1e-9 * field_scale)
          : 0.0;
  Eigen::Index kept = 0;
  while (kept < singular.size() && singular[kept] > clamp) ++kept;

  model.basis = svd.matrixU().leftCols(kept);
  model.variances = singular.head(kept).array().square() / static_cast<double>(count - 1);
  return model;
}

}  // namespace

LowRankGP build_shape_model(const std::vector<const TriangleMesh*>& registered,
                            ReferencePtr reference) {
  if (registered.size() < 2)
    throw Error("build_shape_model: need at least 2 registered meshes");
  std::vector<Eigen::Matrix3Xd> fields;
  fields.reserve(registered.size());
  for (std::size_t i = 0; i < registered.size(); ++i) {
    check_topology(*registered[i], reference->mesh(),
                   "build_shape_model: mesh " + std::to_string(i));
    fields.push_back(registered[i]->vertices - reference->mesh().vertices);
  }
  return pca_model(fields, std::move(reference));
}

ColorMean color_mean_missing(const std::vector<ColorSample>& samples,
                             const TriangleMesh& reference) {
  if (samples.empty()) throw Error("color_mean_missing: no samples");
  const Eigen::Index n = samples.front().colors.cols();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].colors.cols() != n ||
        samples[i].visible.size() != static_cast<std::size_t>(n))
      throw Error("color_mean_missing: sample " + std::to_string(i) + " size mismatch");
  }

  ColorMean result;
  result.mean = Eigen::Matrix3Xd::Zero(3, n);
  result.fallback.assign(static_cast<std::size_t>(n), false);
  for (Eigen::Index v = 0; v < n; ++v) {
    double weight = 0.0;
    for (const ColorSample& sample : samples) {
      if (sample.visible[static_cast<std::size_t>(v)]) {
        result.mean.col(v) += sample.colors.col(v);
        weight += 1.0;
      }
    }
    if (weight > 0.0) {
      result.mean.col(v) /= weight;
    } else {
      if (!reference.has_colors())
        throw Error("color_mean_missing: vertex " + std::to_string(v) +
                    " is visible in no sample and the reference has no colors");
      result.mean.col(v) = reference.colors.col(v);
      result.fallback[static_cast<std::size_t>(v)] = true;
    }
  }
  return result;
}

namespace {

class ColorMissingKernel final : public MatrixKernel {
 public:
  ColorMissingKernel(ReferencePtr surface, std::vector<Eigen::Matrix3Xd> deviations,
                     std::vector<std::vector<bool>> visible, ScalarKernelPtr prior)
      : surface_(std::move(surface)), deviations_(std::move(deviations)),
        visible_(std::move(visible)), prior_(std::move(prior)) {}

  Mat3 operator()(const Vec3& x, const Vec3& y) const override {
    const Eigen::Index vx = snap(x);
    const Eigen::Index vy = snap(y);
    const Vec3 px = surface_->mesh().vertices.col(vx);
    const Vec3 py = surface_->mesh().vertices.col(vy);
    const double prior_value = (*prior_)(px, py);

    Mat3 sum = Mat3::Zero();
    for (std::size_t i = 0; i < deviations_.size(); ++i) {
      const bool both = visible_[i][static_cast<std::size_t>(vx)] &&
                        visible_[i][static_cast<std::size_t>(vy)];
      if (both) {
        sum += deviations_[i].col(vx) * deviations_[i].col(vy).transpose();
      } else {
        sum += prior_value * Mat3::Identity();
      }
    }
    return sum / static_cast<double>(deviations_.size() - 1);
  }

 private:
  Eigen::Index snap(const Vec3& x) const {
    const SurfacePoint sp = surface_->locate(x);
    int corner = 0;
    sp.barycentric.maxCoeff(&corner);
    return surface_->mesh().triangles(corner, sp.triangle);
  }

  ReferencePtr surface_;
  std::vector<Eigen::Matrix3Xd> deviations_;
  std::vector<std::vector<bool>> visible_;
  ScalarKernelPtr prior_;
};

}  // namespace

MatrixKernelPtr color_covariance_missing(const std::vector<ColorSample>& samples,
                                         ScalarKernelPtr color_prior,
                                         ReferencePtr reference) {
  if (samples.size() < 2)
    throw Error("color_covariance_missing: need at least 2 samples");
  const ColorMean mean = color_mean_missing(samples, reference->mesh());
  const Eigen::Index n = reference->mesh().vertex_count();
  if (mean.mean.cols() != n)
    throw Error("color_covariance_missing: sample size does not match reference");

  std::vector<Eigen::Matrix3Xd> deviations;
  std::vector<std::vector<bool>> visible;
  deviations.reserve(samples.size());
  for (const ColorSample& sample : samples) {
    deviations.push_back(sample.colors - mean.mean);
    visible.push_back(sample.visible);
  }
  return std::make_shared<ColorMissingKernel>(std::move(reference), std::move(deviations),
                                              std::move(visible), std::move(color_prior));
}

LowRankBuild build_color_model(const std::vector<ColorSample>& samples,
                               ReferencePtr reference, const ColorModelOptions& options) {
  const ColorMean mean = color_mean_missing(samples, reference->mesh());
  const MatrixKernelPtr kernel = color_covariance_missing(
      samples, squared_exponential(options.prior_scaling, options.prior_sigma), reference);
  return build_low_rank(*kernel, mean.mean, reference, options.nystrom);
}

LowRankGP build_expression_model(const std::vector<const TriangleMesh*>& neutrals,
                                 const std::vector<const TriangleMesh*>& expressions,
                                 ReferencePtr reference) {
  if (neutrals.size() != expressions.size())
    throw Error("build_expression_model: neutral/expression pairing mismatch (" +
                std::to_string(neutrals.size()) + " vs " +
                std::to_string(expressions.size()) + ")");
  if (neutrals.empty()) throw Error("build_expression_model: no expression pairs");

  std::vector<Eigen::Matrix3Xd> diffs;
  diffs.reserve(neutrals.size());
  for (std::size_t i = 0; i < neutrals.size(); ++i) {
    check_topology(*neutrals[i], reference->mesh(),
                   "build_expression_model: neutral " + std::to_string(i));
    check_topology(*expressions[i], reference->mesh(),
                   "build_expression_model: expression " + std::to_string(i));
    diffs.push_back(expressions[i]->vertices - neutrals[i]->vertices);
  }
  return pca_model(diffs, std::move(reference));
}

MorphableModel assemble_model(LowRankGP shape, LowRankGP color, LowRankGP expression) {
  const TriangleMesh& ref = shape.reference->mesh();
  check_topology(color.reference->mesh(), ref, "assemble_model: color model");
  check_topology(expression.reference->mesh(), ref, "assemble_model: expression model");
  return {std::move(shape), std::move(color), std::move(expression)};
}

TriangleMesh instance(const MorphableModel& model, const Eigen::VectorXd& shape_coeffs,
                      const Eigen::VectorXd& color_coeffs,
                      const Eigen::VectorXd& expression_coeffs) {
  TriangleMesh mesh = model.reference()->mesh();
  mesh.vertices += model.shape.evaluate_all(shape_coeffs);
  mesh.vertices += model.expression.evaluate_all(expression_coeffs);
  mesh.colors = model.color.evaluate_all(color_coeffs).cwiseMax(0.0).cwiseMin(1.0);
  return mesh;
}

LandmarkReport evaluate_landmarks(
    const LandmarkSet& registered, const LandmarkSet& ground_truth,
    const std::vector<std::pair<std::string, std::string>>& region_of) {
  auto region_for = [&](const std::string& name) -> std::string {
    for (const auto& [lm, region] : region_of) {
      if (lm == name) return region;
    }
    return "Unassigned";
  };

  std::vector<std::string> order;
  for (const auto& [lm, region] : region_of) {
    if (std::find(order.begin(), order.end(), region) == order.end())
      order.push_back(region);
  }

  std::vector<std::pair<std::string, std::vector<double>>> grouped;
  for (const std::string& region : order) grouped.push_back({region, {}});

  LandmarkReport report;
  for (const Landmark& lm : registered.entries) {
    const Landmark* matched = ground_truth.find(lm.id);
    if (!matched) {
      report.unmatched.push_back(lm.id);
      continue;
    }
    const double distance = (lm.point - matched->point).norm();
    const std::string region = region_for(lm.id);
    auto it = std::find_if(grouped.begin(), grouped.end(),
                           [&](const auto& g) { return g.first == region; });
    if (it == grouped.end()) {
      grouped.push_back({region, {}});
      it = std::prev(grouped.end());
    }
    it->second.push_back(distance);
  }
  for (const Landmark& lm : ground_truth.entries) {
    if (!registered.contains(lm.id)) report.unmatched.push_back(lm.id);
  }

  for (const auto& [region, distances] : grouped) {
    if (distances.empty()) continue;
    RegionStat stat;
    stat.region = region;
    stat.count = static_cast<int>(distances.size());
    for (double d : distances) stat.mean += d;
    stat.mean /= static_cast<double>(stat.count);
    if (stat.count > 1) {
      double ss = 0.0;
      for (double d : distances) ss += (d - stat.mean) * (d - stat.mean);
      stat.stddev = std::sqrt(ss / static_cast<double>(stat.count - 1));
    }
    report.regions.push_back(stat);
  }
  return report;
}

std::string LandmarkReport::table() const {
  std::size_t width = std::string("Face Region").size();
  for (const RegionStat& stat : regions) width = std::max(width, stat.region.size());

  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(width + 2)) << "Face Region"
      << std::setw(18) << "Dist [mm]" << "Count\n";
  out << std::fixed << std::setprecision(2);
  for (const RegionStat& stat : regions) {
    std::ostringstream dist;
    dist << std::fixed << std::setprecision(2) << stat.mean << " +- " << stat.stddev;
    out << std::setw(static_cast<int>(width + 2)) << stat.region << std::setw(18)
        << dist.str() << stat.count << "\n";
  }
  if (!unmatched.empty()) {
    out << "Unmatched landmarks:";
    for (const std::string& name : unmatched) out << " " << name;
    out << "\n";
  }
  return out.str();
}

}  // namespace gpmm
