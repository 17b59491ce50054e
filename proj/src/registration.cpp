#include "gpmm/registration.hpp"

#include <cmath>

#include "gpmm/error.hpp"

namespace gpmm {

double huber(double x, double delta) {
  const double a = std::abs(x);
  if (a < delta) return 0.5 * x * x;
  return delta * (a - 0.5 * delta);
}

void RegistrationConfig::validate() const {
  if (annealing_schedule.empty()) throw Error("config: empty annealing schedule");
  for (std::size_t i = 0; i < annealing_schedule.size(); ++i) {
    if (annealing_schedule[i] <= 0.0)
      throw Error("config: annealing weights must be positive");
    if (i > 0 && annealing_schedule[i] >= annealing_schedule[i - 1])
      throw Error("config: annealing schedule must be strictly decreasing");
  }
  if (sigma <= 0.0 || huber_delta <= 0.0 || outlier_distance_threshold <= 0.0 ||
      landmark_noise <= 0.0)
    throw Error("config: noise levels and thresholds must be positive");
  for (const LineConstraint& line : lines) {
    if (line.reference.size() < 2 || line.target.size() < 2)
      throw Error("config: polylines need at least 2 points");
  }
}

RegistrationObjective::RegistrationObjective(const LowRankGP& gp, const AabbTree& target,
                                             double eta, double huber_delta,
                                             std::vector<Eigen::Index> active)
    : gp_(&gp), target_(&target), eta_(eta), delta_(huber_delta),
      active_(std::move(active)) {
  if (active_.empty()) throw Error("objective: empty active vertex set");
}

double RegistrationObjective::evaluate(const Eigen::VectorXd& alpha,
                                       Eigen::VectorXd& gradient,
                                       const Eigen::Matrix3Xd* frozen_targets) const {
  const Eigen::Matrix3Xd field = gp_->evaluate_all(alpha);
  const Eigen::Matrix3Xd& vertices = gp_->reference->mesh().vertices;

  double value = eta_ * alpha.squaredNorm();
  // Weighted residuals stacked per vertex; one GEMV lifts them into
  // coefficient space afterwards.
  Eigen::VectorXd weighted = Eigen::VectorXd::Zero(3 * gp_->vertex_count());
  for (std::size_t a = 0; a < active_.size(); ++a) {
    const Eigen::Index i = active_[a];
    const Vec3 p = vertices.col(i) + field.col(i);
    const Vec3 cp = frozen_targets ? frozen_targets->col(static_cast<Eigen::Index>(a))
                                   : target_->closest_point(p).point;
    const Vec3 r = p - cp;
    const double d = r.norm();
    value += huber(d, delta_);
    const double w = d < delta_ ? 1.0 : delta_ / d;
    weighted.segment<3>(3 * i) = w * r;
  }

  gradient = 2.0 * eta_ * alpha;
  gradient.noalias() +=
      gp_->variances.cwiseSqrt().cwiseProduct(gp_->basis.transpose() * weighted);
  return value;
}

double RegistrationObjective::operator()(const Eigen::VectorXd& alpha,
                                         Eigen::VectorXd& gradient) const {
  return evaluate(alpha, gradient, nullptr);
}

ObjectiveFunction RegistrationObjective::frozen_at(const Eigen::VectorXd& alpha) const {
  const Eigen::Matrix3Xd field = gp_->evaluate_all(alpha);
  const Eigen::Matrix3Xd& vertices = gp_->reference->mesh().vertices;
  auto targets = std::make_shared<Eigen::Matrix3Xd>(3, static_cast<Eigen::Index>(active_.size()));
  for (std::size_t a = 0; a < active_.size(); ++a) {
    const Eigen::Index i = active_[a];
    targets->col(static_cast<Eigen::Index>(a)) =
        target_->closest_point(vertices.col(i) + field.col(i)).point;
  }
  return [self = *this, targets](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    return self.evaluate(x, g, targets.get());
  };
}

ObjectiveFunction RegistrationObjective::as_function() const {
  return [self = *this](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    return self.evaluate(x, g, nullptr);
  };
}

std::vector<bool> filter_outliers(const LowRankGP& gp, const Eigen::VectorXd& alpha,
                                  const AabbTree& target, const RegistrationConfig& cfg) {
  const Eigen::Matrix3Xd field = gp.evaluate_all(alpha);
  const Eigen::Matrix3Xd& vertices = gp.reference->mesh().vertices;
  std::vector<bool> active(static_cast<std::size_t>(gp.vertex_count()), true);
  for (Eigen::Index i = 0; i < gp.vertex_count(); ++i) {
    const SurfacePoint cp = target.closest_point(vertices.col(i) + field.col(i));
    const double distance = (cp.point - (vertices.col(i) + field.col(i))).norm();
    if (distance > cfg.outlier_distance_threshold || cp.on_boundary)
      active[static_cast<std::size_t>(i)] = false;
  }
  return active;
}

LowRankGP line_posterior(const LowRankGP& gp, const Eigen::VectorXd& alpha,
                         const std::vector<LineConstraint>& lines, double noise) {
  if (lines.empty()) return gp;
  std::vector<LandmarkObservation> observations;
  for (const LineConstraint& line : lines) {
    if (line.reference.size() < 2 || line.target.size() < 2)
      throw Error("line_posterior: polylines need at least 2 points");
    for (const Vec3& p : line.reference) {
      const SurfacePoint sp = gp.reference->locate(p);
      const Vec3 current = sp.point + gp.evaluate(alpha, sp);
      const Vec3 match = closest_point_on_polyline(line.target, current);
      observations.push_back({sp.point, match - sp.point, noise});
    }
  }
  return posterior(gp, observations);
}

RegistrationResult register_surface(const LowRankGP& prior, const TriangleMesh& target,
                                    const LandmarkSet& reference_landmarks,
                                    const LandmarkSet& target_landmarks,
                                    const RegistrationConfig& cfg) {
  cfg.validate();

  std::vector<LandmarkObservation> observations;
  for (const Landmark& lm : reference_landmarks.entries) {
    if (const Landmark* matched = target_landmarks.find(lm.id)) {
      observations.push_back({lm.point, matched->point - lm.point, cfg.landmark_noise});
    }
  }
  if (observations.empty())
    throw Error("register: no common landmark names between reference and target");

  const AabbTree target_tree(target);
  const LowRankGP landmark_model = posterior(prior, observations);

  RegistrationResult result;
  // Current fit, tracked as a field so it transfers across stage models.
  Eigen::Matrix3Xd fit = landmark_model.mean;
  LowRankGP stage_model;
  Eigen::VectorXd alpha;

  for (std::size_t stage = 0; stage < cfg.annealing_schedule.size(); ++stage) {
    const double eta = cfg.annealing_schedule[stage];
    const Eigen::VectorXd fit_coeffs = landmark_model.project(fit);

    std::vector<bool> active_mask = filter_outliers(landmark_model, fit_coeffs, target_tree, cfg);
    std::vector<Eigen::Index> active_indices;
    for (std::size_t i = 0; i < active_mask.size(); ++i) {
      if (active_mask[i]) active_indices.push_back(static_cast<Eigen::Index>(i));
    }
    if (active_indices.empty())
      throw NumericalError("register: all vertices filtered as outliers at stage " +
                           std::to_string(stage));

    stage_model = line_posterior(landmark_model, fit_coeffs, cfg.lines, cfg.sigma);
    alpha = stage_model.project(fit);

    RegistrationObjective objective(stage_model, target_tree, eta, cfg.huber_delta,
                                    std::move(active_indices));
    const OptimizerResult opt = minimize(objective.as_function(), alpha, cfg.optimizer);
    if (opt.status == OptimizerStatus::NonFinite)
      throw NumericalError("register: stage " + std::to_string(stage) +
                           " aborted: " + opt.message);

    alpha = opt.x;
    fit = stage_model.evaluate_all(alpha);
    result.stage_objectives.push_back(opt.value);
    result.stage_iterations.push_back(opt.iterations);
  }

  // Reported mask reflects the final fit, so downstream consumers see the
  // vertices that actually face valid target surface.
  result.active = filter_outliers(stage_model, alpha, target_tree, cfg);

  result.coefficients = alpha;
  result.registered = prior.reference->mesh();
  result.registered.vertices = prior.reference->mesh().vertices + fit;

  result.residuals.resize(prior.vertex_count());
  for (Eigen::Index i = 0; i < prior.vertex_count(); ++i) {
    const Vec3 p = result.registered.vertices.col(i);
    result.residuals[i] = (target_tree.closest_point(p).point - p).norm();
  }
  return result;
}

}  // namespace gpmm
