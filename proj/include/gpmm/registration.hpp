#pragma once

#include <vector>

#include "gpmm/lowrank.hpp"
#include "gpmm/optimize.hpp"

namespace gpmm {

// Huber loss: x^2/2 inside |x| < delta, linear growth delta*(|x| - delta/2)
// outside; continuous with continuous first derivative.
double huber(double x, double delta);

struct LineConstraint {
  Polyline3 reference;  // on the reference surface
  Polyline3 target;
};

struct RegistrationConfig {
  // Regularization weights, one optimization stage each, strictly decreasing.
  std::vector<double> annealing_schedule{1e-1, 1e-2, 1e-3, 1e-4, 1e-5};
  double sigma = 1.0;                      // line observation noise (mm)
  double huber_delta = 1.0;                // mm
  double outlier_distance_threshold = 5.0; // mm
  double landmark_noise = 1.0;             // mm
  std::vector<LineConstraint> lines;
  OptimizerConfig optimizer;

  void validate() const;  // throws Error on violated invariants
};

struct RegistrationResult {
  Eigen::VectorXd coefficients;          // in the final stage model
  TriangleMesh registered;               // reference topology, warped
  Eigen::VectorXd residuals;             // per-vertex distance to target (mm)
  std::vector<bool> active;              // final-stage active-vertex mask
  std::vector<double> stage_objectives;  // final objective value per stage
  std::vector<int> stage_iterations;
};

// Negative-log MAP objective for one annealing stage:
//   E(alpha) = eta |alpha|^2 + sum_active huber(|cp(p_i) - p_i|, delta),
// with p_i = x_i + u(alpha, x_i). Closest points are re-found at every
// evaluation and held fixed in the gradient (ICP-style subgradient; exact
// wherever the closest point is unique).
class RegistrationObjective {
 public:
  RegistrationObjective(const LowRankGP& gp, const AabbTree& target, double eta,
                        double huber_delta, std::vector<Eigen::Index> active);

  double operator()(const Eigen::VectorXd& alpha, Eigen::VectorXd& gradient) const;

  // Same objective with correspondences frozen at the given coefficients;
  // used for finite-difference verification.
  ObjectiveFunction frozen_at(const Eigen::VectorXd& alpha) const;

  ObjectiveFunction as_function() const;

 private:
  double evaluate(const Eigen::VectorXd& alpha, Eigen::VectorXd& gradient,
                  const Eigen::Matrix3Xd* frozen_targets) const;

  const LowRankGP* gp_;
  const AabbTree* target_;
  double eta_;
  double delta_;
  std::vector<Eigen::Index> active_;
};

// Vertices whose current fit stays within the distance threshold and does
// not project onto a target boundary.
std::vector<bool> filter_outliers(const LowRankGP& gp, const Eigen::VectorXd& alpha,
                                  const AabbTree& target, const RegistrationConfig& cfg);

// Posterior of `gp` given, for every reference polyline vertex, the
// deformation onto the closest point of the matching target polyline. The
// match uses the current fit (coefficients alpha). Returns `gp` unchanged
// when no lines are given.
LowRankGP line_posterior(const LowRankGP& gp, const Eigen::VectorXd& alpha,
                         const std::vector<LineConstraint>& lines, double noise);

// Annealed MAP registration: landmark posterior, then per-stage outlier
// filtering, optional line posteriors, and L-BFGS minimization with warm
// starts. Throws Error on inputs, NumericalError when a stage aborts.
RegistrationResult register_surface(const LowRankGP& prior, const TriangleMesh& target,
                                    const LandmarkSet& reference_landmarks,
                                    const LandmarkSet& target_landmarks,
                                    const RegistrationConfig& cfg);

}  // namespace gpmm
