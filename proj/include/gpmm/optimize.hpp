#pragma once

#include <Eigen/Core>
#include <functional>
#include <string>

namespace gpmm {

// Evaluates value and gradient at alpha; the gradient vector is resized by
// the callee. Must be deterministic within one minimize call.
using ObjectiveFunction =
    std::function<double(const Eigen::VectorXd& alpha, Eigen::VectorXd& gradient)>;

struct OptimizerConfig {
  int memory = 10;                  // L-BFGS correction pairs
  int max_iterations = 200;
  double gradient_tolerance = 1e-6; // infinity norm of the gradient
  double sufficient_decrease = 1e-4;
  double curvature = 0.9;
  int max_line_search_steps = 40;
};

enum class OptimizerStatus { Converged, MaxIterations, LineSearchFailed, NonFinite };

struct OptimizerResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
  OptimizerStatus status = OptimizerStatus::MaxIterations;
  std::string message;
};

// Limited-memory BFGS with a strong-Wolfe line search. The objective value
// is non-increasing across accepted steps; non-finite trial values trigger
// backtracking before the run aborts with NonFinite.
OptimizerResult minimize(const ObjectiveFunction& f, const Eigen::VectorXd& x0,
                         const OptimizerConfig& config = {});

// Max per-component relative error between the analytic gradient and central
// finite differences with step h_i = step * max(1, |x_i|).
double check_gradient(const ObjectiveFunction& f, const Eigen::VectorXd& x,
                      double step, double denominator_floor = 1e-8);

}  // namespace gpmm
