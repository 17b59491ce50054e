#include "gpmm/optimize.hpp"

#include <cmath>
#include <deque>
#include <limits>
#include <vector>

#include "gpmm/error.hpp"

namespace gpmm {

namespace {

bool finite(double v) { return std::isfinite(v); }
bool finite(const Eigen::VectorXd& v) { return v.allFinite(); }

struct LineSearchResult {
  double step = 0.0;
  double value = 0.0;
  Eigen::VectorXd x;
  Eigen::VectorXd gradient;
  bool ok = false;
};

// Strong-Wolfe line search (Nocedal & Wright, Algorithms 3.5/3.6). phi(a) =
// f(x + a d). Non-finite trials shrink the bracket instead of failing.
LineSearchResult line_search(const ObjectiveFunction& f, const Eigen::VectorXd& x,
                             const Eigen::VectorXd& direction, double value0,
                             double slope0, const OptimizerConfig& cfg) {
  LineSearchResult out;
  const double c1 = cfg.sufficient_decrease;
  const double c2 = cfg.curvature;

  auto evaluate = [&](double a, double& val, double& slope, Eigen::VectorXd& xa,
                      Eigen::VectorXd& ga) {
    xa = x + a * direction;
    val = f(xa, ga);
    slope = finite(val) && finite(ga) ? ga.dot(direction)
                                      : std::numeric_limits<double>::quiet_NaN();
  };

  auto zoom = [&](double lo, double val_lo, double slope_lo, double hi,
                  double val_hi) -> bool {
    Eigen::VectorXd xa, ga;
    for (int i = 0; i < cfg.max_line_search_steps; ++i) {
      // Quadratic interpolation using phi(lo), phi'(lo), phi(hi); fall back
      // to bisection when the minimizer leaves the bracket.
      double a = lo + 0.5 * (hi - lo);
      const double dh = hi - lo;
      if (dh != 0.0 && finite(val_hi)) {
        const double denom = 2.0 * (val_hi - val_lo - slope_lo * dh);
        if (denom != 0.0) {
          const double cand = lo - slope_lo * dh * dh / denom;
          const double margin = 0.1 * std::abs(dh);
          if (finite(cand) && cand > std::min(lo, hi) + margin &&
              cand < std::max(lo, hi) - margin) {
            a = cand;
          }
        }
      }

      double val, slope;
      evaluate(a, val, slope, xa, ga);
      if (!finite(val)) {
        hi = a;
        val_hi = val;
        continue;
      }
      if (val > value0 + c1 * a * slope0 || val >= val_lo) {
        hi = a;
        val_hi = val;
        continue;
      }
      if (std::abs(slope) <= -c2 * slope0) {
        out.step = a;
        out.value = val;
        out.x = std::move(xa);
        out.gradient = std::move(ga);
        out.ok = true;
        return true;
      }
      if (slope * (hi - lo) >= 0.0) {
        hi = lo;
        val_hi = val_lo;
      }
      lo = a;
      val_lo = val;
      slope_lo = slope;
    }
    // Bracket exhausted: accept the best sufficient-decrease point.
    if (finite(val_lo) && val_lo < value0 && lo > 0.0) {
      double val, slope;
      evaluate(lo, val, slope, xa, ga);
      if (finite(val) && finite(ga)) {
        out.step = lo;
        out.value = val;
        out.x = std::move(xa);
        out.gradient = std::move(ga);
        out.ok = true;
        return true;
      }
    }
    return false;
  };

  double prev_a = 0.0;
  double prev_val = value0;
  double prev_slope = slope0;
  double a = 1.0;
  Eigen::VectorXd xa, ga;
  for (int i = 0; i < cfg.max_line_search_steps; ++i) {
    double val, slope;
    evaluate(a, val, slope, xa, ga);
    if (!finite(val)) {
      // Backtrack toward the last finite point.
      a = prev_a + 0.5 * (a - prev_a);
      continue;
    }
    if (val > value0 + c1 * a * slope0 || (i > 0 && val >= prev_val)) {
      zoom(prev_a, prev_val, prev_slope, a, val);
      return out;
    }
    if (std::abs(slope) <= -c2 * slope0) {
      out.step = a;
      out.value = val;
      out.x = std::move(xa);
      out.gradient = std::move(ga);
      out.ok = true;
      return out;
    }
    if (slope >= 0.0) {
      zoom(a, val, slope, prev_a, prev_val);
      return out;
    }
    prev_a = a;
    prev_val = val;
    prev_slope = slope;
    a *= 2.0;
  }
  return out;
}

}  // namespace

OptimizerResult minimize(const ObjectiveFunction& f, const Eigen::VectorXd& x0,
                         const OptimizerConfig& config) {
  OptimizerResult result;
  result.x = x0;

  Eigen::VectorXd gradient(x0.size());
  result.value = f(result.x, gradient);
  if (!finite(result.value) || !finite(gradient)) {
    result.status = OptimizerStatus::NonFinite;
    result.message = "objective non-finite at the starting point";
    return result;
  }

  std::deque<Eigen::VectorXd> s_history, y_history;
  std::deque<double> rho_history;

  for (int iteration = 0; iteration < config.max_iterations; ++iteration) {
    result.iterations = iteration;
    if (gradient.lpNorm<Eigen::Infinity>() <= config.gradient_tolerance) {
      result.converged = true;
      result.status = OptimizerStatus::Converged;
      return result;
    }

    // Two-loop recursion for the search direction.
    Eigen::VectorXd direction = -gradient;
    std::vector<double> alphas(s_history.size());
    for (std::size_t i = s_history.size(); i-- > 0;) {
      alphas[i] = rho_history[i] * s_history[i].dot(direction);
      direction -= alphas[i] * y_history[i];
    }
    if (!s_history.empty()) {
      const Eigen::VectorXd& s = s_history.back();
      const Eigen::VectorXd& y = y_history.back();
      direction *= s.dot(y) / y.squaredNorm();
    }
    for (std::size_t i = 0; i < s_history.size(); ++i) {
      const double beta = rho_history[i] * y_history[i].dot(direction);
      direction += (alphas[i] - beta) * s_history[i];
    }

    double slope = gradient.dot(direction);
    if (!(slope < 0.0)) {
      direction = -gradient;
      slope = gradient.dot(direction);
      s_history.clear();
      y_history.clear();
      rho_history.clear();
    }

    const LineSearchResult ls =
        line_search(f, result.x, direction, result.value, slope, config);
    if (!ls.ok) {
      result.status = gradient.allFinite() ? OptimizerStatus::LineSearchFailed
                                           : OptimizerStatus::NonFinite;
      result.message = "line search failed at iteration " + std::to_string(iteration);
      return result;
    }
    if (!finite(ls.gradient)) {
      result.status = OptimizerStatus::NonFinite;
      result.message = "gradient non-finite at iteration " + std::to_string(iteration);
      return result;
    }

    const Eigen::VectorXd step_vec = ls.x - result.x;
    const Eigen::VectorXd grad_diff = ls.gradient - gradient;
    const double sy = step_vec.dot(grad_diff);
    if (sy > 1e-12 * step_vec.norm() * grad_diff.norm()) {
      s_history.push_back(step_vec);
      y_history.push_back(grad_diff);
      rho_history.push_back(1.0 / sy);
      if (static_cast<int>(s_history.size()) > config.memory) {
        s_history.pop_front();
        y_history.pop_front();
        rho_history.pop_front();
      }
    }

    result.x = ls.x;
    result.value = ls.value;
    gradient = ls.gradient;
  }

  result.iterations = config.max_iterations;
  result.status = OptimizerStatus::MaxIterations;
  return result;
}

double check_gradient(const ObjectiveFunction& f, const Eigen::VectorXd& x,
                      double step, double denominator_floor) {
  if (step <= 0.0) throw Error("check_gradient: step must be positive");
  Eigen::VectorXd analytic(x.size());
  f(x, analytic);

  double max_error = 0.0;
  Eigen::VectorXd probe = x;
  Eigen::VectorXd unused(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = step * std::max(1.0, std::abs(x[i]));
    probe[i] = x[i] + h;
    const double fp = f(probe, unused);
    probe[i] = x[i] - h;
    const double fm = f(probe, unused);
    probe[i] = x[i];
    const double fd = (fp - fm) / (2.0 * h);
    const double error = std::abs(analytic[i] - fd) / std::max(std::abs(fd), denominator_floor);
    max_error = std::max(max_error, error);
  }
  return max_error;
}

}  // namespace gpmm
