#pragma once

#include <Eigen/Core>

#include <functional>

namespace logbekk {

using Objective = std::function<double(const Eigen::VectorXd&)>;

/// Central differences with step rel_step * max(1, |x_i|).
Eigen::VectorXd central_gradient(const Objective& f, const Eigen::VectorXd& x, double rel_step = 1e-5);

struct BfgsOptions {
  double gradient_tol = 1e-6;  ///< stop when max |g_i| falls below this
  int max_iterations = 500;
  double fd_step = 1e-5;
};

enum class BfgsStatus {
  GradientConverged,
  /// No further ascent found (line search exhausted or negligible progress);
  /// usually the finite-difference noise floor near the optimum.
  Stalled,
  MaxIterations,
};

struct BfgsResult {
  Eigen::VectorXd x;
  double value = 0.0;
  double start_value = 0.0;
  Eigen::VectorXd gradient;
  int iterations = 0;
  BfgsStatus status = BfgsStatus::MaxIterations;
};

/// Quasi-Newton ascent with numerical gradients and an Armijo backtracking
/// line search. Only strictly improving steps are accepted, so
/// value >= start_value always. Non-finite objective values count as -inf.
BfgsResult maximize_bfgs(const Objective& f, const Eigen::VectorXd& x0, const BfgsOptions& opts = {});

}  // namespace logbekk
