#include "logbekk/optim.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>

namespace logbekk {

namespace {

constexpr double kArmijo = 1e-4;
constexpr int kMaxBacktracks = 60;
constexpr int kMaxFlatIterations = 3;
constexpr double kFlatRelative = 1e-15;

double finite_or_neg_inf(double v) { return std::isfinite(v) ? v : -std::numeric_limits<double>::infinity(); }

}  // namespace

Eigen::VectorXd central_gradient(const Objective& f, const Eigen::VectorXd& x, double rel_step) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = rel_step * std::max(1.0, std::abs(x(i)));
    probe(i) = x(i) + h;
    const double up = f(probe);
    probe(i) = x(i) - h;
    const double down = f(probe);
    probe(i) = x(i);
    g(i) = (up - down) / (2.0 * h);
  }
  return g;
}

BfgsResult maximize_bfgs(const Objective& f, const Eigen::VectorXd& x0, const BfgsOptions& opts) {
  const Eigen::Index dim = x0.size();
  BfgsResult res;
  res.x = x0;
  res.value = finite_or_neg_inf(f(x0));
  res.start_value = res.value;
  if (!std::isfinite(res.value)) {
    res.status = BfgsStatus::Stalled;
    res.gradient = Eigen::VectorXd::Zero(dim);
    return res;
  }
  res.gradient = central_gradient(f, res.x, opts.fd_step);

  // inverse Hessian approximation of -f
  Eigen::MatrixXd inv_hess = Eigen::MatrixXd::Identity(dim, dim);
  bool fresh = true;
  int flat = 0;

  for (res.iterations = 0; res.iterations < opts.max_iterations; ++res.iterations) {
    if (!res.gradient.allFinite()) {
      res.status = BfgsStatus::Stalled;
      return res;
    }
    if (res.gradient.cwiseAbs().maxCoeff() < opts.gradient_tol) {
      res.status = BfgsStatus::GradientConverged;
      return res;
    }

    // ascent direction for f
    Eigen::VectorXd dir = inv_hess * res.gradient;
    if (dir.dot(res.gradient) <= 0.0) {
      inv_hess.setIdentity();
      fresh = true;
      dir = res.gradient;
    }
    if (fresh) dir /= std::max(1.0, dir.norm());

    const double slope = dir.dot(res.gradient);
    double step = 1.0;
    double trial_value = -std::numeric_limits<double>::infinity();
    Eigen::VectorXd trial;
    bool accepted = false;
    for (int k = 0; k < kMaxBacktracks; ++k) {
      trial = res.x + step * dir;
      trial_value = finite_or_neg_inf(f(trial));
      if (trial_value >= res.value + kArmijo * step * slope && trial_value > res.value) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (!fresh) {
        inv_hess.setIdentity();
        fresh = true;
        continue;
      }
      res.status = BfgsStatus::Stalled;
      return res;
    }

    const Eigen::VectorXd grad_new = central_gradient(f, trial, opts.fd_step);
    const Eigen::VectorXd s = trial - res.x;
    // curvature of -f
    const Eigen::VectorXd y = res.gradient - grad_new;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (fresh) inv_hess *= sy / y.squaredNorm();
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd left = Eigen::MatrixXd::Identity(dim, dim) - rho * s * y.transpose();
      inv_hess = left * inv_hess * left.transpose() + rho * s * s.transpose();
      fresh = false;
    }

    const double gain = trial_value - res.value;
    res.x = trial;
    res.value = trial_value;
    res.gradient = grad_new;

    flat = gain <= kFlatRelative * (1.0 + std::abs(res.value)) ? flat + 1 : 0;
    if (flat >= kMaxFlatIterations) {
      ++res.iterations;
      res.status = BfgsStatus::Stalled;
      return res;
    }
  }
  res.status = BfgsStatus::MaxIterations;
  return res;
}

}  // namespace logbekk
