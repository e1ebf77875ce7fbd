#pragma once

// Profile maximum likelihood for the log-covariance recursion.
//
// With U* held fixed the Gaussian log-likelihood of the vech series depends
// only on (a*, b*); gamma_bar is the sample mean and stays fixed. The outer
// loop alternates a quasi-Newton maximization over (a*, b*) with a refresh of
// the scale, Sigma_hat -> U_hat -> U*, from the fitted residuals, starting
// from the sample covariance of the log series.

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "logbekk/matvar_normal.hpp"
#include "logbekk/model.hpp"
#include "logbekk/optim.hpp"

namespace logbekk {

struct FitConfig {
  double outer_tol = 1e-6;      ///< relative log-likelihood change that ends the outer loop
  int max_outer_iters = 50;
  double gradient_tol = 1e-6;   ///< inner optimizer, max |gradient| in free coordinates
  int max_inner_iters = 500;
  bool relaxed_constraints = false;
  double eigenvalue_floor = kDefaultEigenvalueFloor;
  double initial_a = 0.1;
  double initial_b = 0.8;

  ConstraintMode mode() const noexcept {
    return relaxed_constraints ? ConstraintMode::Relaxed : ConstraintMode::NonNegative;
  }
  /// Throws InputError for non-positive tolerances or iteration caps.
  void validate() const;
};

struct ParamCovariance {
  Eigen::MatrixXd cov;          ///< 2n* x 2n*, ordered (a_1..a_n*, b_1..b_n*)
  Eigen::MatrixXd information;  ///< observed information in (a*, b*) coordinates
  bool pseudo_inverse = false;
};

struct FitResult {
  ModelParams params;
  ConstraintMode mode = ConstraintMode::NonNegative;
  VechSeries mu_path;
  ScaleState scale;             ///< the scale used in the final maximization
  double loglik = 0.0;
  std::vector<double> loglik_trace;
  Eigen::MatrixXd param_cov;
  Eigen::MatrixXd information;
  bool hessian_pseudo_inverse = false;
  bool converged = false;
  int n_outer_iters = 0;
  int last_inner_iterations = 0;
  BfgsStatus last_inner_status = BfgsStatus::MaxIterations;
  std::vector<std::string> warnings;

  /// Square roots of the diagonal of param_cov, as (se_a, se_b) stacked.
  Eigen::VectorXd standard_errors() const { return param_cov.diagonal().cwiseMax(0.0).cwiseSqrt(); }
};

/// Σ_t log N(gamma_t; mu_t(a, b), U*). Generic in the coefficient scalar.
template <typename Scalar>
Scalar total_loglik(const Vector<Scalar>& a, const Vector<Scalar>& b, const Eigen::VectorXd& gamma_bar,
                    const VechSeries& gamma, const VechGaussian& density) {
  const Matrix<Scalar> mu = mu_recursion_unchecked<Scalar>(a, b, gamma_bar, gamma);
  if constexpr (std::is_same_v<Scalar, double>) {
    return density.sum_logpdf_residuals((gamma - mu).transpose());
  } else {
    const Matrix<Scalar> resid = (gamma.cast<Scalar>() - mu).transpose();
    return density.sum_logpdf_residuals(resid);
  }
}

double total_loglik(const ModelParams& params, const VechSeries& gamma, const VechGaussian& density);
double total_loglik(const ModelParams& params, const VechSeries& gamma, const Eigen::MatrixXd& u_star);

/// The log-likelihood as a function of the free (unconstrained) coordinates.
template <typename Scalar>
Scalar free_loglik(const Vector<Scalar>& free, const Eigen::VectorXd& gamma_bar, const VechSeries& gamma,
                   const VechGaussian& density, ConstraintMode mode) {
  const Index ns = gamma_bar.size();
  const Vector<Scalar> coef = constrain_coefficients<Scalar>(free, mode);
  return total_loglik<Scalar>(coef.head(ns), coef.tail(ns), gamma_bar, gamma, density);
}

/// Objective handed to the inner optimizer.
Objective make_free_objective(const Eigen::VectorXd& gamma_bar, const VechSeries& gamma, const VechGaussian& density,
                              ConstraintMode mode);

/// Inverse observed information in (a*, b*) coordinates at the free point.
///
/// The Hessian is taken in free coordinates by central differences with
/// step max(1e-5, 1e-4 |theta_i|) and carried to (a*, b*) with the chain rule
/// of the constraint map, including its curvature term. A non-positive
/// information matrix falls back to a pseudo-inverse over its positive
/// spectrum and sets `pseudo_inverse`.
ParamCovariance param_covariance(const Objective& free_objective, const Eigen::VectorXd& free, ConstraintMode mode);

/// Central-difference Hessian of `f`; symmetrized.
Eigen::MatrixXd fd_hessian(const Objective& f, const Eigen::VectorXd& x);

/// Runs the profile likelihood iteration on a T x n* vech series.
FitResult fit(const VechSeries& gamma, const FitConfig& config = {});

/// Convenience overload: vech-es a log-matrix series first.
FitResult fit(const MatrixSeries& log_series, const FitConfig& config = {});

}  // namespace logbekk
