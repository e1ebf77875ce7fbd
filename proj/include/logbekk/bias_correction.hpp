#pragma once

// Time-specific correction of exp(mu_hat) for the variance equations.
//
// For each variance element i the fitted level exp(mu_hat_{i,t}) is scaled by
//   f_{i,t} = 1 + ½ Var_{t-1}(m_{i,t}),
//   Var_{t-1}(m_{i,t}) = max(0, Var(mu_hat_i) - E_hat(Var_{t-1}(m_{i,t}))),
// where the subtracted term is the quadratic form of the lagged deviations in
// the (a_i, b_i) parameter covariance. Only the diagonal of C_hat = D R D is
// rescaled; the correlation matrix R is left as is.

#include <Eigen/Dense>

#include "logbekk/estimation.hpp"
#include "logbekk/types.hpp"

namespace logbekk {

struct VarianceEquationStats {
  Index position = 0;        ///< vech position of the diagonal element
  double sample_var_mu = 0;  ///< 1/(T-1) sample variance of mu_hat at `position`
  double var_a = 0;
  double var_b = 0;
  double cov_ab = 0;
};

/// E_hat(Var_{t-1}(m)): the parameter-uncertainty quadratic form, clamped at 0.
/// Increments *clamped_count when clamping was needed.
double expected_condvar(const VarianceEquationStats& stats, double gamma_prev, double mu_prev, double gamma_bar_i,
                        Index* clamped_count = nullptr);

/// max(0, sample_var_mu - expected); increments *clamped_count when clamped.
double condvar_mu(const VarianceEquationStats& stats, double expected, Index* clamped_count = nullptr);

/// D' R D' with D'_ii = sqrt(c_ii f_i). Throws InputError if a factor is below 1.
Eigen::MatrixXd correct_covariance(const Eigen::MatrixXd& c_hat, const Eigen::VectorXd& factors);

/// Per variance equation statistics taken from a fit.
std::vector<VarianceEquationStats> variance_equation_stats(const FitResult& fit);

struct CorrectionFactors {
  Eigen::MatrixXd factors;  ///< T x n, every entry >= 1
  Index clamped_count = 0;
};

/// Factors along the fitted path; t = 0 has no lag and uses the centred state.
CorrectionFactors correction_factors(const FitResult& fit, const VechSeries& gamma);

/// Factors for forecasts mu_{T+1..T+h}: the first step conditions on the
/// observed (last_gamma, last_mu), later steps on the previous forecast.
CorrectionFactors forecast_correction_factors(const std::vector<VarianceEquationStats>& stats,
                                              const Eigen::VectorXd& gamma_bar, const Eigen::VectorXd& last_gamma,
                                              const Eigen::VectorXd& last_mu, const VechSeries& forecasts);

struct CorrectedSeries {
  MatrixSeries uncorrected;  ///< exp(M_hat_t)
  MatrixSeries corrected;
  CorrectionFactors factors;
};

/// Applies the correction along the fitted path. Unconverged fits are
/// rejected unless `allow_unconverged`.
CorrectedSeries bias_corrected_series(const FitResult& fit, const VechSeries& gamma, bool allow_unconverged = false);

}  // namespace logbekk
