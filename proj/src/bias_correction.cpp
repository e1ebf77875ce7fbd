#include "logbekk/bias_correction.hpp"

#include <cmath>

#include "logbekk/spd_transforms.hpp"

namespace logbekk {

double expected_condvar(const VarianceEquationStats& stats, double gamma_prev, double mu_prev, double gamma_bar_i,
                        Index* clamped_count) {
  const double dg = gamma_prev - gamma_bar_i;
  const double dm = mu_prev - gamma_bar_i;
  const double value = dg * dg * stats.var_a + dm * dm * stats.var_b + 2.0 * dg * dm * stats.cov_ab;
  if (value < 0.0) {
    if (clamped_count) ++*clamped_count;
    return 0.0;
  }
  return value;
}

double condvar_mu(const VarianceEquationStats& stats, double expected, Index* clamped_count) {
  const double value = stats.sample_var_mu - expected;
  if (value < 0.0) {
    if (clamped_count) ++*clamped_count;
    return 0.0;
  }
  return value;
}

Eigen::MatrixXd correct_covariance(const Eigen::MatrixXd& c_hat, const Eigen::VectorXd& factors) {
  check_spd(c_hat);
  if (factors.size() != c_hat.rows()) throw DimensionMismatch("one correction factor per variable is required");
  if (!((factors.array() >= 1.0).all())) throw InputError("correction factors must be at least 1");

  // D' R D' with D' = D diag(sqrt f) collapses to c_ij sqrt(f_i) sqrt(f_j)
  const Index n = c_hat.rows();
  const Eigen::VectorXd root = factors.cwiseSqrt();
  Eigen::MatrixXd out(n, n);
  for (Index j = 0; j < n; ++j) {
    out(j, j) = c_hat(j, j) * factors(j);
    for (Index i = j + 1; i < n; ++i) {
      out(i, j) = c_hat(i, j) * (root(i) * root(j));
      out(j, i) = out(i, j);
    }
  }
  return out;
}

std::vector<VarianceEquationStats> variance_equation_stats(const FitResult& fit) {
  const Index ns = fit.params.size();
  const Index t_len = fit.mu_path.rows();
  if (t_len < 2) throw DimensionMismatch("need at least two fitted observations");
  if (fit.param_cov.rows() != 2 * ns) throw DimensionMismatch("parameter covariance has the wrong size");

  const VechIndexMap map(dim_from_vech_length(ns));
  std::vector<VarianceEquationStats> out;
  for (const Index p : map.diagonal_positions()) {
    const Eigen::VectorXd col = fit.mu_path.col(p);
    const double mean = col.mean();
    VarianceEquationStats s;
    s.position = p;
    s.sample_var_mu = (col.array() - mean).square().sum() / static_cast<double>(t_len - 1);
    s.var_a = std::max(0.0, fit.param_cov(p, p));
    s.var_b = std::max(0.0, fit.param_cov(ns + p, ns + p));
    s.cov_ab = fit.param_cov(p, ns + p);
    out.push_back(s);
  }
  return out;
}

CorrectionFactors correction_factors(const FitResult& fit, const VechSeries& gamma) {
  if (gamma.rows() != fit.mu_path.rows() || gamma.cols() != fit.mu_path.cols())
    throw DimensionMismatch("gamma series does not match the fitted path");
  const auto stats = variance_equation_stats(fit);
  const Eigen::VectorXd& gbar = fit.params.gamma_bar;
  const Index t_len = gamma.rows();

  CorrectionFactors out;
  out.factors.resize(t_len, static_cast<Index>(stats.size()));
  for (std::size_t i = 0; i < stats.size(); ++i) {
    const auto& s = stats[i];
    const Index p = s.position;
    for (Index t = 0; t < t_len; ++t) {
      const double g_prev = t == 0 ? gbar(p) : gamma(t - 1, p);
      const double m_prev = t == 0 ? gbar(p) : fit.mu_path(t - 1, p);
      const double expected = expected_condvar(s, g_prev, m_prev, gbar(p), &out.clamped_count);
      out.factors(t, static_cast<Index>(i)) = 1.0 + 0.5 * condvar_mu(s, expected, &out.clamped_count);
    }
  }
  return out;
}

CorrectionFactors forecast_correction_factors(const std::vector<VarianceEquationStats>& stats,
                                              const Eigen::VectorXd& gamma_bar, const Eigen::VectorXd& last_gamma,
                                              const Eigen::VectorXd& last_mu, const VechSeries& forecasts) {
  const Index horizon = forecasts.rows();
  CorrectionFactors out;
  out.factors.resize(horizon, static_cast<Index>(stats.size()));
  for (std::size_t i = 0; i < stats.size(); ++i) {
    const auto& s = stats[i];
    const Index p = s.position;
    for (Index k = 0; k < horizon; ++k) {
      const double g_prev = k == 0 ? last_gamma(p) : forecasts(k - 1, p);
      const double m_prev = k == 0 ? last_mu(p) : forecasts(k - 1, p);
      const double expected = expected_condvar(s, g_prev, m_prev, gamma_bar(p), &out.clamped_count);
      out.factors(k, static_cast<Index>(i)) = 1.0 + 0.5 * condvar_mu(s, expected, &out.clamped_count);
    }
  }
  return out;
}

CorrectedSeries bias_corrected_series(const FitResult& fit, const VechSeries& gamma, bool allow_unconverged) {
  if (!fit.converged && !allow_unconverged)
    throw InputError("bias correction requested on an unconverged fit");
  CorrectedSeries out;
  out.factors = correction_factors(fit, gamma);
  const Index t_len = gamma.rows();
  out.uncorrected.reserve(static_cast<std::size_t>(t_len));
  out.corrected.reserve(static_cast<std::size_t>(t_len));
  for (Index t = 0; t < t_len; ++t) {
    Eigen::MatrixXd c_hat = mat_exp(unvech(fit.mu_path.row(t).transpose()));
    out.corrected.push_back(correct_covariance(c_hat, out.factors.factors.row(t).transpose()));
    out.uncorrected.push_back(std::move(c_hat));
  }
  return out;
}

}  // namespace logbekk
