#pragma once

// Symmetric matrix-variate Normal in vech coordinates: gamma_t ~ N(mu_t, U*),
// with U* = select_ustar(U). Also the residual-based scale construction
// Sigma_hat -> U_hat used by the profile likelihood.

#include <Eigen/Dense>

#include <cstdint>
#include <numbers>
#include <type_traits>

#include "logbekk/rng.hpp"
#include "logbekk/spd_transforms.hpp"
#include "logbekk/types.hpp"

namespace logbekk {

/// Profiled scale objects: Sigma_hat (n x n), U_hat = Sigma_hat / sqrt(tr Sigma_hat)
/// and the n* x n* selection U* of U_hat ⊗ U_hat.
struct ScaleState {
  Eigen::MatrixXd sigma_hat;
  Eigen::MatrixXd u_hat;
  Eigen::MatrixXd u_star;
};

struct MvnParams {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

/// Multivariate Normal with a fixed, factorized covariance.
///
/// The covariance is factorized once with a Cholesky decomposition. If that
/// fails, 1e-10 * mean(diag) is added to the diagonal and the factorization
/// retried, escalating the jitter tenfold up to three times before giving up
/// with SingularCovariance.
class VechGaussian {
 public:
  explicit VechGaussian(const Eigen::MatrixXd& cov);

  Index dim() const noexcept { return lower_.rows(); }
  double log_det() const noexcept { return log_det_; }
  /// Diagonal jitter that was needed for the factorization (0 if none).
  double jitter() const noexcept { return jitter_; }
  const Eigen::MatrixXd& cholesky_lower() const noexcept { return lower_; }

  /// Log-density of a residual gamma - mu.
  template <typename Derived>
  typename Derived::Scalar logpdf_residual(const Eigen::MatrixBase<Derived>& residual) const {
    using Scalar = typename Derived::Scalar;
    return sum_logpdf_residuals(Matrix<Scalar>(residual));
  }

  /// Sum of log-densities over the columns of `residuals` (n* x T).
  template <typename Derived>
  typename Derived::Scalar sum_logpdf_residuals(const Eigen::MatrixBase<Derived>& residuals) const {
    using Scalar = typename Derived::Scalar;
    if (residuals.rows() != dim()) throw DimensionMismatch("residual length does not match covariance dimension");
    Matrix<Scalar> whitened;
    if constexpr (std::is_same_v<Scalar, double>) {
      whitened = lower_.triangularView<Eigen::Lower>().solve(residuals);
    } else {
      const Matrix<Scalar> lower = lower_.cast<Scalar>();
      whitened = lower.template triangularView<Eigen::Lower>().solve(Matrix<Scalar>(residuals));
    }
    const double per_obs = -0.5 * static_cast<double>(dim()) * std::log(2.0 * std::numbers::pi) - 0.5 * log_det_;
    return Scalar(per_obs * static_cast<double>(residuals.cols())) - Scalar(0.5) * whitened.squaredNorm();
  }

  /// mean + L z with z standard Normal.
  Eigen::VectorXd sample(const Eigen::VectorXd& mean, NormalGenerator& gen) const;

 private:
  Eigen::MatrixXd lower_;
  double log_det_ = 0.0;
  double jitter_ = 0.0;
};

/// -(n*/2) log 2π - ½ log det(cov) - ½ (γ-μ)' cov⁻¹ (γ-μ), via Cholesky.
double logpdf_vech(const Eigen::VectorXd& gamma, const MvnParams& params);

/// One draw from N(mean, cov); identical output for identical seeds.
Eigen::VectorXd sample_gamma(const MvnParams& params, std::uint64_t rng_seed);

struct ConditionalMoments {
  Eigen::MatrixXd mean;
  Eigen::MatrixXd var;
};

/// E_{t-1}(Gamma_t) = M_t and Var_{t-1}(Gamma_t) = U_t trace(U_t).
ConditionalMoments conditional_moments(const Eigen::MatrixXd& m, const Eigen::MatrixXd& u);

/// ||U_hat tr(U_hat) - Sigma_hat||_F / ||Sigma_hat||_F.
double trace_identity_residual(const ScaleState& s);

/// U_hat and U* from a given Sigma_hat. Throws ZeroTrace when tr(Sigma_hat) vanishes.
ScaleState scale_from_sigma(const Eigen::MatrixXd& sigma_hat);

/// Process-wide record of scale constructions, for auditing the trace identity.
struct ScaleAudit {
  std::uint64_t calls = 0;
  double max_trace_residual = 0.0;
};
ScaleAudit scale_audit();
void reset_scale_audit();

/// Sigma_hat = (1/T) Σ_t (Gamma_t - M_t)(Gamma_t - M_t)', then scale_from_sigma.
/// `gamma` and `mu_path` are T x n* vech series.
ScaleState update_scale(const VechSeries& gamma, const VechSeries& mu_path);
ScaleState update_scale(const MatrixSeries& log_series, const VechSeries& mu_path);

}  // namespace logbekk
