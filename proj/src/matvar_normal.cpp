#include "logbekk/matvar_normal.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <string>

namespace logbekk {

namespace {

constexpr int kMaxJitterAttempts = 3;
constexpr double kJitterBase = 1e-10;
// Residual traces below this fraction of the mean squared Frobenius norm of
// the data are rounding noise from a constant series.
constexpr double kRelativeZeroTrace = 1e-28;

std::atomic<std::uint64_t> audit_calls{0};
std::atomic<double> audit_max_residual{0.0};

void record_scale(double residual) {
  if (!std::isfinite(residual)) residual = std::numeric_limits<double>::infinity();
  audit_calls.fetch_add(1, std::memory_order_relaxed);
  double seen = audit_max_residual.load(std::memory_order_relaxed);
  while (residual > seen && !audit_max_residual.compare_exchange_weak(seen, residual, std::memory_order_relaxed)) {
  }
}

}  // namespace

VechGaussian::VechGaussian(const Eigen::MatrixXd& cov) {
  check_symmetric(cov);
  const Eigen::MatrixXd sym = symmetrized(cov);
  if (!sym.allFinite()) throw SingularCovariance("covariance has non-finite entries");

  double scale = sym.diagonal().cwiseAbs().mean();
  if (!(scale > 0.0)) scale = 1.0;

  Eigen::LLT<Eigen::MatrixXd> llt;
  for (int attempt = 0; attempt <= kMaxJitterAttempts; ++attempt) {
    const double jitter = attempt == 0 ? 0.0 : kJitterBase * std::pow(10.0, attempt - 1) * scale;
    Eigen::MatrixXd trial = sym;
    trial.diagonal().array() += jitter;
    llt.compute(trial);
    if (llt.info() == Eigen::Success) {
      Eigen::MatrixXd lower = llt.matrixL();
      const Eigen::VectorXd d = lower.diagonal();
      if (d.allFinite() && (d.array() > 0.0).all()) {
        lower_ = std::move(lower);
        log_det_ = 2.0 * d.array().log().sum();
        jitter_ = jitter;
        return;
      }
    }
  }
  throw SingularCovariance("covariance factorization failed after " + std::to_string(kMaxJitterAttempts) +
                           " jitter escalations");
}

Eigen::VectorXd VechGaussian::sample(const Eigen::VectorXd& mean, NormalGenerator& gen) const {
  if (mean.size() != dim()) throw DimensionMismatch("mean length does not match covariance dimension");
  return mean + lower_.triangularView<Eigen::Lower>() * gen.normal_vector(dim());
}

double logpdf_vech(const Eigen::VectorXd& gamma, const MvnParams& params) {
  if (gamma.size() != params.mean.size()) throw DimensionMismatch("gamma and mean lengths differ");
  const VechGaussian dist(params.cov);
  return dist.logpdf_residual(gamma - params.mean);
}

Eigen::VectorXd sample_gamma(const MvnParams& params, std::uint64_t rng_seed) {
  const VechGaussian dist(params.cov);
  NormalGenerator gen(rng_seed);
  return dist.sample(params.mean, gen);
}

ConditionalMoments conditional_moments(const Eigen::MatrixXd& m, const Eigen::MatrixXd& u) {
  check_symmetric(u);
  if (m.rows() != u.rows() || m.cols() != u.cols())
    throw DimensionMismatch("location and scale matrices differ in size");
  return {m, u * u.trace()};
}

double trace_identity_residual(const ScaleState& s) {
  return (s.u_hat * s.u_hat.trace() - s.sigma_hat).norm() / s.sigma_hat.norm();
}

ScaleState scale_from_sigma(const Eigen::MatrixXd& sigma_hat) {
  check_symmetric(sigma_hat);
  const double tr = sigma_hat.trace();
  if (!(tr > 0.0) || !std::isfinite(tr)) throw ZeroTrace();
  ScaleState s;
  s.sigma_hat = symmetrized(sigma_hat);
  s.u_hat = s.sigma_hat / std::sqrt(tr);
  s.u_star = select_ustar(s.u_hat);
  const double residual = trace_identity_residual(s);
  record_scale(residual);
  if (!(residual < 1e-10))
    throw NumericalError("scale update lost the U tr(U) = Sigma identity");
  return s;
}

ScaleAudit scale_audit() {
  return {audit_calls.load(std::memory_order_relaxed), audit_max_residual.load(std::memory_order_relaxed)};
}

void reset_scale_audit() {
  audit_calls.store(0, std::memory_order_relaxed);
  audit_max_residual.store(0.0, std::memory_order_relaxed);
}

ScaleState update_scale(const VechSeries& gamma, const VechSeries& mu_path) {
  if (gamma.rows() != mu_path.rows() || gamma.cols() != mu_path.cols())
    throw DimensionMismatch("gamma series and mu path differ in shape");
  const Index t_len = gamma.rows();
  if (t_len < 2) throw DimensionMismatch("update_scale needs at least two observations");
  const Index n = dim_from_vech_length(gamma.cols());

  Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(n, n);
  double data_scale = 0.0;
  for (Index t = 0; t < t_len; ++t) {
    const Eigen::MatrixXd g = unvech(gamma.row(t).transpose());
    const Eigen::MatrixXd r = g - unvech(mu_path.row(t).transpose());
    sigma.noalias() += r * r.transpose();
    data_scale += g.squaredNorm();
  }
  sigma /= static_cast<double>(t_len);
  data_scale /= static_cast<double>(t_len);
  if (sigma.trace() <= kRelativeZeroTrace * data_scale) throw ZeroTrace();
  return scale_from_sigma(symmetrized(sigma));
}

ScaleState update_scale(const MatrixSeries& log_series, const VechSeries& mu_path) {
  if (log_series.empty()) throw DimensionMismatch("empty log series");
  VechSeries gamma(static_cast<Index>(log_series.size()), vech_length(log_series.front().rows()));
  for (std::size_t t = 0; t < log_series.size(); ++t) {
    if (log_series[t].rows() != log_series.front().rows())
      throw DimensionMismatch("log series matrices differ in size");
    gamma.row(static_cast<Index>(t)) = vech(log_series[t]).transpose();
  }
  return update_scale(gamma, mu_path);
}

}  // namespace logbekk
