#pragma once

// Conditional-mean dynamics of the log-covariance: element-wise recursion
//
//   mu_{i,t} = (1 - a_i - b_i) gamma_bar_i + a_i gamma_{i,t-1} + b_i mu_{i,t-1}
//
// over the vech coordinates, started at mu_1 = gamma_bar. This is the
// diagonal VEC form of the Hadamard recursion
//   M_t = (J - A - B) ⊙ Gamma_bar + A ⊙ Gamma_{t-1} + B ⊙ M_{t-1}
// with J the all-ones matrix and a*, b* = vech(A), vech(B).

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <utility>

#include "logbekk/matvar_normal.hpp"
#include "logbekk/spd_transforms.hpp"
#include "logbekk/types.hpp"

namespace logbekk {

/// Margin kept between a_i + b_i and 1.
inline constexpr double kStationarityMargin = 1e-6;

struct ModelParams {
  Eigen::VectorXd a_star;
  Eigen::VectorXd b_star;
  Eigen::VectorXd gamma_bar;

  Index size() const noexcept { return gamma_bar.size(); }
};

enum class ConstraintMode {
  /// a_i >= 0, b_i >= 0, a_i + b_i < 1 - margin.
  NonNegative,
  /// |b_i| < 1 - margin, |a_i + b_i| < 1 - margin, any signs.
  Relaxed,
};

/// Throws DimensionMismatch or NonStationaryParams (|a+b| or |b| too close to 1).
void check_stationary(const ModelParams& params);

/// Stationarity plus the sign restrictions of `mode`.
bool satisfies_constraints(const ModelParams& params, ConstraintMode mode);

/// Element-wise recursion on raw coefficient vectors; generic in the scalar
/// so the likelihood can be differentiated automatically. No checks.
template <typename Scalar>
Matrix<Scalar> mu_recursion_unchecked(const Vector<Scalar>& a, const Vector<Scalar>& b,
                                      const Eigen::VectorXd& gamma_bar, const VechSeries& gamma) {
  const Index t_len = gamma.rows();
  const Index ns = gamma.cols();
  Matrix<Scalar> mu(t_len, ns);
  if (t_len == 0) return mu;
  for (Index i = 0; i < ns; ++i) {
    const Scalar intercept = (Scalar(1) - a(i) - b(i)) * gamma_bar(i);
    Scalar prev = Scalar(gamma_bar(i));
    mu(0, i) = prev;
    for (Index t = 1; t < t_len; ++t) {
      prev = intercept + a(i) * gamma(t - 1, i) + b(i) * prev;
      mu(t, i) = prev;
    }
  }
  return mu;
}

/// mu_1, ..., mu_T for the observed gamma series (T x n*).
VechSeries mu_recursion(const ModelParams& params, const VechSeries& gamma);

/// Forecasts mu_{T+1}, ..., mu_{T+horizon} (horizon x n*). The first step uses
/// the observed last_gamma; later steps substitute the previous forecast.
VechSeries forecast_mu(const ModelParams& params, const Eigen::VectorXd& last_gamma,
                       const Eigen::VectorXd& last_mu, Index horizon);

struct Simulation {
  MatrixSeries cov;        ///< C_t = exp(Gamma_t)
  MatrixSeries log_cov;    ///< Gamma_t
  VechSeries gamma;        ///< vech(Gamma_t), T x n*
  VechSeries mu;           ///< true conditional means, T x n*
};

/// Draws gamma_t ~ N(mu_t, select_ustar(u)) along the recursion; the first
/// `burn_in` steps are discarded. Deterministic for a given seed.
Simulation simulate(const ModelParams& params, const Eigen::MatrixXd& u, Index t_len, Index burn_in,
                    std::uint64_t rng_seed);

// Smooth bijection between each admissible (a_i, b_i) pair and R^2.
// Free vectors are laid out as (x_1..x_n*, y_1..y_n*), parallel to (a*, b*).

template <typename Scalar>
std::pair<Scalar, Scalar> constrain_pair(const Scalar& x, const Scalar& y, ConstraintMode mode) {
  using std::exp;
  using std::max;
  using std::tanh;
  const Scalar s(1.0 - kStationarityMargin);
  if (mode == ConstraintMode::Relaxed) {
    const Scalar b = s * tanh(y);
    return {s * tanh(x) - b, b};
  }
  // softmax over (0, x, y), shifted for overflow safety
  const Scalar shift = max(Scalar(0), max(x, y));
  const Scalar e0 = exp(-shift);
  const Scalar ex = exp(x - shift);
  const Scalar ey = exp(y - shift);
  const Scalar denom = e0 + ex + ey;
  return {s * ex / denom, s * ey / denom};
}

/// Free vector -> coefficient vectors (a*, b*) stacked as one 2n* vector.
template <typename Scalar>
Vector<Scalar> constrain_coefficients(const Vector<Scalar>& free, ConstraintMode mode) {
  const Index ns = free.size() / 2;
  Vector<Scalar> out(free.size());
  for (Index i = 0; i < ns; ++i) {
    const auto [a, b] = constrain_pair(free(i), free(ns + i), mode);
    out(i) = a;
    out(ns + i) = b;
  }
  return out;
}

ModelParams constrain(const Eigen::VectorXd& free, const Eigen::VectorXd& gamma_bar,
                      ConstraintMode mode = ConstraintMode::NonNegative);

/// Throws BoundaryParams unless every pair lies strictly inside the constraint set.
Eigen::VectorXd unconstrain(const ModelParams& params, ConstraintMode mode = ConstraintMode::NonNegative);

/// d(a*, b*) / d(free), block diagonal over pairs.
Eigen::MatrixXd constrain_jacobian(const Eigen::VectorXd& free, ConstraintMode mode = ConstraintMode::NonNegative);

}  // namespace logbekk
