#include "logbekk/model.hpp"

#include <cmath>
#include <string>

namespace logbekk {

namespace {

void check_shapes(const ModelParams& p) {
  const Index ns = p.size();
  if (ns == 0) throw DimensionMismatch("model parameters are empty");
  if (p.a_star.size() != ns || p.b_star.size() != ns)
    throw DimensionMismatch("a_star, b_star and gamma_bar must have equal length");
  dim_from_vech_length(ns);
}

bool pair_admissible(double a, double b, ConstraintMode mode) {
  const double s = 1.0 - kStationarityMargin;
  if (!std::isfinite(a) || !std::isfinite(b)) return false;
  if (mode == ConstraintMode::Relaxed) return std::abs(b) < s && std::abs(a + b) < s;
  return a > 0.0 && b > 0.0 && a + b < s;
}

}  // namespace

void check_stationary(const ModelParams& params) {
  check_shapes(params);
  for (Index i = 0; i < params.size(); ++i) {
    const double a = params.a_star(i);
    const double b = params.b_star(i);
    if (!std::isfinite(a) || !std::isfinite(b) || !(std::abs(a + b) < 1.0 - kStationarityMargin) ||
        !(std::abs(b) < 1.0))
      throw NonStationaryParams("coefficient pair " + std::to_string(i) + " (a=" + std::to_string(a) +
                                ", b=" + std::to_string(b) + ") violates stationarity");
  }
}

bool satisfies_constraints(const ModelParams& params, ConstraintMode mode) {
  try {
    check_stationary(params);
  } catch (const InputError&) {
    return false;
  }
  if (mode == ConstraintMode::NonNegative)
    return (params.a_star.array() >= 0.0).all() && (params.b_star.array() >= 0.0).all();
  return true;
}

VechSeries mu_recursion(const ModelParams& params, const VechSeries& gamma) {
  check_stationary(params);
  if (gamma.cols() != params.size())
    throw DimensionMismatch("gamma series has " + std::to_string(gamma.cols()) + " columns, expected " +
                            std::to_string(params.size()));
  return mu_recursion_unchecked<double>(params.a_star, params.b_star, params.gamma_bar, gamma);
}

VechSeries forecast_mu(const ModelParams& params, const Eigen::VectorXd& last_gamma,
                       const Eigen::VectorXd& last_mu, Index horizon) {
  check_stationary(params);
  if (horizon < 1) throw InputError("forecast horizon must be at least 1");
  if (last_gamma.size() != params.size() || last_mu.size() != params.size())
    throw DimensionMismatch("last_gamma / last_mu length does not match the parameters");

  const Eigen::ArrayXd a = params.a_star.array();
  const Eigen::ArrayXd b = params.b_star.array();
  const Eigen::ArrayXd intercept = (1.0 - a - b) * params.gamma_bar.array();
  VechSeries out(horizon, params.size());
  Eigen::ArrayXd prev = intercept + a * last_gamma.array() + b * last_mu.array();
  out.row(0) = prev.transpose();
  for (Index k = 1; k < horizon; ++k) {
    prev = intercept + (a + b) * prev;
    out.row(k) = prev.transpose();
  }
  return out;
}

Simulation simulate(const ModelParams& params, const Eigen::MatrixXd& u, Index t_len, Index burn_in,
                    std::uint64_t rng_seed) {
  check_stationary(params);
  if (t_len < 1) throw InputError("simulation length must be at least 1");
  if (burn_in < 0) throw InputError("burn-in must be non-negative");
  const Index ns = params.size();
  if (vech_length(u.rows()) != ns) throw DimensionMismatch("scale matrix dimension does not match the parameters");

  const VechGaussian noise(select_ustar(u));
  NormalGenerator gen(rng_seed);

  const Eigen::ArrayXd a = params.a_star.array();
  const Eigen::ArrayXd b = params.b_star.array();
  const Eigen::ArrayXd intercept = (1.0 - a - b) * params.gamma_bar.array();

  Simulation sim;
  sim.gamma.resize(t_len, ns);
  sim.mu.resize(t_len, ns);
  sim.cov.reserve(static_cast<std::size_t>(t_len));
  sim.log_cov.reserve(static_cast<std::size_t>(t_len));

  Eigen::ArrayXd mu = params.gamma_bar.array();
  Eigen::ArrayXd gamma(ns);
  for (Index step = 0; step < burn_in + t_len; ++step) {
    if (step > 0) mu = intercept + a * gamma + b * mu;
    gamma = noise.sample(mu.matrix(), gen).array();
    if (step < burn_in) continue;
    const Index t = step - burn_in;
    sim.mu.row(t) = mu.transpose();
    sim.gamma.row(t) = gamma.transpose();
    Eigen::MatrixXd g = unvech(gamma.matrix());
    sim.cov.push_back(mat_exp(g));
    sim.log_cov.push_back(std::move(g));
  }
  return sim;
}

ModelParams constrain(const Eigen::VectorXd& free, const Eigen::VectorXd& gamma_bar, ConstraintMode mode) {
  const Index ns = gamma_bar.size();
  if (free.size() != 2 * ns) throw DimensionMismatch("free vector must have length 2 n*");
  const Eigen::VectorXd coef = constrain_coefficients<double>(free, mode);
  return {coef.head(ns), coef.tail(ns), gamma_bar};
}

Eigen::VectorXd unconstrain(const ModelParams& params, ConstraintMode mode) {
  check_shapes(params);
  const Index ns = params.size();
  const double s = 1.0 - kStationarityMargin;
  Eigen::VectorXd free(2 * ns);
  for (Index i = 0; i < ns; ++i) {
    const double a = params.a_star(i);
    const double b = params.b_star(i);
    if (!pair_admissible(a, b, mode))
      throw BoundaryParams("coefficient pair " + std::to_string(i) + " (a=" + std::to_string(a) +
                           ", b=" + std::to_string(b) + ") is not strictly inside the constraint set");
    if (mode == ConstraintMode::Relaxed) {
      free(i) = std::atanh((a + b) / s);
      free(ns + i) = std::atanh(b / s);
    } else {
      const double slack = s - a - b;
      free(i) = std::log(a / slack);
      free(ns + i) = std::log(b / slack);
    }
  }
  return free;
}

Eigen::MatrixXd constrain_jacobian(const Eigen::VectorXd& free, ConstraintMode mode) {
  const Index ns = free.size() / 2;
  const double s = 1.0 - kStationarityMargin;
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(free.size(), free.size());
  for (Index i = 0; i < ns; ++i) {
    const auto [a, b] = constrain_pair(free(i), free(ns + i), mode);
    const Index ia = i;
    const Index ib = ns + i;
    if (mode == ConstraintMode::Relaxed) {
      const double p = a + b;
      jac(ia, ia) = s - p * p / s;
      jac(ia, ib) = -(s - b * b / s);
      jac(ib, ia) = 0.0;
      jac(ib, ib) = s - b * b / s;
    } else {
      jac(ia, ia) = a * (1.0 - a / s);
      jac(ia, ib) = -a * b / s;
      jac(ib, ia) = -a * b / s;
      jac(ib, ib) = b * (1.0 - b / s);
    }
  }
  return jac;
}

}  // namespace logbekk
