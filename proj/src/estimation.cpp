#include "logbekk/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace logbekk {

namespace {

// Allowed decrease of the outer log-likelihood trace, relative to |loglik|.
constexpr double kTraceSlack = 1e-8;

// Second derivatives of (a, b) with respect to the free pair (x, y), one
// symmetric 2x2 matrix for each of a and b.
struct PairCurvature {
  Eigen::Matrix2d a;
  Eigen::Matrix2d b;
};

PairCurvature pair_curvature(double x, double y, ConstraintMode mode) {
  const double s = 1.0 - kStationarityMargin;
  const auto [a, b] = constrain_pair(x, y, mode);
  PairCurvature c;
  if (mode == ConstraintMode::Relaxed) {
    const double p = a + b;
    const double p2 = -2.0 * p * (1.0 - (p / s) * (p / s));
    const double b2 = -2.0 * b * (1.0 - (b / s) * (b / s));
    c.a << p2, 0.0, 0.0, -b2;
    c.b << 0.0, 0.0, 0.0, b2;
    return c;
  }
  const double px = a / s;
  const double py = b / s;
  c.a << px * (1 - px) * (1 - 2 * px), -px * py * (1 - 2 * px), -px * py * (1 - 2 * px), px * py * (2 * py - 1);
  c.b << px * py * (2 * px - 1), -px * py * (1 - 2 * py), -px * py * (1 - 2 * py), py * (1 - py) * (1 - 2 * py);
  c.a *= s;
  c.b *= s;
  return c;
}

}  // namespace

void FitConfig::validate() const {
  if (!(outer_tol > 0.0)) throw InputError("outer_tol must be positive");
  if (max_outer_iters < 1) throw InputError("max_outer_iters must be at least 1");
  if (!(gradient_tol > 0.0)) throw InputError("gradient_tol must be positive");
  if (max_inner_iters < 1) throw InputError("max_inner_iters must be at least 1");
  if (!(eigenvalue_floor > 0.0)) throw InputError("eigenvalue_floor must be positive");
}

double total_loglik(const ModelParams& params, const VechSeries& gamma, const VechGaussian& density) {
  check_stationary(params);
  if (gamma.rows() == 0) throw DimensionMismatch("empty gamma series");
  if (gamma.cols() != params.size() || density.dim() != params.size())
    throw DimensionMismatch("gamma series, parameters and covariance disagree in dimension");
  return total_loglik<double>(params.a_star, params.b_star, params.gamma_bar, gamma, density);
}

double total_loglik(const ModelParams& params, const VechSeries& gamma, const Eigen::MatrixXd& u_star) {
  return total_loglik(params, gamma, VechGaussian(u_star));
}

Objective make_free_objective(const Eigen::VectorXd& gamma_bar, const VechSeries& gamma, const VechGaussian& density,
                              ConstraintMode mode) {
  return [&gamma_bar, &gamma, &density, mode](const Eigen::VectorXd& free) {
    return free_loglik<double>(free, gamma_bar, gamma, density, mode);
  };
}

Eigen::MatrixXd fd_hessian(const Objective& f, const Eigen::VectorXd& x) {
  const Index dim = x.size();
  Eigen::VectorXd h(dim);
  for (Index i = 0; i < dim; ++i) h(i) = std::max(1e-5, 1e-4 * std::abs(x(i)));

  const double f0 = f(x);
  Eigen::MatrixXd hess(dim, dim);
  Eigen::VectorXd probe = x;
  for (Index i = 0; i < dim; ++i) {
    probe(i) = x(i) + h(i);
    const double up = f(probe);
    probe(i) = x(i) - h(i);
    const double down = f(probe);
    probe(i) = x(i);
    hess(i, i) = (up - 2.0 * f0 + down) / (h(i) * h(i));
    for (Index j = 0; j < i; ++j) {
      auto corner = [&](double si, double sj) {
        probe(i) = x(i) + si * h(i);
        probe(j) = x(j) + sj * h(j);
        const double v = f(probe);
        probe(i) = x(i);
        probe(j) = x(j);
        return v;
      };
      const double v = (corner(1, 1) - corner(1, -1) - corner(-1, 1) + corner(-1, -1)) / (4.0 * h(i) * h(j));
      hess(i, j) = v;
      hess(j, i) = v;
    }
  }
  return hess;
}

ParamCovariance param_covariance(const Objective& free_objective, const Eigen::VectorXd& free, ConstraintMode mode) {
  const Index dim = free.size();
  const Index ns = dim / 2;
  const Eigen::MatrixXd hess_free = fd_hessian(free_objective, free);
  const Eigen::VectorXd grad_free = central_gradient(free_objective, free);
  const Eigen::MatrixXd jac = constrain_jacobian(free, mode);
  const Eigen::MatrixXd jac_inv = jac.inverse();
  // gradient with respect to (a*, b*)
  const Eigen::VectorXd grad = jac_inv.transpose() * grad_free;

  // H_free = J' H J + Σ_k g_k ∇²θ_k  =>  H = J^{-T} (H_free - Σ_k g_k ∇²θ_k) J^{-1}
  Eigen::MatrixXd curvature = Eigen::MatrixXd::Zero(dim, dim);
  for (Index i = 0; i < ns; ++i) {
    const PairCurvature c = pair_curvature(free(i), free(ns + i), mode);
    const Eigen::Matrix2d term = grad(i) * c.a + grad(ns + i) * c.b;
    curvature(i, i) += term(0, 0);
    curvature(i, ns + i) += term(0, 1);
    curvature(ns + i, i) += term(1, 0);
    curvature(ns + i, ns + i) += term(1, 1);
  }
  const Eigen::MatrixXd hess = jac_inv.transpose() * (hess_free - curvature) * jac_inv;

  ParamCovariance out;
  out.information = symmetrized(Eigen::MatrixXd(-hess));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(out.information);
  const Eigen::VectorXd lambda = es.eigenvalues();
  const double top = lambda.cwiseAbs().maxCoeff();
  const double cutoff = 1e-10 * top;
  Eigen::VectorXd inv_lambda(dim);
  for (Index i = 0; i < dim; ++i) {
    if (lambda(i) > cutoff) {
      inv_lambda(i) = 1.0 / lambda(i);
    } else {
      inv_lambda(i) = 0.0;
      out.pseudo_inverse = true;
    }
  }
  const Eigen::MatrixXd& v = es.eigenvectors();
  out.cov = symmetrized(Eigen::MatrixXd(v * inv_lambda.asDiagonal() * v.transpose()));
  return out;
}

FitResult fit(const VechSeries& gamma, const FitConfig& config) {
  config.validate();
  const Index t_len = gamma.rows();
  const Index ns = gamma.cols();
  dim_from_vech_length(ns);
  if (t_len < 2) throw DimensionMismatch("fit needs at least two observations");
  if (!gamma.allFinite()) throw InputError("gamma series contains non-finite values");

  const ConstraintMode mode = config.mode();
  FitResult res;
  res.mode = mode;

  const Eigen::VectorXd gamma_bar = gamma.colwise().mean().transpose();
  const Index free_params = 2 * ns;
  if (t_len < 10 * free_params / ns)
    res.warnings.push_back("sample of " + std::to_string(t_len) + " observations is small for " +
                           std::to_string(free_params) + " free parameters");

  // Sample covariance of the log series about its mean.
  const VechSeries centre = gamma_bar.transpose().replicate(t_len, 1);
  ScaleState scale = update_scale(gamma, centre);

  const ModelParams start{Eigen::VectorXd::Constant(ns, config.initial_a),
                          Eigen::VectorXd::Constant(ns, config.initial_b), gamma_bar};
  Eigen::VectorXd free = unconstrain(start, mode);

  BfgsOptions inner;
  inner.gradient_tol = config.gradient_tol;
  inner.max_iterations = config.max_inner_iters;

  for (int iter = 1; iter <= config.max_outer_iters; ++iter) {
    const VechGaussian density(scale.u_star);
    if (density.jitter() > 0.0)
      res.warnings.push_back("outer iteration " + std::to_string(iter) + ": U* regularized with jitter " +
                             std::to_string(density.jitter()));
    const Objective objective = make_free_objective(gamma_bar, gamma, density, mode);
    const BfgsResult inner_res = maximize_bfgs(objective, free, inner);
    if (!std::isfinite(inner_res.value))
      throw NonFiniteLikelihood("log-likelihood is not finite at outer iteration " + std::to_string(iter));

    free = inner_res.x;
    res.scale = scale;
    res.loglik = inner_res.value;
    res.loglik_trace.push_back(inner_res.value);
    res.n_outer_iters = iter;
    res.last_inner_iterations = inner_res.iterations;
    res.last_inner_status = inner_res.status;

    if (res.loglik_trace.size() >= 2) {
      const double prev = res.loglik_trace[res.loglik_trace.size() - 2];
      if (res.loglik < prev - kTraceSlack * std::abs(prev)) {
        res.warnings.push_back("log-likelihood decreased across outer iteration " + std::to_string(iter) +
                               "; stopping");
        break;
      }
      const double change = std::abs(res.loglik - prev) / std::max(std::abs(prev), 1e-300);
      if (change < config.outer_tol) {
        res.converged = true;
        break;
      }
    }
    if (iter == config.max_outer_iters) break;

    const Eigen::VectorXd coef = constrain_coefficients<double>(free, mode);
    scale = update_scale(gamma, mu_recursion_unchecked<double>(coef.head(ns), coef.tail(ns), gamma_bar, gamma));
  }

  res.params = constrain(free, gamma_bar, mode);
  res.mu_path = mu_recursion(res.params, gamma);

  const VechGaussian density(res.scale.u_star);
  const ParamCovariance pc = param_covariance(make_free_objective(gamma_bar, gamma, density, mode), free, mode);
  res.param_cov = pc.cov;
  res.information = pc.information;
  res.hessian_pseudo_inverse = pc.pseudo_inverse;
  if (pc.pseudo_inverse)
    res.warnings.push_back("observed information is not positive definite; parameter covariance is a pseudo-inverse");
  return res;
}

FitResult fit(const MatrixSeries& log_series, const FitConfig& config) {
  if (log_series.empty()) throw DimensionMismatch("empty log series");
  const Index n = log_series.front().rows();
  VechSeries gamma(static_cast<Index>(log_series.size()), vech_length(n));
  for (std::size_t t = 0; t < log_series.size(); ++t) {
    if (log_series[t].rows() != n) throw DimensionMismatch("log series matrices differ in size");
    gamma.row(static_cast<Index>(t)) = vech(log_series[t]).transpose();
  }
  return fit(gamma, config);
}

}  // namespace logbekk
