#pragma once

// Matrix logarithm / exponential of symmetric matrices via the symmetric
// eigendecomposition, half-vectorization (vech) and the Kronecker selection
// map U -> U*. Everything here is a pure function templated on the scalar
// type so the same kernel runs in double, in extended precision and under
// automatic differentiation.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "logbekk/errors.hpp"

namespace logbekk {

using Index = Eigen::Index;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Absolute tolerance on |m_ij - m_ji| for a matrix to count as symmetric.
inline constexpr double kSymmetryTolerance = 1e-12;
/// Smallest eigenvalue accepted by mat_log unless clipping is requested.
inline constexpr double kDefaultEigenvalueFloor = 1e-12;

/// n(n+1)/2.
constexpr Index vech_length(Index n) noexcept { return n * (n + 1) / 2; }

/// Inverse of vech_length; throws BadLength when `len` is not triangular.
inline Index dim_from_vech_length(Index len) {
  if (len <= 0) throw BadLength("vech length must be positive, got " + std::to_string(len));
  const auto n = static_cast<Index>(std::llround((std::sqrt(8.0 * static_cast<double>(len) + 1.0) - 1.0) / 2.0));
  if (vech_length(n) != len)
    throw BadLength("vech length " + std::to_string(len) + " is not a triangular number n(n+1)/2");
  return n;
}

/// Column-major lower-triangle ordering shared by every vech in the library:
/// (0,0),(1,0),...,(n-1,0),(1,1),...,(n-1,n-1). Indices are zero-based.
class VechIndexMap {
 public:
  explicit VechIndexMap(Index n) : n_(n) {
    if (n <= 0) throw DimensionMismatch("matrix dimension must be positive");
    pairs_.reserve(static_cast<std::size_t>(vech_length(n)));
    for (Index col = 0; col < n; ++col)
      for (Index row = col; row < n; ++row) pairs_.emplace_back(row, col);
  }

  Index dim() const noexcept { return n_; }
  Index size() const noexcept { return static_cast<Index>(pairs_.size()); }

  /// Position of element (row, col); the arguments may come in either order.
  Index index_of(Index row, Index col) const noexcept {
    if (row < col) std::swap(row, col);
    return col * n_ - col * (col - 1) / 2 + (row - col);
  }

  std::pair<Index, Index> pair_of(Index k) const { return pairs_.at(static_cast<std::size_t>(k)); }
  const std::vector<std::pair<Index, Index>>& pairs() const noexcept { return pairs_; }

  /// Positions of the diagonal elements (the variance equations).
  std::vector<Index> diagonal_positions() const {
    std::vector<Index> out;
    out.reserve(static_cast<std::size_t>(n_));
    for (Index i = 0; i < n_; ++i) out.push_back(index_of(i, i));
    return out;
  }

 private:
  Index n_;
  std::vector<std::pair<Index, Index>> pairs_;
};

template <typename Derived>
typename Derived::Scalar max_asymmetry(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  if (m.rows() == 0) return Scalar(0);
  return (m - m.transpose()).cwiseAbs().maxCoeff();
}

template <typename Derived>
void check_square(const Eigen::MatrixBase<Derived>& m) {
  if (m.rows() != m.cols() || m.rows() == 0)
    throw DimensionMismatch("expected a non-empty square matrix, got " + std::to_string(m.rows()) + "x" +
                            std::to_string(m.cols()));
}

/// Throws NotSymmetric when the asymmetry exceeds `tol`.
template <typename Derived>
void check_symmetric(const Eigen::MatrixBase<Derived>& m, double tol = kSymmetryTolerance) {
  check_square(m);
  const double asym = static_cast<double>(max_asymmetry(m));
  if (!(asym <= tol)) throw NotSymmetric(asym);
}

/// (M + M^T) / 2.
template <typename Derived>
Matrix<typename Derived::Scalar> symmetrized(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  return (m + m.transpose()) * Scalar(0.5);
}

template <typename Derived>
typename Derived::Scalar min_eigenvalue(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(symmetrized(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

/// Symmetry within tolerance and strictly positive spectrum.
template <typename Derived>
bool is_spd(const Eigen::MatrixBase<Derived>& m, double tol = kSymmetryTolerance) {
  if (m.rows() != m.cols() || m.rows() == 0) return false;
  if (!(static_cast<double>(max_asymmetry(m)) <= tol)) return false;
  return min_eigenvalue(m) > 0;
}

/// Throws NotSymmetric / NotPositiveDefinite.
template <typename Derived>
void check_spd(const Eigen::MatrixBase<Derived>& m, double tol = kSymmetryTolerance) {
  check_symmetric(m, tol);
  const auto lo = min_eigenvalue(m);
  if (!(lo > 0)) throw NotPositiveDefinite(static_cast<double>(lo));
}

/// V f(Λ) V^T for symmetric input; `f` acts on each eigenvalue.
template <typename Derived, typename Fn>
Matrix<typename Derived::Scalar> spectral_apply(const Eigen::MatrixBase<Derived>& m, Fn&& f) {
  using Scalar = typename Derived::Scalar;
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(symmetrized(m));
  const Vector<Scalar> mapped = es.eigenvalues().unaryExpr(f);
  const Matrix<Scalar>& v = es.eigenvectors();
  return symmetrized(v * mapped.asDiagonal() * v.transpose());
}

struct MatLogOptions {
  double eigenvalue_floor = kDefaultEigenvalueFloor;
  /// Replace eigenvalues below the floor by the floor instead of throwing.
  /// Changes the result; meant only for dirty input.
  bool clip_eigenvalues = false;
};

/// Logarithm of an SPD matrix, V log(Λ) V^T.
template <typename Derived>
Matrix<typename Derived::Scalar> mat_log(const Eigen::MatrixBase<Derived>& c, const MatLogOptions& opts = {}) {
  using Scalar = typename Derived::Scalar;
  using std::log;
  check_symmetric(c);
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(symmetrized(c));
  if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition failed in mat_log");
  Vector<Scalar> lambda = es.eigenvalues();
  const Scalar floor_value(opts.eigenvalue_floor);
  if (!(lambda.minCoeff() > floor_value)) {
    if (!opts.clip_eigenvalues) throw NotPositiveDefinite(static_cast<double>(lambda.minCoeff()));
    lambda = lambda.cwiseMax(floor_value);
  }
  const Vector<Scalar> mapped = lambda.unaryExpr([](const Scalar& x) -> Scalar { return log(x); });
  const Matrix<Scalar>& v = es.eigenvectors();
  return symmetrized(v * mapped.asDiagonal() * v.transpose());
}

/// Exponential of a symmetric matrix, W exp(L) W^T. Always SPD in exact arithmetic.
template <typename Derived>
Matrix<typename Derived::Scalar> mat_exp(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  using std::exp;
  check_symmetric(m);
  return spectral_apply(m, [](const Scalar& x) -> Scalar { return exp(x); });
}

/// Half-vectorization in VechIndexMap order.
template <typename Derived>
Vector<typename Derived::Scalar> vech(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  check_symmetric(m);
  const Index n = m.rows();
  Vector<Scalar> out(vech_length(n));
  Index k = 0;
  for (Index col = 0; col < n; ++col)
    for (Index row = col; row < n; ++row) out(k++) = m(row, col);
  return out;
}

/// Inverse of vech; throws BadLength for non-triangular lengths.
template <typename Derived>
Matrix<typename Derived::Scalar> unvech(const Eigen::MatrixBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  const Index n = dim_from_vech_length(v.size());
  Matrix<Scalar> out(n, n);
  Index k = 0;
  for (Index col = 0; col < n; ++col)
    for (Index row = col; row < n; ++row) {
      out(row, col) = v(k);
      out(col, row) = v(k);
      ++k;
    }
  return out;
}

/// Entries of U ⊗ U at the vech positions: U*(p,q) = U(i_p,i_q) U(j_p,j_q).
template <typename Derived>
Matrix<typename Derived::Scalar> select_ustar(const Eigen::MatrixBase<Derived>& u) {
  using Scalar = typename Derived::Scalar;
  check_symmetric(u);
  const Matrix<Scalar> us = symmetrized(u);
  const VechIndexMap map(u.rows());
  const Index ns = map.size();
  Matrix<Scalar> out(ns, ns);
  for (Index p = 0; p < ns; ++p) {
    const auto [ip, jp] = map.pair_of(p);
    for (Index q = 0; q < ns; ++q) {
      const auto [iq, jq] = map.pair_of(q);
      out(p, q) = us(ip, iq) * us(jp, jq);
    }
  }
  return out;
}

}  // namespace logbekk
