#pragma once

#include <Eigen/Core>

#include <vector>

namespace logbekk {

/// Time-indexed sequence of n x n matrices (C_t or Gamma_t).
using MatrixSeries = std::vector<Eigen::MatrixXd>;

/// T x n* matrix; row t holds the vech of the matrix at time t.
using VechSeries = Eigen::MatrixXd;

}  // namespace logbekk
