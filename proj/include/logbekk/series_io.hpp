#pragma once

// Delimited text format for matrix series, one time point per row:
//
//   n,2,SPY,TLT
//   2020-01-02,1.0,0.25,0.8
//
// The header holds the literal token `n`, the dimension and n labels. Each
// data row holds a date token followed by the n(n+1)/2 vech entries in the
// library's column-major lower-triangle order. Blank lines and lines starting
// with '#' are ignored.

#include <Eigen/Core>

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "logbekk/types.hpp"

namespace logbekk {

struct SeriesData {
  Eigen::Index dim = 0;
  std::vector<std::string> labels;
  std::vector<std::string> dates;
  MatrixSeries matrices;
};

struct LoadOptions {
  /// Validate every matrix as SPD; failures are collected into one ValidationError.
  bool require_spd = true;
};

/// Digits used when writing numbers; LOGBEKK_PRECISION overrides the default of 12.
int output_precision();

SeriesData parse_series(std::istream& in, const LoadOptions& opts = {});
SeriesData load_series(const std::filesystem::path& path, const LoadOptions& opts = {});

void write_series(std::ostream& out, const SeriesData& data, int precision);
void save_series(const std::filesystem::path& path, const SeriesData& data, int precision = output_precision());

/// Default labels v1..vn.
std::vector<std::string> default_labels(Eigen::Index n);

}  // namespace logbekk
