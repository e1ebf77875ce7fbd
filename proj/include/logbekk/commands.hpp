#pragma once

// The four CLI commands as library functions. Each writes its outputs into a
// directory and records a manifest.json holding everything needed to rerun it.
// Errors surface as exceptions (InputError / NumericalError); the returned
// ExitCode distinguishes success from non-convergence.

#include <cstdint>
#include <filesystem>
#include <optional>

#include "logbekk/estimation.hpp"

namespace logbekk {

inline constexpr const char* kVersion = "0.1.0";

enum class ExitCode : int {
  Ok = 0,
  Unexpected = 1,
  InputFailure = 2,
  NumericalFailure = 3,
  NotConverged = 4,
};

struct FitCommand {
  std::filesystem::path input;
  std::filesystem::path out_dir;
  bool bias_correct = false;
  FitConfig fit;
};

struct SimulateCommand {
  Index n = 0;
  Index t_len = 0;
  std::uint64_t seed = 0;
  std::filesystem::path params;
  std::filesystem::path out_dir;
  /// Overrides the params file's "burn_in" (default 500).
  std::optional<Index> burn_in;
};

struct ForecastCommand {
  std::filesystem::path fit_dir;
  Index horizon = 1;
  bool bias_correct = false;
  /// Defaults to fit_dir.
  std::optional<std::filesystem::path> out_dir;
};

struct TransformCommand {
  std::filesystem::path input;
  std::filesystem::path out_dir;
  double eigenvalue_floor = kDefaultEigenvalueFloor;
  bool clip_eigenvalues = false;
};

/// Writes params.json, loglik_trace.csv, fitted.csv [, fitted_corrected.csv], manifest.json.
ExitCode cmd_fit(const FitCommand& cmd);

/// Writes series.csv, true_params.json, manifest.json.
ExitCode cmd_simulate(const SimulateCommand& cmd);

/// Writes forecast.csv [, forecast_corrected.csv], forecast_manifest.json.
ExitCode cmd_forecast(const ForecastCommand& cmd);

/// Writes gamma.csv (the log-matrix series), manifest.json.
ExitCode cmd_transform(const TransformCommand& cmd);

/// Hex SHA-256 of a file's bytes.
std::string file_sha256(const std::filesystem::path& path);

}  // namespace logbekk
