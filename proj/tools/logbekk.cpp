#include <iostream>

#include "CLI11.hpp"
#include "logbekk/commands.hpp"

using logbekk::ExitCode;

namespace {

template <typename Fn>
int run(Fn&& fn) {
  try {
    const ExitCode code = fn();
    if (code == ExitCode::NotConverged) std::cerr << "warning: estimation did not converge; diagnostics written\n";
    return static_cast<int>(code);
  } catch (const logbekk::InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::InputFailure);
  } catch (const logbekk::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return static_cast<int>(ExitCode::NumericalFailure);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::Unexpected);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Log-matrix BEKK model for realized covariance series"};
  app.set_version_flag("--version", logbekk::kVersion);
  app.require_subcommand(1);

  logbekk::FitCommand fit;
  auto* fit_cmd = app.add_subcommand("fit", "Estimate the model on a covariance series");
  fit_cmd->add_option("--input", fit.input, "Series file (vech rows)")->required()->check(CLI::ExistingFile);
  fit_cmd->add_option("--out", fit.out_dir, "Output directory")->required();
  fit_cmd->add_flag("--bias-correct", fit.bias_correct, "Also write bias-corrected fitted covariances");
  fit_cmd->add_option("--outer-tol", fit.fit.outer_tol, "Relative log-likelihood change for convergence")
      ->capture_default_str();
  fit_cmd->add_option("--max-outer", fit.fit.max_outer_iters, "Maximum outer iterations")->capture_default_str();
  fit_cmd->add_option("--gradient-tol", fit.fit.gradient_tol, "Inner optimizer gradient tolerance")
      ->capture_default_str();
  fit_cmd->add_option("--max-inner", fit.fit.max_inner_iters, "Maximum inner iterations")->capture_default_str();
  fit_cmd->add_flag("--relaxed-constraints", fit.fit.relaxed_constraints,
                    "Allow negative coefficients (|b|<1, |a+b|<1)");
  fit_cmd->add_option("--eigenvalue-floor", fit.fit.eigenvalue_floor, "Smallest accepted eigenvalue")
      ->capture_default_str();

  logbekk::SimulateCommand sim;
  std::int64_t sim_burn_in = -1;
  auto* sim_cmd = app.add_subcommand("simulate", "Simulate a covariance series from known parameters");
  sim_cmd->add_option("--n", sim.n, "Matrix dimension")->required();
  sim_cmd->add_option("--t", sim.t_len, "Number of time points")->required();
  sim_cmd->add_option("--seed", sim.seed, "Random seed")->required();
  sim_cmd->add_option("--params", sim.params, "JSON with a_star, b_star, gamma_bar, u")
      ->required()
      ->check(CLI::ExistingFile);
  sim_cmd->add_option("--out", sim.out_dir, "Output directory")->required();
  sim_cmd->add_option("--burn-in", sim_burn_in, "Discarded initial steps (default: params file or 500)");

  logbekk::ForecastCommand fc;
  std::string fc_out;
  auto* fc_cmd = app.add_subcommand("forecast", "Forecast covariances from a fit directory");
  fc_cmd->add_option("--fit", fc.fit_dir, "Directory written by `fit`")->required()->check(CLI::ExistingDirectory);
  fc_cmd->add_option("--horizon", fc.horizon, "Number of steps ahead")->required();
  fc_cmd->add_flag("--bias-correct", fc.bias_correct, "Also write bias-corrected forecasts");
  fc_cmd->add_option("--out", fc_out, "Output directory (default: the fit directory)");

  logbekk::TransformCommand tr;
  auto* tr_cmd = app.add_subcommand("transform", "Write the matrix-log series");
  tr_cmd->add_option("--input", tr.input, "Series file (vech rows)")->required()->check(CLI::ExistingFile);
  tr_cmd->add_option("--out", tr.out_dir, "Output directory")->required();
  tr_cmd->add_option("--eigenvalue-floor", tr.eigenvalue_floor, "Smallest accepted eigenvalue")->capture_default_str();
  tr_cmd->add_flag("--clip-eigenvalues", tr.clip_eigenvalues,
                   "Clip eigenvalues below the floor instead of failing (alters results)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ExitCode::InputFailure);
  }

  if (*fit_cmd) return run([&] { return logbekk::cmd_fit(fit); });
  if (*sim_cmd) {
    if (sim_burn_in >= 0) sim.burn_in = sim_burn_in;
    return run([&] { return logbekk::cmd_simulate(sim); });
  }
  if (*fc_cmd) {
    if (!fc_out.empty()) fc.out_dir = fc_out;
    return run([&] { return logbekk::cmd_forecast(fc); });
  }
  return run([&] { return logbekk::cmd_transform(tr); });
}
