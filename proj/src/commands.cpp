#include "logbekk/commands.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <iomanip>
#include <sstream>

#include "json.hpp"
#include "logbekk/bias_correction.hpp"
#include "logbekk/series_io.hpp"

namespace logbekk {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr Index kDefaultBurnIn = 500;

json to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json to_json(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(std::move(row));
  }
  return out;
}

Eigen::VectorXd vector_from(const json& j, const std::string& key) {
  if (!j.contains(key) || !j.at(key).is_array()) throw InputError("missing array '" + key + "'");
  const auto& arr = j.at(key);
  Eigen::VectorXd v(static_cast<Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number()) throw InputError("non-numeric entry in '" + key + "'");
    v(static_cast<Index>(i)) = arr[i].get<double>();
  }
  return v;
}

Eigen::MatrixXd matrix_from(const json& j, const std::string& key) {
  if (!j.contains(key) || !j.at(key).is_array() || j.at(key).empty())
    throw InputError("missing matrix '" + key + "'");
  const auto& rows = j.at(key);
  const std::size_t cols = rows[0].size();
  Eigen::MatrixXd m(static_cast<Index>(rows.size()), static_cast<Index>(cols));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!rows[i].is_array() || rows[i].size() != cols) throw InputError("ragged matrix '" + key + "'");
    for (std::size_t k = 0; k < cols; ++k) {
      if (!rows[i][k].is_number()) throw InputError("non-numeric entry in '" + key + "'");
      m(static_cast<Index>(i), static_cast<Index>(k)) = rows[i][k].get<double>();
    }
  }
  return m;
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create output directory " + dir.string() + ": " + ec.message());
}

json manifest_base(const std::string& command) {
  json m;
  m["tool"] = "logbekk";
  m["version"] = kVersion;
  m["eigen_version"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                       std::to_string(EIGEN_MINOR_VERSION);
  m["command"] = command;
  m["precision"] = output_precision();
  return m;
}

json fit_config_json(const FitConfig& c) {
  json j;
  j["outer_tol"] = c.outer_tol;
  j["max_outer_iters"] = c.max_outer_iters;
  j["gradient_tol"] = c.gradient_tol;
  j["max_inner_iters"] = c.max_inner_iters;
  j["relaxed_constraints"] = c.relaxed_constraints;
  j["eigenvalue_floor"] = c.eigenvalue_floor;
  j["initial_a"] = c.initial_a;
  j["initial_b"] = c.initial_b;
  return j;
}

VechSeries log_vech_series(const SeriesData& data, const MatLogOptions& opts) {
  VechSeries gamma(static_cast<Index>(data.matrices.size()), vech_length(data.dim));
  for (std::size_t t = 0; t < data.matrices.size(); ++t)
    gamma.row(static_cast<Index>(t)) = vech(mat_log(data.matrices[t], opts)).transpose();
  return gamma;
}

SeriesData series_like(const SeriesData& shape, MatrixSeries matrices) {
  SeriesData out;
  out.dim = shape.dim;
  out.labels = shape.labels;
  out.dates = shape.dates;
  out.matrices = std::move(matrices);
  return out;
}

}  // namespace

std::string file_sha256(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
  char buf[1 << 15];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf, static_cast<std::size_t>(in.gcount()));
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return hex.str();
}

ExitCode cmd_fit(const FitCommand& cmd) {
  cmd.fit.validate();
  const SeriesData data = load_series(cmd.input);
  if (data.matrices.size() < 2) throw InputError("fit needs at least two observations");
  const MatLogOptions log_opts{cmd.fit.eigenvalue_floor, false};
  const VechSeries gamma = log_vech_series(data, log_opts);
  const FitResult res = fit(gamma, cmd.fit);

  ensure_dir(cmd.out_dir);
  const int precision = output_precision();

  const Index ns = res.params.size();
  const Eigen::VectorXd se = res.standard_errors();
  const auto stats = variance_equation_stats(res);

  json params;
  params["n"] = data.dim;
  params["labels"] = data.labels;
  params["a_star"] = to_json(res.params.a_star);
  params["b_star"] = to_json(res.params.b_star);
  params["gamma_bar"] = to_json(res.params.gamma_bar);
  params["se_a"] = to_json(Eigen::VectorXd(se.head(ns)));
  params["se_b"] = to_json(Eigen::VectorXd(se.tail(ns)));
  params["loglik"] = res.loglik;
  params["loglik_trace"] = res.loglik_trace;
  params["converged"] = res.converged;
  params["n_outer_iters"] = res.n_outer_iters;
  params["relaxed_constraints"] = res.mode == ConstraintMode::Relaxed;
  params["hessian_pseudo_inverse"] = res.hessian_pseudo_inverse;
  params["param_cov"] = to_json(res.param_cov);
  params["sigma_hat"] = to_json(res.scale.sigma_hat);
  params["u_hat"] = to_json(res.scale.u_hat);
  params["last_date"] = data.dates.back();
  params["last_gamma"] = to_json(Eigen::VectorXd(gamma.row(gamma.rows() - 1).transpose()));
  params["last_mu"] = to_json(Eigen::VectorXd(res.mu_path.row(res.mu_path.rows() - 1).transpose()));
  json eqs = json::array();
  for (const auto& s : stats)
    eqs.push_back({{"position", s.position},
                   {"sample_var_mu", s.sample_var_mu},
                   {"var_a", s.var_a},
                   {"var_b", s.var_b},
                   {"cov_ab", s.cov_ab}});
  params["variance_equations"] = eqs;
  params["warnings"] = res.warnings;
  write_json(cmd.out_dir / "params.json", params);

  {
    std::ofstream trace(cmd.out_dir / "loglik_trace.csv", std::ios::binary);
    trace << "iteration,loglik\n" << std::setprecision(precision);
    for (std::size_t i = 0; i < res.loglik_trace.size(); ++i) trace << i + 1 << ',' << res.loglik_trace[i] << '\n';
  }

  std::vector<std::string> outputs{"params.json", "loglik_trace.csv", "fitted.csv"};
  const CorrectedSeries corrected = bias_corrected_series(res, gamma, /*allow_unconverged=*/true);
  save_series(cmd.out_dir / "fitted.csv", series_like(data, corrected.uncorrected), precision);
  if (cmd.bias_correct) {
    save_series(cmd.out_dir / "fitted_corrected.csv", series_like(data, corrected.corrected), precision);
    outputs.push_back("fitted_corrected.csv");
  }

  json manifest = manifest_base("fit");
  manifest["seed"] = nullptr;
  manifest["input"] = {{"path", cmd.input.string()}, {"sha256", file_sha256(cmd.input)}};
  manifest["config"] = fit_config_json(cmd.fit);
  manifest["bias_correct"] = cmd.bias_correct;
  manifest["loglik"] = res.loglik;
  manifest["converged"] = res.converged;
  manifest["clamped_corrections"] = corrected.factors.clamped_count;
  manifest["outputs"] = outputs;
  write_json(cmd.out_dir / "manifest.json", manifest);

  return res.converged ? ExitCode::Ok : ExitCode::NotConverged;
}

ExitCode cmd_simulate(const SimulateCommand& cmd) {
  if (cmd.n < 1) throw InputError("--n must be positive");
  if (cmd.t_len < 1) throw InputError("--t must be positive");
  const json given = read_json(cmd.params);
  ModelParams params{vector_from(given, "a_star"), vector_from(given, "b_star"), vector_from(given, "gamma_bar")};
  const Eigen::MatrixXd u = matrix_from(given, "u");
  if (params.size() != vech_length(cmd.n) || u.rows() != cmd.n || u.cols() != cmd.n)
    throw DimensionMismatch("parameter file does not describe an n=" + std::to_string(cmd.n) + " model");
  Index burn_in = kDefaultBurnIn;
  if (given.contains("burn_in")) burn_in = given.at("burn_in").get<Index>();
  if (cmd.burn_in) burn_in = *cmd.burn_in;

  const Simulation sim = simulate(params, u, cmd.t_len, burn_in, cmd.seed);

  ensure_dir(cmd.out_dir);
  SeriesData data;
  data.dim = cmd.n;
  data.labels = default_labels(cmd.n);
  for (Index t = 1; t <= cmd.t_len; ++t) data.dates.push_back(std::to_string(t));
  data.matrices = sim.cov;
  save_series(cmd.out_dir / "series.csv", data);

  json truth;
  truth["n"] = cmd.n;
  truth["t"] = cmd.t_len;
  truth["seed"] = cmd.seed;
  truth["burn_in"] = burn_in;
  truth["a_star"] = to_json(params.a_star);
  truth["b_star"] = to_json(params.b_star);
  truth["gamma_bar"] = to_json(params.gamma_bar);
  truth["u"] = to_json(u);
  write_json(cmd.out_dir / "true_params.json", truth);

  json manifest = manifest_base("simulate");
  manifest["seed"] = cmd.seed;
  manifest["input"] = {{"path", cmd.params.string()}, {"sha256", file_sha256(cmd.params)}};
  manifest["config"] = {{"n", cmd.n}, {"t", cmd.t_len}, {"burn_in", burn_in}};
  manifest["a_star"] = truth["a_star"];
  manifest["b_star"] = truth["b_star"];
  manifest["gamma_bar"] = truth["gamma_bar"];
  manifest["u"] = truth["u"];
  manifest["outputs"] = {"series.csv", "true_params.json"};
  write_json(cmd.out_dir / "manifest.json", manifest);
  return ExitCode::Ok;
}

ExitCode cmd_forecast(const ForecastCommand& cmd) {
  if (cmd.horizon < 1) throw InputError("--horizon must be at least 1");
  const fs::path params_path = cmd.fit_dir / "params.json";
  const json fitted = read_json(params_path);
  const ModelParams params{vector_from(fitted, "a_star"), vector_from(fitted, "b_star"),
                           vector_from(fitted, "gamma_bar")};
  const Eigen::VectorXd last_gamma = vector_from(fitted, "last_gamma");
  const Eigen::VectorXd last_mu = vector_from(fitted, "last_mu");
  const Index n = fitted.at("n").get<Index>();
  const VechSeries mu = forecast_mu(params, last_gamma, last_mu, cmd.horizon);

  SeriesData out;
  out.dim = n;
  out.labels = fitted.at("labels").get<std::vector<std::string>>();
  for (Index k = 1; k <= cmd.horizon; ++k) {
    out.dates.push_back("+" + std::to_string(k));
    out.matrices.push_back(mat_exp(unvech(mu.row(k - 1).transpose())));
  }

  const fs::path dir = cmd.out_dir.value_or(cmd.fit_dir);
  ensure_dir(dir);
  save_series(dir / "forecast.csv", out);
  std::vector<std::string> outputs{"forecast.csv"};

  Index clamped = 0;
  if (cmd.bias_correct) {
    std::vector<VarianceEquationStats> stats;
    for (const auto& e : fitted.at("variance_equations"))
      stats.push_back({e.at("position").get<Index>(), e.at("sample_var_mu").get<double>(), e.at("var_a").get<double>(),
                       e.at("var_b").get<double>(), e.at("cov_ab").get<double>()});
    const CorrectionFactors f = forecast_correction_factors(stats, params.gamma_bar, last_gamma, last_mu, mu);
    clamped = f.clamped_count;
    SeriesData corrected = out;
    for (Index k = 0; k < cmd.horizon; ++k)
      corrected.matrices[static_cast<std::size_t>(k)] =
          correct_covariance(out.matrices[static_cast<std::size_t>(k)], f.factors.row(k).transpose());
    save_series(dir / "forecast_corrected.csv", corrected);
    outputs.push_back("forecast_corrected.csv");
  }

  json manifest = manifest_base("forecast");
  manifest["seed"] = nullptr;
  manifest["input"] = {{"path", params_path.string()}, {"sha256", file_sha256(params_path)}};
  manifest["config"] = {{"horizon", cmd.horizon}, {"bias_correct", cmd.bias_correct}};
  manifest["clamped_corrections"] = clamped;
  manifest["outputs"] = outputs;
  write_json(dir / "forecast_manifest.json", manifest);
  return ExitCode::Ok;
}

ExitCode cmd_transform(const TransformCommand& cmd) {
  LoadOptions load;
  load.require_spd = !cmd.clip_eigenvalues;
  const SeriesData data = load_series(cmd.input, load);
  const MatLogOptions opts{cmd.eigenvalue_floor, cmd.clip_eigenvalues};
  MatrixSeries logs;
  logs.reserve(data.matrices.size());
  for (const auto& c : data.matrices) logs.push_back(mat_log(c, opts));

  ensure_dir(cmd.out_dir);
  save_series(cmd.out_dir / "gamma.csv", series_like(data, std::move(logs)));

  json manifest = manifest_base("transform");
  manifest["seed"] = nullptr;
  manifest["input"] = {{"path", cmd.input.string()}, {"sha256", file_sha256(cmd.input)}};
  manifest["config"] = {{"eigenvalue_floor", cmd.eigenvalue_floor}, {"clip_eigenvalues", cmd.clip_eigenvalues}};
  manifest["outputs"] = {"gamma.csv"};
  write_json(cmd.out_dir / "manifest.json", manifest);
  return ExitCode::Ok;
}

}  // namespace logbekk
