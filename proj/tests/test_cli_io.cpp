#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "logbekk/commands.hpp"
#include "logbekk/series_io.hpp"
#include "test_support.hpp"

using namespace logbekk;
using Eigen::MatrixXd;
using Eigen::VectorXd;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("logbekk_test_" + std::to_string(::getpid()) + "_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

int cli(const std::string& args) {
  const std::string cmd = std::string("\"") + LOGBEKK_CLI_PATH + "\" " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

VectorXd vec(const json& j) {
  VectorXd v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = j[i].get<double>();
  return v;
}

void write_truth(const fs::path& p) {
  const MatrixXd c = (MatrixXd(2, 2) << 1.0, 0.3, 0.3, 0.8).finished();
  const VectorXd gbar = vech(mat_log(c));
  json j;
  j["a_star"] = {0.25, 0.2, 0.3};
  j["b_star"] = {0.7, 0.75, 0.65};
  j["gamma_bar"] = {gbar(0), gbar(1), gbar(2)};
  j["u"] = {{0.4, 0.1}, {0.1, 0.35}};
  spit(p, j.dump(2));
}

void check_reloads_spd(const fs::path& p) {
  CAPTURE(p.string());
  const SeriesData d = load_series(p);
  for (const auto& c : d.matrices) CHECK(is_spd(c));
}

}  // namespace

TEST_CASE("parse_series: valid file") {
  std::istringstream in(
      "# comment\n"
      "n,2,SPY,TLT\n"
      "2020-01-02,1.0,0.25,0.8\n"
      "\n"
      "2020-01-03,1.1,0.2,0.9\n"
      "2020-01-06,0.9,-0.1,1.2\n");
  const SeriesData d = parse_series(in);
  CHECK(d.dim == 2);
  REQUIRE(d.matrices.size() == 3);
  CHECK(d.labels == std::vector<std::string>{"SPY", "TLT"});
  CHECK(d.dates[2] == "2020-01-06");
  CHECK(d.matrices[0](1, 0) == 0.25);
  CHECK(d.matrices[0](0, 1) == 0.25);
  CHECK(d.matrices[2](1, 1) == 1.2);
  for (const auto& c : d.matrices) CHECK(is_spd(c));
}

TEST_CASE("parse_series: every invalid row is reported") {
  std::istringstream in(
      "n,2,a,b\n"
      "d1,1,2,1\n"
      "d2,1,0,1\n"
      "d3,1,0,-3\n");
  try {
    parse_series(in);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    REQUIRE(e.rows().size() == 2);
    CHECK(e.rows()[0].line == 2);
    CHECK(e.rows()[0].min_eigenvalue == doctest::Approx(-1.0));
    CHECK(e.rows()[1].line == 4);
    CHECK(std::string(e.what()).find("not positive definite") != std::string::npos);
  }
}

TEST_CASE("parse_series: malformed input carries line and column") {
  std::istringstream bad_number("n,2,a,b\nd1,1,0.1,1\nd2,1,abc,1\n");
  try {
    parse_series(bad_number);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
    CHECK(e.column() == 3);
  }
  std::istringstream short_row("n,2,a,b\nd1,1,0.1\n");
  CHECK_THROWS_AS(parse_series(short_row), ParseError);
  std::istringstream no_header("d1,1,0.1,1\n");
  CHECK_THROWS_AS(parse_series(no_header), ParseError);
  std::istringstream labels("n,2,a\nd1,1,0.1,1\n");
  CHECK_THROWS_AS(parse_series(labels), ParseError);
  std::istringstream empty("");
  CHECK_THROWS_AS(parse_series(empty), ParseError);
}

TEST_CASE("save_series/load_series round trip") {
  std::mt19937_64 rng(8);
  SeriesData d;
  d.dim = 3;
  d.labels = default_labels(3);
  for (int t = 0; t < 20; ++t) {
    d.dates.push_back("t" + std::to_string(t));
    d.matrices.push_back(test::random_spd(rng, 3, 0.1, 10.0));
  }
  const fs::path dir = scratch("roundtrip");

  save_series(dir / "full.csv", d, 17);
  const SeriesData full = load_series(dir / "full.csv");
  CHECK(full.labels == d.labels);
  CHECK(full.dates == d.dates);
  for (std::size_t t = 0; t < d.matrices.size(); ++t) CHECK(full.matrices[t] == d.matrices[t]);

  save_series(dir / "short.csv", d);
  const SeriesData shortened = load_series(dir / "short.csv");
  for (std::size_t t = 0; t < d.matrices.size(); ++t)
    CHECK((shortened.matrices[t] - d.matrices[t]).cwiseAbs().maxCoeff() < 1e-11 * d.matrices[t].cwiseAbs().maxCoeff());
  // saving the reloaded values again is a fixed point
  save_series(dir / "again.csv", shortened);
  CHECK(slurp(dir / "again.csv") == slurp(dir / "short.csv"));

  CHECK_THROWS_AS(load_series(dir / "missing.csv"), InputError);
  fs::remove_all(dir);
}

TEST_CASE("output_precision honours the environment") {
  CHECK(output_precision() == 12);
  ::setenv("LOGBEKK_PRECISION", "6", 1);
  CHECK(output_precision() == 6);
  ::setenv("LOGBEKK_PRECISION", "40", 1);
  CHECK_THROWS_AS(output_precision(), InputError);
  ::unsetenv("LOGBEKK_PRECISION");
}

TEST_CASE("cli: simulate is byte-identical per seed and reproducible from its manifest") {
  const fs::path dir = scratch("simulate");
  write_truth(dir / "truth.json");
  const std::string base = "simulate --n 2 --t 300 --seed 7 --params \"" + (dir / "truth.json").string() + "\"";
  REQUIRE(cli(base + " --out \"" + (dir / "a").string() + "\"") == 0);
  REQUIRE(cli(base + " --out \"" + (dir / "b").string() + "\"") == 0);
  for (const char* f : {"series.csv", "true_params.json", "manifest.json"})
    CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
  CHECK(slurp(dir / "a" / "series.csv") != "");

  const json manifest = read_json(dir / "a" / "manifest.json");
  CHECK(manifest.at("seed").get<std::uint64_t>() == 7);
  CHECK(manifest.at("input").at("sha256").get<std::string>() == file_sha256(dir / "truth.json"));
  json again;
  for (const char* k : {"a_star", "b_star", "gamma_bar", "u"}) again[k] = manifest.at(k);
  again["burn_in"] = manifest.at("config").at("burn_in");
  spit(dir / "from_manifest.json", again.dump());
  REQUIRE(cli("simulate --n 2 --t 300 --seed 7 --params \"" + (dir / "from_manifest.json").string() + "\" --out \"" +
              (dir / "c").string() + "\"") == 0);
  CHECK(slurp(dir / "c" / "series.csv") == slurp(dir / "a" / "series.csv"));

  CHECK(cli("simulate --n 2 --t 300 --seed 8 --params \"" + (dir / "truth.json").string() + "\" --out \"" +
            (dir / "d").string() + "\"") == 0);
  CHECK(slurp(dir / "d" / "series.csv") != slurp(dir / "a" / "series.csv"));
  check_reloads_spd(dir / "a" / "series.csv");
  fs::remove_all(dir);
}

TEST_CASE("cli: fit recovers simulated parameters and forecasts from the fit") {
  const fs::path dir = scratch("fit");
  write_truth(dir / "truth.json");
  REQUIRE(cli("simulate --n 2 --t 2000 --seed 11 --params \"" + (dir / "truth.json").string() + "\" --out \"" +
              (dir / "sim").string() + "\"") == 0);
  const int code = cli("fit --input \"" + (dir / "sim" / "series.csv").string() + "\" --out \"" +
                       (dir / "fit").string() + "\" --bias-correct");
  CHECK((code == 0 || code == 4));

  const json params = read_json(dir / "fit" / "params.json");
  const json truth = read_json(dir / "sim" / "true_params.json");
  const VectorXd a = vec(params.at("a_star")), b = vec(params.at("b_star"));
  const VectorXd se_a = vec(params.at("se_a")), se_b = vec(params.at("se_b"));
  const VectorXd ta = vec(truth.at("a_star")), tb = vec(truth.at("b_star"));
  for (Index i = 0; i < 3; ++i) {
    CHECK(std::abs(a(i) - ta(i)) < 3.0 * se_a(i));
    CHECK(std::abs(b(i) - tb(i)) < 3.0 * se_b(i));
  }
  CHECK(params.at("converged").get<bool>() == (code == 0));
  const json manifest = read_json(dir / "fit" / "manifest.json");
  CHECK(manifest.at("input").at("sha256").get<std::string>() == file_sha256(dir / "sim" / "series.csv"));
  CHECK(manifest.at("loglik").get<double>() == params.at("loglik").get<double>());
  CHECK(manifest.contains("seed"));

  // rerunning from the manifest's config gives the same estimates
  const int code2 = cli("fit --input \"" + (dir / "sim" / "series.csv").string() + "\" --out \"" +
                        (dir / "fit2").string() + "\" --bias-correct");
  CHECK(code2 == code);
  CHECK(slurp(dir / "fit" / "params.json") == slurp(dir / "fit2" / "params.json"));

  REQUIRE(cli("forecast --fit \"" + (dir / "fit").string() + "\" --horizon 10 --bias-correct") == 0);
  const SeriesData fc = load_series(dir / "fit" / "forecast.csv");
  const SeriesData fcc = load_series(dir / "fit" / "forecast_corrected.csv");
  REQUIRE(fc.matrices.size() == 10);
  CHECK(fc.dates.front() == "+1");
  for (std::size_t k = 0; k < 10; ++k)
    CHECK((fcc.matrices[k].diagonal().array() >= fc.matrices[k].diagonal().array() * (1 - 1e-11)).all());

  for (const char* f : {"fitted.csv", "fitted_corrected.csv", "forecast.csv", "forecast_corrected.csv"})
    check_reloads_spd(dir / "fit" / f);
  fs::remove_all(dir);
}

TEST_CASE("cli: one-step forecast on a three-observation file matches the hand recursion") {
  const fs::path dir = scratch("toy");
  spit(dir / "toy.csv",
       "n,2,x,y\n"
       "d1,1.0,0.2,0.5\n"
       "d2,1.4,0.1,0.6\n"
       "d3,0.8,0.3,0.7\n");
  const int code = cli("fit --input \"" + (dir / "toy.csv").string() + "\" --out \"" + (dir / "fit").string() + "\"");
  REQUIRE((code == 0 || code == 4));
  REQUIRE(cli("forecast --fit \"" + (dir / "fit").string() + "\" --horizon 1") == 0);

  const json params = read_json(dir / "fit" / "params.json");
  const VectorXd a = vec(params.at("a_star")), b = vec(params.at("b_star")), gbar = vec(params.at("gamma_bar"));
  const SeriesData data = load_series(dir / "toy.csv");
  VectorXd g[3];
  for (int t = 0; t < 3; ++t) g[t] = vech(mat_log(data.matrices[static_cast<std::size_t>(t)]));
  CHECK((gbar - (g[0] + g[1] + g[2]) / 3.0).cwiseAbs().maxCoeff() < 1e-12);
  VectorXd mu = gbar;
  for (int t = 1; t <= 3; ++t)
    for (Index i = 0; i < 3; ++i) mu(i) = (1 - a(i) - b(i)) * gbar(i) + a(i) * g[t - 1](i) + b(i) * mu(i);
  const MatrixXd expected = mat_exp(unvech(mu));
  const SeriesData fc = load_series(dir / "fit" / "forecast.csv");
  REQUIRE(fc.matrices.size() == 1);
  CHECK((fc.matrices[0] - expected).cwiseAbs().maxCoeff() < 1e-10 * expected.cwiseAbs().maxCoeff());
  fs::remove_all(dir);
}

TEST_CASE("cli: transform writes the log series") {
  const fs::path dir = scratch("transform");
  spit(dir / "in.csv", "n,2,x,y\nd1,2.0,0.5,1.0\nd2,1.0,0.0,1.0\n");
  REQUIRE(cli("transform --input \"" + (dir / "in.csv").string() + "\" --out \"" + (dir / "out").string() + "\"") == 0);
  const SeriesData g = load_series(dir / "out" / "gamma.csv", {false});
  REQUIRE(g.matrices.size() == 2);
  MatrixXd c(2, 2);
  c << 2.0, 0.5, 0.5, 1.0;
  CHECK((g.matrices[0] - mat_log(c)).cwiseAbs().maxCoeff() < 1e-11);
  CHECK(g.matrices[1].cwiseAbs().maxCoeff() < 1e-12);
  CHECK(read_json(dir / "out" / "manifest.json").at("outputs")[0] == "gamma.csv");
  fs::remove_all(dir);
}

TEST_CASE("cli: exit codes distinguish failure categories") {
  const fs::path dir = scratch("codes");
  spit(dir / "bad.csv", "n,2,x,y\nd1,1,2,1\nd2,1,0,1\n");
  spit(dir / "const.csv", "n,2,x,y\nd1,1,0.2,1\nd2,1,0.2,1\nd3,1,0.2,1\n");
  CHECK(cli("--help") == 0);
  CHECK(cli("") == 2);
  CHECK(cli("fit --out x") == 2);
  CHECK(cli("fit --input \"" + (dir / "bad.csv").string() + "\" --out \"" + (dir / "o1").string() + "\"") == 2);
  CHECK(cli("transform --input \"" + (dir / "bad.csv").string() + "\" --out \"" + (dir / "o2").string() + "\"") == 2);
  CHECK(cli("fit --input \"" + (dir / "const.csv").string() + "\" --out \"" + (dir / "o3").string() + "\"") == 3);

  write_truth(dir / "truth.json");
  CHECK(cli("simulate --n 3 --t 10 --seed 1 --params \"" + (dir / "truth.json").string() + "\" --out \"" +
            (dir / "o4").string() + "\"") == 2);
  REQUIRE(cli("simulate --n 2 --t 400 --seed 3 --params \"" + (dir / "truth.json").string() + "\" --out \"" +
              (dir / "sim").string() + "\"") == 0);
  // an outer-iteration cap of one cannot converge; diagnostics are still written
  CHECK(cli("fit --input \"" + (dir / "sim" / "series.csv").string() + "\" --out \"" + (dir / "o5").string() +
            "\" --max-outer 1") == 4);
  CHECK(fs::exists(dir / "o5" / "params.json"));
  CHECK(read_json(dir / "o5" / "manifest.json").at("converged").get<bool>() == false);
  CHECK(cli("forecast --fit \"" + (dir / "o5").string() + "\" --horizon 0") == 2);
  fs::remove_all(dir);
}
