#include "logbekk/series_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "logbekk/errors.hpp"
#include "logbekk/spd_transforms.hpp"

namespace logbekk {

namespace {

constexpr int kDefaultPrecision = 12;

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, pos == std::string::npos ? std::string::npos : pos - start)));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_number(const std::string& token, std::size_t line, std::size_t column) {
  double value = 0.0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (!token.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (token.empty() || ec != std::errc() || ptr != last)
    throw ParseError("cannot parse number '" + token + "'", line, column);
  return value;
}

}  // namespace

int output_precision() {
  if (const char* env = std::getenv("LOGBEKK_PRECISION")) {
    int digits = 0;
    const std::string_view s(env);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), digits);
    if (ec == std::errc() && ptr == s.data() + s.size() && digits >= 1 && digits <= 17) return digits;
    throw InputError("LOGBEKK_PRECISION must be an integer between 1 and 17");
  }
  return kDefaultPrecision;
}

std::vector<std::string> default_labels(Eigen::Index n) {
  std::vector<std::string> out;
  for (Eigen::Index i = 1; i <= n; ++i) out.push_back("v" + std::to_string(i));
  return out;
}

SeriesData parse_series(std::istream& in, const LoadOptions& opts) {
  SeriesData data;
  std::vector<RowDiagnostic> bad;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  Eigen::Index width = 0;

  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped.front() == '#') continue;
    const auto fields = split(stripped);

    if (!have_header) {
      if (fields.size() < 2 || fields[0] != "n") throw ParseError("header must start with 'n,<dim>'", line_no, 1);
      const double n = parse_number(fields[1], line_no, 2);
      if (n < 1 || n != std::floor(n)) throw ParseError("dimension must be a positive integer", line_no, 2);
      data.dim = static_cast<Eigen::Index>(n);
      if (fields.size() != static_cast<std::size_t>(data.dim) + 2)
        throw ParseError("header must list exactly " + std::to_string(data.dim) + " labels", line_no, fields.size());
      data.labels.assign(fields.begin() + 2, fields.end());
      width = vech_length(data.dim);
      have_header = true;
      continue;
    }

    if (fields.size() != static_cast<std::size_t>(width) + 1)
      throw ParseError("expected a date and " + std::to_string(width) + " values, got " +
                           std::to_string(fields.size()) + " fields",
                       line_no, std::min(fields.size(), static_cast<std::size_t>(width) + 1));
    Eigen::VectorXd v(width);
    for (Eigen::Index k = 0; k < width; ++k)
      v(k) = parse_number(fields[static_cast<std::size_t>(k) + 1], line_no, static_cast<std::size_t>(k) + 2);

    Eigen::MatrixXd m = unvech(v);
    if (!m.allFinite()) {
      bad.push_back({line_no, std::nan(""), "non-finite value"});
    } else if (opts.require_spd) {
      const double lo = min_eigenvalue(m);
      if (!(lo > 0.0)) {
        std::ostringstream msg;
        msg << "not positive definite (min eigenvalue " << lo << ")";
        bad.push_back({line_no, lo, msg.str()});
      }
    }
    data.dates.push_back(fields[0]);
    data.matrices.push_back(std::move(m));
  }

  if (!have_header) throw ParseError("missing header", line_no + 1, 1);
  if (!bad.empty()) throw ValidationError(std::move(bad));
  return data;
}

SeriesData load_series(const std::filesystem::path& path, const LoadOptions& opts) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open series file " + path.string());
  return parse_series(in, opts);
}

void write_series(std::ostream& out, const SeriesData& data, int precision) {
  if (data.labels.size() != static_cast<std::size_t>(data.dim) || data.dates.size() != data.matrices.size())
    throw DimensionMismatch("series labels / dates do not match the data");
  out << "n," << data.dim;
  for (const auto& l : data.labels) out << ',' << l;
  out << '\n';
  out << std::setprecision(precision);
  for (std::size_t t = 0; t < data.matrices.size(); ++t) {
    if (data.matrices[t].rows() != data.dim) throw DimensionMismatch("matrix dimension differs from header");
    const Eigen::VectorXd v = vech(data.matrices[t]);
    out << data.dates[t];
    for (Eigen::Index k = 0; k < v.size(); ++k) out << ',' << v(k);
    out << '\n';
  }
}

void save_series(const std::filesystem::path& path, const SeriesData& data, int precision) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  write_series(out, data, precision);
}

}  // namespace logbekk
