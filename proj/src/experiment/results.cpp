#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

#include "mmvad/errors.hpp"
#include "mmvad/experiment.hpp"
#include "mmvad/rng.hpp"

namespace mmvad {
namespace {

template <class T>
T parse_integer(const std::string& s, const char* what) {
  T v{};
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || s.empty())
    throw IoError(std::string("results: bad ") + what + " '" + s + "'");
  return v;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

std::string_view code_version() noexcept { return "mmvad 1.0.0"; }

ResultRow make_row(const GridSpec& grid, const CellResult& cell) {
  ResultRow r;
  r.algorithm = std::string(to_string(grid.detector.algorithm));
  r.model = std::string(to_string(grid.problem.model));
  r.n = grid.problem.n_vars;
  r.k = cell.k;
  r.m = cell.m;
  r.t = cell.t;
  r.successes = cell.successes;
  r.trials = cell.trials;
  r.rate = cell.rate;
  r.ci_low = cell.ci_low;
  r.ci_high = cell.ci_high;
  r.hit_max_trials = cell.hit_max_trials;
  r.seed = grid.base_seed;
  return r;
}

std::string format_row(const ResultRow& r) {
  std::string s;
  s += r.algorithm + ',' + r.model + ',';
  s += std::to_string(r.n) + ',' + std::to_string(r.k) + ',' + std::to_string(r.m) + ',' + std::to_string(r.t) + ',';
  s += std::to_string(r.successes) + ',' + std::to_string(r.trials) + ',';
  s += format_double(r.rate) + ',' + format_double(r.ci_low) + ',' + format_double(r.ci_high) + ',';
  s += r.hit_max_trials ? "true" : "false";
  s += ',' + std::to_string(r.seed);
  return s;
}

ResultRow parse_row(const std::string& line) {
  const auto f = split(line);
  if (f.size() != 13) throw IoError("results: expected 13 fields, got " + std::to_string(f.size()));
  ResultRow r;
  r.algorithm = f[0];
  r.model = f[1];
  r.n = parse_integer<int>(f[2], "N");
  r.k = parse_integer<int>(f[3], "K");
  r.m = parse_integer<int>(f[4], "M");
  r.t = parse_integer<int>(f[5], "T");
  r.successes = parse_integer<int>(f[6], "successes");
  r.trials = parse_integer<int>(f[7], "trials");
  r.rate = parse_double(f[8]);
  r.ci_low = parse_double(f[9]);
  r.ci_high = parse_double(f[10]);
  if (f[11] == "true")
    r.hit_max_trials = true;
  else if (f[11] == "false")
    r.hit_max_trials = false;
  else
    throw IoError("results: bad hit_max_trials '" + f[11] + "'");
  r.seed = parse_integer<std::uint64_t>(f[12], "seed");
  return r;
}

void write_results_csv(std::ostream& os, const std::vector<ResultRow>& rows) {
  os << kResultsHeader << '\n';
  for (const auto& r : rows) os << format_row(r) << '\n';
}

std::vector<ResultRow> read_results_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kResultsHeader) throw IoError("results: missing or wrong header");
  std::vector<ResultRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    rows.push_back(parse_row(line));
  }
  return rows;
}

nlohmann::json results_metadata(const GridSpec& grid) {
  return {{"config", to_json(grid)},
          {"code_version", std::string(code_version())},
          {"rng_algorithm", std::string(SeededRng::algorithm_name())},
          {"ci_method", "jeffreys"},
          {"note", "each cell stops once its Jeffreys interval is narrower than target_width "
                   "(or at max_trials, see hit_max_trials)"}};
}

}  // namespace mmvad
