#include "mmvad/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>
#include <vector>

#include "mmvad/errors.hpp"

namespace mmvad {
namespace {

using nlohmann::json;

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::vector<std::vector<std::string>> read_csv_rows(const std::filesystem::path& path,
                                                    std::vector<std::string>& header) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw IoError(path.string() + ": missing header row");
  header = split_csv_line(line);
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    rows.push_back(split_csv_line(line));
    if (rows.back().size() != header.size())
      throw IoError(path.string() + ": row " + std::to_string(rows.size()) + " has " +
                    std::to_string(rows.back().size()) + " fields, header has " +
                    std::to_string(header.size()));
  }
  return rows;
}

int parse_int(const std::string& s) {
  int v = 0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) throw IoError("not an integer: '" + s + "'");
  return v;
}

GaussianSpec gaussian_from_json(const json& j, const std::string& field) {
  if (!j.is_object()) throw ConfigError(field, "expected an object {mean, var}");
  GaussianSpec g;
  if (!j.contains("mean") || !j["mean"].is_number()) throw ConfigError(field + ".mean", "missing or not a number");
  if (!j.contains("var") || !j["var"].is_number()) throw ConfigError(field + ".var", "missing or not a number");
  g.mean = j["mean"].get<double>();
  g.variance = j["var"].get<double>();
  if (!std::isfinite(g.mean)) throw ConfigError(field + ".mean", "must be finite");
  if (!std::isfinite(g.variance) || g.variance < 0.0) throw ConfigError(field + ".var", "must be finite and >= 0");
  return g;
}

int positive_int(const json& j, const char* field) {
  if (!j.contains(field)) throw ConfigError(field, "missing");
  if (!j[field].is_number_integer()) throw ConfigError(field, "must be an integer");
  const auto v = j[field].get<long long>();
  if (v < 1 || v > 1'000'000'000) throw ConfigError(field, "must be a positive integer");
  return static_cast<int>(v);
}

}  // namespace

ProblemSpec ProblemConfig::instantiate(SeededRng& rng) const {
  IndexSet set = anomaly_set ? *anomaly_set : sample_anomaly_set(n_vars, n_anomalies, rng);
  return ProblemSpec(n_vars, std::move(set), prevalent, anomalous, model);
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw IoError("cannot format number");
  return std::string(buf, ptr);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) throw IoError("not a number: '" + s + "'");
  return v;
}

ProblemConfig problem_config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("problem", "expected a JSON object");
  ProblemConfig c;
  c.n_vars = positive_int(j, "N");
  c.n_anomalies = positive_int(j, "K");
  if (c.n_anomalies >= c.n_vars) throw ConfigError("K", "must be smaller than N");
  if (!j.contains("model") || !j["model"].is_string()) throw ConfigError("model", "missing or not a string");
  c.model = signal_model_from_string(j["model"].get<std::string>());
  if (!j.contains("prevalent")) throw ConfigError("prevalent", "missing");
  if (!j.contains("anomalous")) throw ConfigError("anomalous", "missing");
  c.prevalent = gaussian_from_json(j["prevalent"], "prevalent");
  c.anomalous = gaussian_from_json(j["anomalous"], "anomalous");
  if (j.contains("anomaly_set")) {
    const auto& a = j["anomaly_set"];
    if (!a.is_array()) throw ConfigError("anomaly_set", "expected an array of 1-based indices");
    IndexSet set;
    for (const auto& v : a) {
      if (!v.is_number_integer()) throw ConfigError("anomaly_set", "indices must be integers");
      const int idx = v.get<int>();
      if (idx < 1 || idx > c.n_vars) throw ConfigError("anomaly_set", "index out of range 1..N");
      set.push_back(idx - 1);
    }
    std::sort(set.begin(), set.end());
    if (std::adjacent_find(set.begin(), set.end()) != set.end())
      throw ConfigError("anomaly_set", "duplicate index");
    if (static_cast<int>(set.size()) != c.n_anomalies) throw ConfigError("anomaly_set", "size must equal K");
    c.anomaly_set = std::move(set);
  }
  return c;
}

json to_json(const ProblemConfig& c) {
  json j;
  j["N"] = c.n_vars;
  j["K"] = c.n_anomalies;
  j["model"] = std::string(to_string(c.model));
  j["prevalent"] = {{"mean", c.prevalent.mean}, {"var", c.prevalent.variance}};
  j["anomalous"] = {{"mean", c.anomalous.mean}, {"var", c.anomalous.variance}};
  if (c.anomaly_set) {
    json a = json::array();
    for (int i : *c.anomaly_set) a.push_back(i + 1);
    j["anomaly_set"] = a;
  }
  return j;
}

std::string to_one_based_list(const IndexSet& set, char sep) {
  std::string out;
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (i) out += sep;
    out += std::to_string(set[i] + 1);
  }
  return out;
}

void write_signals_csv(std::ostream& os, const SignalEnsemble& signals) {
  os << "index";
  for (int t = 0; t < signals.n_steps(); ++t) os << ",t" << (t + 1);
  os << '\n';
  for (int n = 0; n < signals.n_vars(); ++n) {
    os << (n + 1);
    for (int t = 0; t < signals.n_steps(); ++t) os << ',' << format_double(signals.values(n, t));
    os << '\n';
  }
}

void write_sensing_csv(std::ostream& os, const SensingSequence& sensing) {
  os << "t,m";
  for (int n = 0; n < sensing.n_vars(); ++n) os << ",c" << (n + 1);
  os << '\n';
  for (int t = 0; t < sensing.n_steps(); ++t) {
    const Matrix& phi = sensing.steps[static_cast<std::size_t>(t)];
    for (Eigen::Index m = 0; m < phi.rows(); ++m) {
      os << (t + 1) << ',' << (m + 1);
      for (Eigen::Index n = 0; n < phi.cols(); ++n) os << ',' << format_double(phi(m, n));
      os << '\n';
    }
  }
}

void write_measurements_csv(std::ostream& os, const MeasurementSet& measurements) {
  os << 't';
  for (int m = 0; m < measurements.m_per_step(); ++m) os << ",y" << (m + 1);
  os << '\n';
  for (int t = 0; t < measurements.n_steps(); ++t) {
    os << (t + 1);
    const Vector& y = measurements.steps[static_cast<std::size_t>(t)];
    for (Eigen::Index m = 0; m < y.size(); ++m) os << ',' << format_double(y(m));
    os << '\n';
  }
}

SensingSequence read_sensing_csv(const std::filesystem::path& path) {
  std::vector<std::string> header;
  const auto rows = read_csv_rows(path, header);
  if (header.size() < 3 || header[0] != "t" || header[1] != "m")
    throw IoError(path.string() + ": expected header t,m,c1..cN");
  const auto n = static_cast<Eigen::Index>(header.size() - 2);
  int t_count = 0;
  int m_count = 0;
  for (const auto& r : rows) {
    t_count = std::max(t_count, parse_int(r[0]));
    m_count = std::max(m_count, parse_int(r[1]));
  }
  if (t_count < 1 || m_count < 1 || static_cast<std::size_t>(t_count) * m_count != rows.size())
    throw IoError(path.string() + ": rows do not form T complete M x N blocks");
  SensingSequence out;
  out.steps.assign(static_cast<std::size_t>(t_count), Matrix::Constant(m_count, n, std::nan("")));
  for (const auto& r : rows) {
    const int t = parse_int(r[0]);
    const int m = parse_int(r[1]);
    if (t < 1 || m < 1) throw IoError(path.string() + ": indices are 1-based");
    for (Eigen::Index c = 0; c < n; ++c)
      out.steps[static_cast<std::size_t>(t - 1)](m - 1, c) = parse_double(r[static_cast<std::size_t>(c + 2)]);
  }
  for (const auto& phi : out.steps)
    if (phi.hasNaN()) throw IoError(path.string() + ": missing or duplicate (t, m) rows");
  return out;
}

MeasurementSet read_measurements_csv(const std::filesystem::path& path) {
  std::vector<std::string> header;
  const auto rows = read_csv_rows(path, header);
  if (header.size() < 2 || header[0] != "t") throw IoError(path.string() + ": expected header t,y1..yM");
  const auto m = static_cast<Eigen::Index>(header.size() - 1);
  MeasurementSet out;
  out.steps.resize(rows.size());
  std::vector<char> seen(rows.size(), 0);
  for (const auto& r : rows) {
    const int t = parse_int(r[0]);
    if (t < 1 || static_cast<std::size_t>(t) > rows.size() || seen[static_cast<std::size_t>(t - 1)])
      throw IoError(path.string() + ": time-steps must be 1..T, each once");
    seen[static_cast<std::size_t>(t - 1)] = 1;
    Vector y(m);
    for (Eigen::Index i = 0; i < m; ++i) y(i) = parse_double(r[static_cast<std::size_t>(i + 1)]);
    out.steps[static_cast<std::size_t>(t - 1)] = std::move(y);
  }
  return out;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << contents;
    if (!out.flush()) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename into " + path.string() + ": " + ec.message());
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.filename().string(), std::string("invalid JSON: ") + e.what());
  }
}

}  // namespace mmvad
