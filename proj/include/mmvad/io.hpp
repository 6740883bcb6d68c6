#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "mmvad/model.hpp"

namespace mmvad {

/// Problem template as written in config files: dimensions and
/// distributions. The anomaly set is normally drawn per trial; a fixed
/// set may be given (1-based in the file).
struct ProblemConfig {
  int n_vars = 100;
  int n_anomalies = 1;
  SignalModel model = SignalModel::Jsm2r;
  GaussianSpec prevalent{0.0, 1.0};
  GaussianSpec anomalous{7.0, 1.0};
  std::optional<IndexSet> anomaly_set;  // 0-based once parsed

  ProblemSpec instantiate(SeededRng& rng) const;
};

/// Shortest decimal string that parses back to exactly `v`.
std::string format_double(double v);

/// Strict parse of a full decimal string; throws IoError on junk.
double parse_double(const std::string& s);

ProblemConfig problem_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ProblemConfig& config);

std::string to_one_based_list(const IndexSet& set, char sep = ',');

// CSV dumps (row-major, header row). Debugging format only.
//   signals.csv       index,t1..tT      one row per variable
//   sensing.csv       t,m,c1..cN        one row per sensing-matrix row
//   measurements.csv  t,y1..yM          one row per time-step
void write_signals_csv(std::ostream& os, const SignalEnsemble& signals);
void write_sensing_csv(std::ostream& os, const SensingSequence& sensing);
void write_measurements_csv(std::ostream& os, const MeasurementSet& measurements);

SensingSequence read_sensing_csv(const std::filesystem::path& path);
MeasurementSet read_measurements_csv(const std::filesystem::path& path);

/// Writes `contents` to a temporary sibling and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace mmvad
