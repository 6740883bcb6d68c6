#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mmvad/detect.hpp"
#include "mmvad/io.hpp"

namespace mmvad {

// ---------------------------------------------------------------- Jeffreys

/// Regularized incomplete beta I_x(a, b), continued fraction with the usual
/// symmetry split. a, b > 0, x in [0, 1].
double regularized_incomplete_beta(double a, double b, double x);

/// p-quantile of Beta(a, b) by bisection on I_x(a, b), absolute accuracy
/// better than 1e-10.
double beta_quantile(double a, double b, double p);

struct Interval {
  double low = 0.0;
  double high = 1.0;

  double width() const noexcept { return high - low; }
};

/// Equal-tailed Jeffreys interval for a binomial proportion: quantiles of
/// Beta(s + 1/2, n - s + 1/2), with low = 0 when s = 0 and high = 1 when
/// s = n. Throws DomainError unless 0 <= s <= n, n >= 1, 0 < confidence < 1.
Interval jeffreys_interval(int successes, int trials, double confidence);

// ------------------------------------------------------------------ theory

enum class TheoryCaseKind { Prevalent, Anomalous };

/// Parameters of the OSGA statistic expectation under JSM-2R with a
/// zero-mean prevalent distribution.
struct TheoryCase {
  int n = 0;
  int k = 0;
  int m = 0;
  double mu2 = 0.0;
  double sigma2_sq = 0.0;
  double sigma1_sq = 0.0;
  TheoryCaseKind kind = TheoryCaseKind::Prevalent;
};

/// E[xi_n] for a prevalent or anomalous index:
///   prevalent  M [K (mu2^2 + s2^2) + (M + 1 + N - K) s1^2]
///   anomalous  M [(M + 1 + K)(mu2^2 + s2^2) + (N - K) s1^2]
/// Throws DomainError on non-finite or negative-variance parameters.
double theory_xi_expectation(const TheoryCase& c);

/// Closed-form gap M (M + 1)(mu2^2 + s2^2 - s1^2) between the two cases.
double theory_xi_gap(int m, double mu2, double sigma2_sq, double sigma1_sq);

/// Whether the recovery hypothesis holds: JSM-2R needs
/// mu2^2 + s2^2 > s1^2, JSM-3R needs s2^2 > s1^2.
bool theory_separation_check(SignalModel model, double mu2, double sigma2_sq, double sigma1_sq);

// ------------------------------------------------------------------- grids

struct GridSpec {
  std::vector<int> m_values;
  std::vector<int> t_values;
  std::vector<int> k_values;
  /// Template; n_anomalies is replaced by each k, the set is drawn per trial.
  ProblemConfig problem;
  DetectorConfig detector;
  double confidence = 0.95;
  double target_width = 0.1;
  int min_trials = 20;
  int max_trials = 10000;
  std::uint64_t base_seed = 0;

  /// Throws ConfigError naming the first invalid field.
  void validate() const;
};

/// Grid config JSON. Value lists are arrays or {"from", "to", "step"}.
GridSpec grid_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const GridSpec& grid);
nlohmann::json to_json(const DetectorConfig& config);
DetectorConfig detector_config_from_json(const nlohmann::json& j);

struct CellResult {
  int m = 0;
  int t = 0;
  int k = 0;
  int successes = 0;
  int trials = 0;
  double rate = 0.0;
  double ci_low = 0.0;
  double ci_high = 1.0;
  bool hit_max_trials = false;
  double wall_time_seconds = 0.0;
  int detector_errors = 0;   // trials whose detector threw (counted as failures)
  int flagged_trials = 0;    // trials with any diagnostic flag raised
  std::string first_error;
};

struct TrialOutcome {
  bool success = false;
  bool error = false;
  bool flagged = false;
  std::string message;
};

/// One Monte-Carlo trial; `seed` is the trial's substream seed.
using TrialRunner = std::function<TrialOutcome(const GridSpec&, int m, int t, int k, std::uint64_t seed)>;

/// Default trial: draw the anomaly set, signals and sensing from a
/// SeededRng(seed), run the configured detector, compare sets exactly.
TrialOutcome run_trial(const GridSpec& grid, int m, int t, int k, std::uint64_t seed);

std::uint64_t trial_seed(std::uint64_t base_seed, int m, int t, int k, int trial);

/// Runs trials until the Jeffreys interval at grid.confidence is narrower
/// than grid.target_width with at least min_trials trials, or max_trials is
/// reached (hit_max_trials). Detector errors count as failures.
CellResult run_cell(const GridSpec& grid, int m, int t, int k, const TrialRunner& runner = run_trial);

struct GridRunOptions {
  int threads = 1;
  TrialRunner runner = run_trial;
  /// Cells already computed (e.g. from an interrupted run); reused as is.
  std::vector<CellResult> completed;
  /// Called once per newly computed cell, serialized.
  std::function<void(const CellResult&)> on_cell;
};

/// All (k, m, t) cells in grid order: k outermost, then m, then t.
/// Output does not depend on thread count or scheduling.
std::vector<CellResult> run_grid(const GridSpec& grid, const GridRunOptions& options = {});

/// Same cell under each anomalous/prevalent variance ratio (anomalous
/// variance = ratio * prevalent variance, everything else fixed).
std::vector<CellResult> run_variance_sweep(const GridSpec& grid, int m, int t, int k,
                                           const std::vector<double>& ratios,
                                           const TrialRunner& runner = run_trial);

// ----------------------------------------------------------------- results

inline constexpr const char* kResultsHeader =
    "algorithm,model,N,K,M,T,successes,trials,rate,ci_low,ci_high,hit_max_trials,seed";

struct ResultRow {
  std::string algorithm;
  std::string model;
  int n = 0;
  int k = 0;
  int m = 0;
  int t = 0;
  int successes = 0;
  int trials = 0;
  double rate = 0.0;
  double ci_low = 0.0;
  double ci_high = 1.0;
  bool hit_max_trials = false;
  std::uint64_t seed = 0;
};

ResultRow make_row(const GridSpec& grid, const CellResult& cell);
std::string format_row(const ResultRow& row);
ResultRow parse_row(const std::string& line);

void write_results_csv(std::ostream& os, const std::vector<ResultRow>& rows);
/// Throws IoError on a malformed file (wrong header, bad field).
std::vector<ResultRow> read_results_csv(std::istream& is);

/// Sidecar metadata: config echo, code version, RNG algorithm name.
nlohmann::json results_metadata(const GridSpec& grid);

/// Library version string recorded in outputs.
std::string_view code_version() noexcept;

}  // namespace mmvad
