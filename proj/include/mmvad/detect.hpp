#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "mmvad/lasso.hpp"
#include "mmvad/model.hpp"

namespace mmvad {

enum class Algorithm { Osga, Somp, Lasso, Tecc, Acie };

std::string_view to_string(Algorithm a) noexcept;
Algorithm algorithm_from_string(std::string_view name);

/// Numeric diagnostics (iterations, residuals) and boolean flags
/// (rank_deficient, all_zero_solution, ...) keyed by name.
struct Diagnostics {
  std::map<std::string, double> values;
  std::map<std::string, bool> flags;

  bool flag(const std::string& name) const {
    auto it = flags.find(name);
    return it != flags.end() && it->second;
  }
};

struct DetectionResult {
  IndexSet estimated_set;  // sorted, 0-based, size k
  Vector scores;           // length N
  Algorithm algorithm = Algorithm::Osga;
  Diagnostics diagnostics;
  /// Selection order (SOMP only): indices in the order they were picked.
  std::vector<int> selection_order;
};

/// Settings for MMV-LASSO. When lambda is unset it is chosen as
/// lambda_scale * ||phi^T y||_inf for the stacked system.
struct LassoDetectorConfig {
  std::optional<double> lambda;
  double lambda_scale = 0.1;
  int max_iters = 20000;
  double tol = 1e-6;
  bool acceleration = true;
};

/// Detector used on the residual measurements inside TECC and ACIE.
enum class InnerDetector { Osga, Somp, Lasso };

std::string_view to_string(InnerDetector d) noexcept;
InnerDetector inner_detector_from_string(std::string_view name);

struct DetectorConfig {
  Algorithm algorithm = Algorithm::Osga;
  InnerDetector inner = InnerDetector::Osga;
  int acie_iterations = 5;
  /// Re-estimate the anomaly set between ACIE iterations (off: literal
  /// algorithm, the set from the TECC initialization is kept).
  bool acie_reestimate = false;
  LassoDetectorConfig lasso;
};

/// Indices of the k largest scores, ties broken by the smaller index;
/// returned sorted ascending.
IndexSet top_k(const Vector& scores, int k);

/// OSGA: xi_n = (1/T) sum_t <y_t, phi_t(:, n)>^2, then top_k.
DetectionResult osga(const MeasurementSet& measurements, const SensingSequence& sensing, int k);

/// MMV-SOMP with k greedy selections. scores[n] is the selection statistic
/// at the time n was picked; for indices never picked it is the statistic
/// evaluated on the final residuals.
DetectionResult mmv_somp(const MeasurementSet& measurements, const SensingSequence& sensing, int k);

/// Per-iteration state exposed for verification.
struct SompTrace {
  std::vector<std::vector<Vector>> residuals;  // [iteration][t], iteration 0 = y
  std::vector<Matrix> bases;                   // [t] orthonormalized selected columns
};

DetectionResult mmv_somp(const MeasurementSet& measurements, const SensingSequence& sensing, int k,
                         SompTrace* trace);

DetectionResult mmv_lasso(const MeasurementSet& measurements, const SensingSequence& sensing, int k,
                          const LassoDetectorConfig& config = {});

struct CommonComponentEstimate {
  Vector x_hat_c;
  MeasurementSet residual_measurements;  // y_t - phi_t x_hat_c
};

/// TECC common-component estimate (1/(T M)) phi^T y and residuals.
CommonComponentEstimate estimate_common_tecc(const MeasurementSet& measurements,
                                             const SensingSequence& sensing);

/// Residualize against a given common component.
MeasurementSet subtract_common(const MeasurementSet& measurements, const SensingSequence& sensing,
                               const Vector& common);

DetectionResult run_inner(InnerDetector inner, const MeasurementSet& measurements,
                          const SensingSequence& sensing, int k, const LassoDetectorConfig& lasso);

/// Runs the inner detector on measurements with `common` removed; TECC with
/// the estimate replaced by an externally supplied one.
DetectionResult detect_with_common(const MeasurementSet& measurements, const SensingSequence& sensing,
                                   const Vector& common, int k, InnerDetector inner,
                                   const LassoDetectorConfig& lasso = {});

DetectionResult tecc(const MeasurementSet& measurements, const SensingSequence& sensing, int k,
                     InnerDetector inner = InnerDetector::Osga, const LassoDetectorConfig& lasso = {});

/// Observer for each ACIE iteration: (iteration, t, q_t, phi_t restricted to
/// the current set). Intended for tests.
using AcieObserver = std::function<void(int, int, const Matrix&, const Matrix&)>;

struct AcieOptions {
  int iterations = 5;
  InnerDetector inner = InnerDetector::Osga;
  bool reestimate = false;
  LassoDetectorConfig lasso;
  std::optional<IndexSet> initial_set;  // overrides the TECC initialization
  AcieObserver observer;
};

struct AcieResult {
  DetectionResult detection;
  Vector x_tilde_c;
};

AcieResult acie_detailed(const MeasurementSet& measurements, const SensingSequence& sensing, int k,
                         const AcieOptions& options);

DetectionResult acie(const MeasurementSet& measurements, const SensingSequence& sensing, int k,
                     int iterations = 5, InnerDetector inner = InnerDetector::Osga,
                     const LassoDetectorConfig& lasso = {});

DetectionResult run_detector(const DetectorConfig& config, const MeasurementSet& measurements,
                             const SensingSequence& sensing, int k);

/// Largest-drop estimate of the number of anomalies: sort scores
/// descending and return the 1-based position of the largest consecutive
/// gap (smallest position on ties).
int estimate_k(const Vector& scores);

}  // namespace mmvad
