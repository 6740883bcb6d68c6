#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "mmvad/rng.hpp"

namespace mmvad {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Sorted, duplicate-free, 0-based variable indices. Converted to 1-based
/// only at I/O boundaries.
using IndexSet = std::vector<int>;

struct GaussianSpec {
  double mean = 0.0;
  double variance = 0.0;

  double second_moment() const noexcept { return mean * mean + variance; }
};

enum class SignalModel { Jsm2r, Jsm3r };

std::string_view to_string(SignalModel model) noexcept;
SignalModel signal_model_from_string(std::string_view name);

/// Statistical problem: N variables, K of them anomalous.
class ProblemSpec {
 public:
  ProblemSpec(int n_vars, IndexSet anomaly_set, GaussianSpec prevalent,
              GaussianSpec anomalous, SignalModel model);

  int n_vars() const noexcept { return n_vars_; }
  int n_anomalies() const noexcept { return static_cast<int>(anomaly_set_.size()); }
  const IndexSet& anomaly_set() const noexcept { return anomaly_set_; }
  const GaussianSpec& prevalent() const noexcept { return prevalent_; }
  const GaussianSpec& anomalous() const noexcept { return anomalous_; }
  SignalModel model() const noexcept { return model_; }

  bool is_anomalous(int index) const;

  /// E[X]: per-variable mean under this spec.
  Vector expected_signal() const;

 private:
  int n_vars_;
  IndexSet anomaly_set_;
  GaussianSpec prevalent_;
  GaussianSpec anomalous_;
  SignalModel model_;
};

/// N x T realization matrix; column t is the signal at time-step t.
struct SignalEnsemble {
  Matrix values;

  int n_vars() const noexcept { return static_cast<int>(values.rows()); }
  int n_steps() const noexcept { return static_cast<int>(values.cols()); }
};

/// T sensing matrices, each M x N.
struct SensingSequence {
  std::vector<Matrix> steps;

  int n_steps() const noexcept { return static_cast<int>(steps.size()); }
  int m_per_step() const noexcept { return steps.empty() ? 0 : static_cast<int>(steps.front().rows()); }
  int n_vars() const noexcept { return steps.empty() ? 0 : static_cast<int>(steps.front().cols()); }
};

/// T measurement vectors, each of length M.
struct MeasurementSet {
  std::vector<Vector> steps;

  int n_steps() const noexcept { return static_cast<int>(steps.size()); }
  int m_per_step() const noexcept { return steps.empty() ? 0 : static_cast<int>(steps.front().size()); }
};

struct StackedSystem {
  Matrix phi;  // (M*T) x N
  Vector y;    // M*T
};

IndexSet sample_anomaly_set(int n_vars, int n_anomalies, SeededRng& rng);

SignalEnsemble generate_jsm2r(const ProblemSpec& spec, int n_steps, SeededRng& rng);

/// JSM-3R: x(n,t) = common mean + zero-mean Gaussian innovation.
SignalEnsemble generate_jsm3r(const ProblemSpec& spec, int n_steps, SeededRng& rng);

/// Dispatches on spec.model().
SignalEnsemble generate_signals(const ProblemSpec& spec, int n_steps, SeededRng& rng);

SensingSequence draw_sensing(int m_per_step, int n_vars, int n_steps, SeededRng& rng);

MeasurementSet measure(const SensingSequence& sensing, const SignalEnsemble& signals);

StackedSystem stack(const SensingSequence& sensing, const MeasurementSet& measurements);

/// Sequential left-to-right dot product of row `row` of `a` with `x`. Used
/// wherever two code paths must produce bit-identical measurements.
double row_dot(const Matrix& a, Eigen::Index row, const Vector& x);

}  // namespace mmvad
