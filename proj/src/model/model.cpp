#include "mmvad/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mmvad/errors.hpp"

namespace mmvad {
namespace {

void check_gaussian(const GaussianSpec& g, const char* which) {
  if (!std::isfinite(g.mean) || !std::isfinite(g.variance))
    throw DomainError(std::string(which) + " distribution parameters must be finite");
  if (g.variance < 0.0)
    throw DomainError(std::string(which) + " variance must be nonnegative");
}

// Fills the ensemble column by column (t outer, n inner); this fixes the
// order in which the stream is consumed.
SignalEnsemble fill_gaussian(const ProblemSpec& spec, int n_steps, SeededRng& rng) {
  if (n_steps < 1) throw DimensionError("n_steps must be at least 1");
  const int n = spec.n_vars();
  std::vector<char> anomalous(static_cast<std::size_t>(n), 0);
  for (int i : spec.anomaly_set()) anomalous[static_cast<std::size_t>(i)] = 1;

  SignalEnsemble out{Matrix(n, n_steps)};
  for (int t = 0; t < n_steps; ++t) {
    for (int i = 0; i < n; ++i) {
      const GaussianSpec& g = anomalous[static_cast<std::size_t>(i)] ? spec.anomalous() : spec.prevalent();
      out.values(i, t) = rng.normal(g.mean, g.variance);
    }
  }
  return out;
}

}  // namespace

std::string_view to_string(SignalModel model) noexcept {
  return model == SignalModel::Jsm2r ? "jsm2r" : "jsm3r";
}

SignalModel signal_model_from_string(std::string_view name) {
  if (name == "jsm2r") return SignalModel::Jsm2r;
  if (name == "jsm3r") return SignalModel::Jsm3r;
  throw ConfigError("model", "expected \"jsm2r\" or \"jsm3r\", got \"" + std::string(name) + "\"");
}

ProblemSpec::ProblemSpec(int n_vars, IndexSet anomaly_set, GaussianSpec prevalent,
                         GaussianSpec anomalous, SignalModel model)
    : n_vars_(n_vars),
      anomaly_set_(std::move(anomaly_set)),
      prevalent_(prevalent),
      anomalous_(anomalous),
      model_(model) {
  const int k = static_cast<int>(anomaly_set_.size());
  if (k < 1 || k >= n_vars_)
    throw DimensionError("need 1 <= K < N (N=" + std::to_string(n_vars_) + ", K=" + std::to_string(k) + ")");
  for (std::size_t i = 0; i < anomaly_set_.size(); ++i) {
    if (anomaly_set_[i] < 0 || anomaly_set_[i] >= n_vars_)
      throw DimensionError("anomaly index out of range");
    if (i > 0 && anomaly_set_[i] <= anomaly_set_[i - 1])
      throw DimensionError("anomaly set must be sorted and duplicate-free");
  }
  check_gaussian(prevalent_, "prevalent");
  check_gaussian(anomalous_, "anomalous");
}

bool ProblemSpec::is_anomalous(int index) const {
  return std::binary_search(anomaly_set_.begin(), anomaly_set_.end(), index);
}

Vector ProblemSpec::expected_signal() const {
  Vector mean = Vector::Constant(n_vars_, prevalent_.mean);
  for (int i : anomaly_set_) mean(i) = anomalous_.mean;
  return mean;
}

IndexSet sample_anomaly_set(int n_vars, int n_anomalies, SeededRng& rng) {
  if (n_anomalies < 1 || n_anomalies >= n_vars)
    throw DimensionError("need 1 <= K < N (N=" + std::to_string(n_vars) + ", K=" +
                         std::to_string(n_anomalies) + ")");
  // Partial Fisher-Yates: the first K slots are a uniform K-subset.
  std::vector<int> pool(static_cast<std::size_t>(n_vars));
  for (int i = 0; i < n_vars; ++i) pool[static_cast<std::size_t>(i)] = i;
  for (int i = 0; i < n_anomalies; ++i) {
    const auto j = static_cast<std::size_t>(i) +
                   static_cast<std::size_t>(rng.uniform_index(static_cast<std::uint64_t>(n_vars - i)));
    std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
  }
  IndexSet out(pool.begin(), pool.begin() + n_anomalies);
  std::sort(out.begin(), out.end());
  return out;
}

SignalEnsemble generate_jsm2r(const ProblemSpec& spec, int n_steps, SeededRng& rng) {
  if (spec.model() != SignalModel::Jsm2r) throw ModelMismatch("generate_jsm2r requires a jsm2r spec");
  return fill_gaussian(spec, n_steps, rng);
}

SignalEnsemble generate_jsm3r(const ProblemSpec& spec, int n_steps, SeededRng& rng) {
  if (spec.model() != SignalModel::Jsm3r) throw ModelMismatch("generate_jsm3r requires a jsm3r spec");
  // mean + N(0, var) is exactly the common component plus the innovation.
  return fill_gaussian(spec, n_steps, rng);
}

SignalEnsemble generate_signals(const ProblemSpec& spec, int n_steps, SeededRng& rng) {
  return spec.model() == SignalModel::Jsm2r ? generate_jsm2r(spec, n_steps, rng)
                                           : generate_jsm3r(spec, n_steps, rng);
}

SensingSequence draw_sensing(int m_per_step, int n_vars, int n_steps, SeededRng& rng) {
  if (m_per_step < 1 || n_vars < 1 || n_steps < 1)
    throw DimensionError("sensing dimensions must all be at least 1");
  SensingSequence out;
  out.steps.reserve(static_cast<std::size_t>(n_steps));
  for (int t = 0; t < n_steps; ++t) {
    Matrix phi(m_per_step, n_vars);
    double* data = phi.data();
    for (Eigen::Index i = 0; i < phi.size(); ++i) data[i] = rng.normal();
    out.steps.push_back(std::move(phi));
  }
  return out;
}

double row_dot(const Matrix& a, Eigen::Index row, const Vector& x) {
  double acc = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j) acc += a(row, j) * x(j);
  return acc;
}

MeasurementSet measure(const SensingSequence& sensing, const SignalEnsemble& signals) {
  if (sensing.n_steps() != signals.n_steps())
    throw DimensionError("sensing has " + std::to_string(sensing.n_steps()) + " steps, signals have " +
                         std::to_string(signals.n_steps()));
  if (sensing.n_vars() != signals.n_vars())
    throw DimensionError("sensing column count does not match N");
  MeasurementSet out;
  out.steps.reserve(sensing.steps.size());
  for (int t = 0; t < sensing.n_steps(); ++t) {
    const Matrix& phi = sensing.steps[static_cast<std::size_t>(t)];
    const Vector x = signals.values.col(t);
    Vector y(phi.rows());
    for (Eigen::Index m = 0; m < phi.rows(); ++m) y(m) = row_dot(phi, m, x);
    out.steps.push_back(std::move(y));
  }
  return out;
}

StackedSystem stack(const SensingSequence& sensing, const MeasurementSet& measurements) {
  const int t_count = sensing.n_steps();
  if (t_count < 1) throw DimensionError("empty sensing sequence");
  if (measurements.n_steps() != t_count) throw DimensionError("measurement/sensing step count mismatch");
  const int m = sensing.m_per_step();
  const int n = sensing.n_vars();
  StackedSystem out{Matrix(static_cast<Eigen::Index>(m) * t_count, n),
                    Vector(static_cast<Eigen::Index>(m) * t_count)};
  for (int t = 0; t < t_count; ++t) {
    const Matrix& phi = sensing.steps[static_cast<std::size_t>(t)];
    const Vector& y = measurements.steps[static_cast<std::size_t>(t)];
    if (phi.rows() != m || phi.cols() != n || y.size() != m)
      throw DimensionError("inconsistent per-step dimensions at t=" + std::to_string(t + 1));
    out.phi.middleRows(static_cast<Eigen::Index>(t) * m, m) = phi;
    out.y.segment(static_cast<Eigen::Index>(t) * m, m) = y;
  }
  return out;
}

}  // namespace mmvad
