// OSGA and MMV-SOMP, plus index selection helpers.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "internal.hpp"
#include "mmvad/errors.hpp"
#include "mmvad/linalg.hpp"

namespace mmvad {
namespace detail {

Dims check_inputs(const MeasurementSet& measurements, const SensingSequence& sensing, int k) {
  const int t_count = sensing.n_steps();
  if (t_count < 1) throw DimensionError("no time-steps");
  if (measurements.n_steps() != t_count)
    throw DimensionError("measurements have " + std::to_string(measurements.n_steps()) +
                         " steps, sensing has " + std::to_string(t_count));
  const int m = sensing.m_per_step();
  const int n = sensing.n_vars();
  if (m < 1 || n < 1) throw DimensionError("empty sensing matrices");
  for (int t = 0; t < t_count; ++t) {
    const auto& phi = sensing.steps[static_cast<std::size_t>(t)];
    const auto& y = measurements.steps[static_cast<std::size_t>(t)];
    if (phi.rows() != m || phi.cols() != n)
      throw DimensionError("sensing matrix " + std::to_string(t + 1) + " is not " + std::to_string(m) + "x" +
                           std::to_string(n));
    if (y.size() != m) throw DimensionError("measurement " + std::to_string(t + 1) + " has wrong length");
  }
  if (k < 1 || k >= n)
    throw DimensionError("need 1 <= k < N (k=" + std::to_string(k) + ", N=" + std::to_string(n) + ")");
  return {m, n, t_count};
}

}  // namespace detail

std::string_view to_string(Algorithm a) noexcept {
  switch (a) {
    case Algorithm::Osga: return "osga";
    case Algorithm::Somp: return "somp";
    case Algorithm::Lasso: return "lasso";
    case Algorithm::Tecc: return "tecc";
    case Algorithm::Acie: return "acie";
  }
  return "?";
}

Algorithm algorithm_from_string(std::string_view name) {
  for (auto a : {Algorithm::Osga, Algorithm::Somp, Algorithm::Lasso, Algorithm::Tecc, Algorithm::Acie})
    if (to_string(a) == name) return a;
  throw ConfigError("algorithm", "expected osga|somp|lasso|tecc|acie, got \"" + std::string(name) + "\"");
}

std::string_view to_string(InnerDetector d) noexcept {
  switch (d) {
    case InnerDetector::Osga: return "osga";
    case InnerDetector::Somp: return "somp";
    case InnerDetector::Lasso: return "lasso";
  }
  return "?";
}

InnerDetector inner_detector_from_string(std::string_view name) {
  for (auto d : {InnerDetector::Osga, InnerDetector::Somp, InnerDetector::Lasso})
    if (to_string(d) == name) return d;
  throw ConfigError("inner", "expected osga|somp|lasso, got \"" + std::string(name) + "\"");
}

IndexSet top_k(const Vector& scores, int k) {
  const auto n = static_cast<int>(scores.size());
  if (k < 0 || k > n) throw DimensionError("top_k: k=" + std::to_string(k) + " exceeds " + std::to_string(n));
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::partial_sort(order.begin(), order.begin() + k, order.end(), [&](int a, int b) {
    if (scores(a) != scores(b)) return scores(a) > scores(b);
    return a < b;
  });
  IndexSet out(order.begin(), order.begin() + k);
  std::sort(out.begin(), out.end());
  return out;
}

int estimate_k(const Vector& scores) {
  if (scores.size() < 2) throw DimensionError("estimate_k needs at least two scores");
  std::vector<double> sorted(scores.data(), scores.data() + scores.size());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  if (sorted.front() == sorted.back()) throw DegenerateScores("all scores are equal");
  int best = 1;
  double best_gap = -1.0;
  for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
    const double gap = sorted[i] - sorted[i + 1];
    if (gap > best_gap) {
      best_gap = gap;
      best = static_cast<int>(i) + 1;
    }
  }
  return best;
}

DetectionResult osga(const MeasurementSet& measurements, const SensingSequence& sensing, int k) {
  const auto dims = detail::check_inputs(measurements, sensing, k);
  Vector xi = Vector::Zero(dims.n);
  Vector corr(dims.n);
  for (int t = 0; t < dims.t; ++t) {
    corr.noalias() = sensing.steps[static_cast<std::size_t>(t)].transpose() *
                     measurements.steps[static_cast<std::size_t>(t)];
    xi += corr.cwiseAbs2();
  }
  xi /= static_cast<double>(dims.t);

  DetectionResult out;
  out.algorithm = Algorithm::Osga;
  out.estimated_set = top_k(xi, k);
  out.scores = std::move(xi);
  return out;
}

DetectionResult mmv_somp(const MeasurementSet& measurements, const SensingSequence& sensing, int k) {
  return mmv_somp(measurements, sensing, k, nullptr);
}

DetectionResult mmv_somp(const MeasurementSet& measurements, const SensingSequence& sensing, int k,
                         SompTrace* trace) {
  const auto dims = detail::check_inputs(measurements, sensing, k);
  if (k > dims.m)
    throw DimensionError("somp needs k <= M (k=" + std::to_string(k) + ", M=" + std::to_string(dims.m) + ")");

  // Column norms of the original sensing matrices; the selection statistic
  // divides by these in every iteration.
  Matrix inv_norms(dims.n, dims.t);
  std::vector<char> usable(static_cast<std::size_t>(dims.n), 0);
  bool degenerate = false;
  for (int t = 0; t < dims.t; ++t) {
    const Matrix& phi = sensing.steps[static_cast<std::size_t>(t)];
    for (int n = 0; n < dims.n; ++n) {
      const double norm = phi.col(n).norm();
      if (norm > 0.0) {
        inv_norms(n, t) = 1.0 / norm;
        usable[static_cast<std::size_t>(n)] = 1;
      } else {
        inv_norms(n, t) = 0.0;  // zero column: its term is skipped
        degenerate = true;
      }
    }
  }

  std::vector<Vector> residual(measurements.steps.begin(), measurements.steps.end());
  std::vector<Matrix> basis(static_cast<std::size_t>(dims.t), Matrix(dims.m, k));
  std::vector<Eigen::Index> basis_size(static_cast<std::size_t>(dims.t), 0);
  std::vector<char> picked(static_cast<std::size_t>(dims.n), 0);

  if (trace) {
    trace->residuals.clear();
    trace->residuals.push_back(residual);
  }

  Vector stat(dims.n);
  Vector corr(dims.n);
  auto selection_statistic = [&]() {
    stat.setZero();
    for (int t = 0; t < dims.t; ++t) {
      corr.noalias() = sensing.steps[static_cast<std::size_t>(t)].transpose() * residual[static_cast<std::size_t>(t)];
      stat += corr.cwiseAbs().cwiseProduct(inv_norms.col(t));
    }
  };

  DetectionResult out;
  out.algorithm = Algorithm::Somp;
  out.scores = Vector::Zero(dims.n);
  int dependent_picks = 0;

  for (int iter = 0; iter < k; ++iter) {
    selection_statistic();
    int best = -1;
    for (int n = 0; n < dims.n; ++n) {
      if (picked[static_cast<std::size_t>(n)] || !usable[static_cast<std::size_t>(n)]) continue;
      if (best < 0 || stat(n) > stat(best)) best = n;
    }
    if (best < 0) throw DimensionError("somp: no selectable columns left");
    picked[static_cast<std::size_t>(best)] = 1;
    out.scores(best) = stat(best);
    out.selection_order.push_back(best);

    for (int t = 0; t < dims.t; ++t) {
      const auto ts = static_cast<std::size_t>(t);
      Vector gamma = sensing.steps[ts].col(best);
      const double original = gamma.norm();
      const double remaining = linalg::project_out(basis[ts], basis_size[ts], gamma);
      if (original == 0.0 || remaining <= linalg::kDropTolerance * original) {
        ++dependent_picks;
        continue;
      }
      gamma /= remaining;
      basis[ts].col(basis_size[ts]++) = gamma;
      residual[ts] -= gamma.dot(residual[ts]) * gamma;
    }
    if (trace) trace->residuals.push_back(residual);
  }

  selection_statistic();
  for (int n = 0; n < dims.n; ++n)
    if (!picked[static_cast<std::size_t>(n)]) out.scores(n) = usable[static_cast<std::size_t>(n)] ? stat(n) : 0.0;

  out.estimated_set.assign(out.selection_order.begin(), out.selection_order.end());
  std::sort(out.estimated_set.begin(), out.estimated_set.end());

  double residual_sq = 0.0;
  for (const auto& r : residual) residual_sq += r.squaredNorm();
  out.diagnostics.values["iterations"] = k;
  out.diagnostics.values["final_residual_norm"] = std::sqrt(residual_sq);
  out.diagnostics.flags["degenerate_column"] = degenerate;
  out.diagnostics.flags["dependent_selection"] = dependent_picks > 0;

  if (trace) {
    trace->bases.clear();
    for (int t = 0; t < dims.t; ++t)
      trace->bases.push_back(basis[static_cast<std::size_t>(t)].leftCols(basis_size[static_cast<std::size_t>(t)]));
  }
  return out;
}

}  // namespace mmvad
