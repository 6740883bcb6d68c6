// MMV-LASSO, TECC, ACIE and detector dispatch.

#include <algorithm>
#include <string>

#include "internal.hpp"
#include "mmvad/errors.hpp"
#include "mmvad/linalg.hpp"

namespace mmvad {

DetectionResult mmv_lasso(const MeasurementSet& measurements, const SensingSequence& sensing, int k,
                          const LassoDetectorConfig& config) {
  const auto dims = detail::check_inputs(measurements, sensing, k);
  const StackedSystem sys = stack(sensing, measurements);

  const double corr_max = (sys.phi.transpose() * sys.y).cwiseAbs().maxCoeff();
  linalg::LassoConfig lc;
  lc.lambda = config.lambda ? *config.lambda : config.lambda_scale * corr_max;
  lc.max_iters = config.max_iters;
  lc.tol = config.tol;
  lc.acceleration = config.acceleration;

  DetectionResult out;
  out.algorithm = Algorithm::Lasso;
  linalg::LassoSolution sol;
  bool converged = true;
  try {
    sol = linalg::lasso(sys.phi, sys.y, lc);
  } catch (const linalg::NonConvergence& e) {
    sol = e.best();
    converged = false;
  }

  out.scores = sol.coefficients.cwiseAbs();
  out.estimated_set = top_k(out.scores, k);
  const bool all_zero = (out.scores.array() == 0.0).all();
  out.diagnostics.values["lambda"] = lc.lambda;
  out.diagnostics.values["iterations"] = sol.iterations_used;
  out.diagnostics.values["objective"] = sol.final_objective;
  out.diagnostics.values["kkt_residual"] = sol.kkt_residual;
  out.diagnostics.values["nonzeros"] = static_cast<double>((out.scores.array() != 0.0).count());
  out.diagnostics.flags["non_convergence"] = !converged;
  out.diagnostics.flags["all_zero_solution"] = all_zero;
  (void)dims;
  return out;
}

MeasurementSet subtract_common(const MeasurementSet& measurements, const SensingSequence& sensing,
                               const Vector& common) {
  if (common.size() != sensing.n_vars()) throw DimensionError("common component has wrong length");
  MeasurementSet out;
  out.steps.reserve(measurements.steps.size());
  for (int t = 0; t < sensing.n_steps(); ++t) {
    const auto ts = static_cast<std::size_t>(t);
    Vector y = measurements.steps[ts];
    y.noalias() -= sensing.steps[ts] * common;
    out.steps.push_back(std::move(y));
  }
  return out;
}

CommonComponentEstimate estimate_common_tecc(const MeasurementSet& measurements,
                                             const SensingSequence& sensing) {
  const int t_count = sensing.n_steps();
  if (t_count < 1 || measurements.n_steps() != t_count) throw DimensionError("tecc: step count mismatch");
  // phi^T y of the stacked system, accumulated block by block.
  Vector xc = Vector::Zero(sensing.n_vars());
  for (int t = 0; t < t_count; ++t) {
    const auto ts = static_cast<std::size_t>(t);
    if (measurements.steps[ts].size() != sensing.steps[ts].rows()) throw DimensionError("tecc: measurement length");
    xc.noalias() += sensing.steps[ts].transpose() * measurements.steps[ts];
  }
  xc /= static_cast<double>(t_count) * static_cast<double>(sensing.m_per_step());
  CommonComponentEstimate out;
  out.residual_measurements = subtract_common(measurements, sensing, xc);
  out.x_hat_c = std::move(xc);
  return out;
}

DetectionResult run_inner(InnerDetector inner, const MeasurementSet& measurements,
                          const SensingSequence& sensing, int k, const LassoDetectorConfig& lasso) {
  switch (inner) {
    case InnerDetector::Osga: return osga(measurements, sensing, k);
    case InnerDetector::Somp: return mmv_somp(measurements, sensing, k);
    case InnerDetector::Lasso: return mmv_lasso(measurements, sensing, k, lasso);
  }
  throw ConfigError("inner", "unknown detector");
}

DetectionResult detect_with_common(const MeasurementSet& measurements, const SensingSequence& sensing,
                                   const Vector& common, int k, InnerDetector inner,
                                   const LassoDetectorConfig& lasso) {
  detail::check_inputs(measurements, sensing, k);
  return run_inner(inner, subtract_common(measurements, sensing, common), sensing, k, lasso);
}

DetectionResult tecc(const MeasurementSet& measurements, const SensingSequence& sensing, int k,
                     InnerDetector inner, const LassoDetectorConfig& lasso) {
  detail::check_inputs(measurements, sensing, k);
  auto est = estimate_common_tecc(measurements, sensing);
  DetectionResult out = run_inner(inner, est.residual_measurements, sensing, k, lasso);
  out.algorithm = Algorithm::Tecc;
  out.diagnostics.values["common_norm_inf"] = est.x_hat_c.cwiseAbs().maxCoeff();
  return out;
}

AcieResult acie_detailed(const MeasurementSet& measurements, const SensingSequence& sensing, int k,
                         const AcieOptions& options) {
  const auto dims = detail::check_inputs(measurements, sensing, k);
  if (k >= dims.m)
    throw DimensionError("acie needs k < M (k=" + std::to_string(k) + ", M=" + std::to_string(dims.m) + ")");
  if (options.iterations < 1) throw DimensionError("acie needs at least one iteration");

  IndexSet current = options.initial_set ? *options.initial_set
                                         : tecc(measurements, sensing, k, options.inner, options.lasso).estimated_set;
  if (static_cast<int>(current.size()) != k) throw DimensionError("acie: initial set must have k indices");

  Vector x_tilde;
  IndexSet solved_for;  // set used for the cached x_tilde
  std::vector<Matrix> q_cache(static_cast<std::size_t>(dims.t));
  std::vector<Matrix> restricted_cache(static_cast<std::size_t>(dims.t));
  bool complement_deficient = false;
  bool ls_deficient = false;
  int recomputations = 0;
  double ls_rank = 0.0;

  for (int iter = 1; iter <= options.iterations; ++iter) {
    // With the set unchanged the update below reproduces the previous one
    // exactly, so it is only recomputed when the set moves.
    if (iter == 1 || current != solved_for) {
      ++recomputations;
      std::vector<char> in_set(static_cast<std::size_t>(dims.n), 0);
      for (int i : current) in_set[static_cast<std::size_t>(i)] = 1;
      std::vector<int> others;
      for (int n = 0; n < dims.n; ++n)
        if (!in_set[static_cast<std::size_t>(n)]) others.push_back(n);

      Eigen::Index rows = 0;
      for (int t = 0; t < dims.t; ++t) {
        const auto ts = static_cast<std::size_t>(t);
        const Matrix& phi = sensing.steps[ts];
        Matrix restricted(dims.m, k);
        for (int j = 0; j < k; ++j) restricted.col(j) = phi.col(current[static_cast<std::size_t>(j)]);
        auto comp = linalg::orthonormal_complement(restricted);
        complement_deficient = complement_deficient || comp.rank_deficient;
        rows += comp.q.cols();
        q_cache[ts] = std::move(comp.q);
        restricted_cache[ts] = std::move(restricted);
      }

      // Stack phi~_t = q_t^T phi_t and y~_t = q_t^T y_t vertically. Columns
      // of phi~ on the current set vanish by construction, so the system is
      // solved over the remaining columns and x~ is zero on the set (the
      // minimum-norm solution of the full system).
      Matrix phi_tilde(rows, static_cast<Eigen::Index>(others.size()));
      Vector y_tilde(rows);
      Eigen::Index offset = 0;
      for (int t = 0; t < dims.t; ++t) {
        const auto ts = static_cast<std::size_t>(t);
        const Matrix& q = q_cache[ts];
        const Matrix& phi = sensing.steps[ts];
        const Matrix projected = q.transpose() * phi;
        for (std::size_t c = 0; c < others.size(); ++c)
          phi_tilde.col(static_cast<Eigen::Index>(c)).segment(offset, q.cols()) = projected.col(others[c]);
        y_tilde.segment(offset, q.cols()).noalias() = q.transpose() * measurements.steps[ts];
        offset += q.cols();
      }
      const auto ls = linalg::least_squares(phi_tilde, y_tilde);
      ls_deficient = ls_deficient || ls.rank_deficient;
      ls_rank = ls.rank;
      x_tilde = Vector::Zero(dims.n);
      for (std::size_t c = 0; c < others.size(); ++c) x_tilde(others[c]) = ls.x(static_cast<Eigen::Index>(c));
      solved_for = current;
    }

    if (options.observer)
      for (int t = 0; t < dims.t; ++t)
        options.observer(iter, t, q_cache[static_cast<std::size_t>(t)], restricted_cache[static_cast<std::size_t>(t)]);

    if (options.reestimate && iter < options.iterations) {
      current = run_inner(options.inner, subtract_common(measurements, sensing, x_tilde), sensing, k,
                          options.lasso)
                    .estimated_set;
    }
  }

  AcieResult out;
  out.detection = run_inner(options.inner, subtract_common(measurements, sensing, x_tilde), sensing, k,
                            options.lasso);
  out.detection.algorithm = Algorithm::Acie;
  out.detection.diagnostics.values["iterations"] = options.iterations;
  out.detection.diagnostics.values["recomputations"] = recomputations;
  out.detection.diagnostics.values["ls_rank"] = ls_rank;
  out.detection.diagnostics.flags["rank_deficient"] = complement_deficient || ls_deficient;
  out.detection.diagnostics.flags["complement_rank_deficient"] = complement_deficient;
  out.x_tilde_c = std::move(x_tilde);
  return out;
}

DetectionResult acie(const MeasurementSet& measurements, const SensingSequence& sensing, int k, int iterations,
                     InnerDetector inner, const LassoDetectorConfig& lasso) {
  AcieOptions opts;
  opts.iterations = iterations;
  opts.inner = inner;
  opts.lasso = lasso;
  return acie_detailed(measurements, sensing, k, opts).detection;
}

DetectionResult run_detector(const DetectorConfig& config, const MeasurementSet& measurements,
                             const SensingSequence& sensing, int k) {
  switch (config.algorithm) {
    case Algorithm::Osga: return osga(measurements, sensing, k);
    case Algorithm::Somp: return mmv_somp(measurements, sensing, k);
    case Algorithm::Lasso: return mmv_lasso(measurements, sensing, k, config.lasso);
    case Algorithm::Tecc: return tecc(measurements, sensing, k, config.inner, config.lasso);
    case Algorithm::Acie: {
      AcieOptions opts;
      opts.iterations = config.acie_iterations;
      opts.inner = config.inner;
      opts.reestimate = config.acie_reestimate;
      opts.lasso = config.lasso;
      return acie_detailed(measurements, sensing, k, opts).detection;
    }
  }
  throw ConfigError("algorithm", "unknown algorithm");
}

}  // namespace mmvad
