#pragma once

#include <vector>

#include <Eigen/Dense>

#include "mmvad/errors.hpp"

namespace mmvad::linalg {

struct LassoConfig {
  double lambda = 0.0;
  int max_iters = 20000;
  /// Stop once the KKT residual is at most tol * (1 + ||A^T b||_inf).
  double tol = 1e-6;
  /// Momentum (FISTA) with function-value restart; plain proximal gradient otherwise.
  bool acceleration = true;
  bool record_history = false;
};

struct LassoSolution {
  Eigen::VectorXd coefficients;
  int iterations_used = 0;
  double final_objective = 0.0;
  double kkt_residual = 0.0;
  bool converged = false;
  /// Objective after each accepted iterate (only with record_history).
  std::vector<double> objective_history;
};

/// Raised when max_iters is reached (or progress stalls) before the KKT
/// tolerance is met. Carries the best iterate.
class NonConvergence : public Error {
 public:
  explicit NonConvergence(LassoSolution best);

  const LassoSolution& best() const noexcept { return best_; }

 private:
  LassoSolution best_;
};

/// Minimizes 1/2 ||A x - b||^2 + lambda ||x||_1 by proximal gradient with
/// step 1 / (1.01 * ||A||^2). Works on the Gram matrix when A is tall.
LassoSolution lasso(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, const LassoConfig& config);

/// Same solver on precomputed normal-equation data: gram = A^T A (lower
/// triangle is read), atb = A^T b, btb = b^T b.
LassoSolution lasso_gram(const Eigen::MatrixXd& gram, const Eigen::VectorXd& atb, double btb,
                         const LassoConfig& config);

double lasso_objective(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& x,
                       double lambda);

/// Max violation of the LASSO optimality conditions given the smooth-part
/// gradient A^T (A x - b):
///   x_i != 0:  |g_i + lambda sign(x_i)|
///   x_i == 0:  max(|g_i| - lambda, 0)
double kkt_residual(const Eigen::VectorXd& gradient, const Eigen::VectorXd& x, double lambda);

}  // namespace mmvad::linalg
