#include "mmvad/lasso.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mmvad/linalg.hpp"

namespace mmvad::linalg {
namespace {

// Smooth part f(x) = 1/2 ||A x - b||^2 seen through an "image" u of x:
// u = G x in Gram form, u = A x in direct form. Images combine linearly,
// so the momentum point's image never needs a fresh product.
class GramForm {
 public:
  GramForm(const Matrix& gram, const Vector& atb, double btb) : g_(gram), c_(atb), btb_(btb) {}

  Eigen::Index dim() const { return c_.size(); }
  const Vector& atb() const { return c_; }
  double lipschitz() const { return spectral_norm_sq_gram(g_); }

  void image(const Vector& x, Vector& u) const { u.noalias() = g_.selfadjointView<Eigen::Lower>() * x; }
  void gradient(const Vector& /*x*/, const Vector& u, Vector& g) const { g = u - c_; }
  double smooth(const Vector& x, const Vector& u) const {
    return 0.5 * x.dot(u) - c_.dot(x) + 0.5 * btb_;
  }

 private:
  const Matrix& g_;
  const Vector& c_;
  double btb_;
};

class DirectForm {
 public:
  DirectForm(const Matrix& a, const Vector& b) : a_(a), b_(b), atb_(a.transpose() * b) {}

  Eigen::Index dim() const { return a_.cols(); }
  const Vector& atb() const { return atb_; }
  double lipschitz() const { return spectral_norm_sq(a_); }

  void image(const Vector& x, Vector& u) const { u.noalias() = a_ * x; }
  void gradient(const Vector& /*x*/, const Vector& u, Vector& g) const {
    g.noalias() = a_.transpose() * (u - b_);
  }
  double smooth(const Vector& /*x*/, const Vector& u) const { return 0.5 * (u - b_).squaredNorm(); }

 private:
  const Matrix& a_;
  const Vector& b_;
  Vector atb_;
};

template <class Form>
LassoSolution solve(const Form& form, const LassoConfig& config) {
  if (!(config.lambda >= 0.0) || !std::isfinite(config.lambda))
    throw DomainError("lasso: lambda must be finite and nonnegative");
  if (!(config.tol > 0.0)) throw DomainError("lasso: tol must be positive");
  if (config.max_iters < 1) throw DomainError("lasso: max_iters must be positive");

  const Eigen::Index n = form.dim();
  const double lambda = config.lambda;
  const double scale = 1.0 + form.atb().cwiseAbs().maxCoeff();
  const double threshold = config.tol * scale;

  const double lip = form.lipschitz();
  if (!(lip > 0.0)) throw DomainError("lasso: design matrix is zero");
  const double step = 1.0 / lip;

  auto objective = [&](const Vector& x, const Vector& u) {
    return form.smooth(x, u) + lambda * x.lpNorm<1>();
  };

  LassoSolution sol;
  Vector x = Vector::Zero(n);
  Vector ux = Vector::Zero(n);
  form.image(x, ux);
  double fx = objective(x, ux);

  Vector x_prev = x, ux_prev = ux;
  Vector y = x, uy = ux;
  Vector grad(n), z(n), uz(ux.size());
  double momentum = 1.0;
  bool accelerate = config.acceleration;

  auto record = [&](double f) {
    if (config.record_history) sol.objective_history.push_back(f);
  };
  record(fx);

  auto converged_at_x = [&]() {
    form.gradient(x, ux, grad);
    sol.kkt_residual = kkt_residual(grad, x, lambda);
    return sol.kkt_residual <= threshold;
  };

  bool converged = converged_at_x();
  int iter = 0;
  while (!converged && iter < config.max_iters) {
    ++iter;
    form.gradient(y, uy, grad);
    z = soft_threshold(y - step * grad, step * lambda);
    form.image(z, uz);
    double fz = objective(z, uz);

    if (fz > fx && accelerate) {
      // Function-value restart: drop momentum and take a plain step from x.
      momentum = 1.0;
      form.gradient(x, ux, grad);
      z = soft_threshold(x - step * grad, step * lambda);
      form.image(z, uz);
      fz = objective(z, uz);
    }
    if (z == x) break;  // exact fixed point, nothing left to gain
    // Near the optimum the objective stops resolving progress that the
    // iterate still makes. From then on function-value restarts are noise,
    // so the solver continues with plain proximal steps, which descend for
    // step 1/L without having to check the objective.
    const double slack = 8.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::fabs(fx));
    if (fz > fx - slack) accelerate = false;

    x_prev.swap(x);
    ux_prev.swap(ux);
    x = z;
    ux = uz;
    fx = fz;
    record(fx);

    if (accelerate) {
      const double next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
      const double beta = (momentum - 1.0) / next;
      momentum = next;
      y = x + beta * (x - x_prev);
      uy = ux + beta * (ux - ux_prev);
    } else {
      y = x;
      uy = ux;
    }
    converged = converged_at_x();
  }

  sol.coefficients = std::move(x);
  sol.iterations_used = iter;
  sol.final_objective = fx;
  sol.converged = converged;
  if (!converged) throw NonConvergence(std::move(sol));
  return sol;
}

}  // namespace

NonConvergence::NonConvergence(LassoSolution best)
    : Error("lasso did not reach the KKT tolerance after " + std::to_string(best.iterations_used) +
            " iterations (residual " + std::to_string(best.kkt_residual) + ")"),
      best_(std::move(best)) {}

double kkt_residual(const Vector& gradient, const Vector& x, double lambda) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double v = x(i) != 0.0 ? std::abs(gradient(i) + std::copysign(lambda, x(i)))
                                 : std::max(std::abs(gradient(i)) - lambda, 0.0);
    worst = std::max(worst, v);
  }
  return worst;
}

double lasso_objective(const Matrix& a, const Vector& b, const Vector& x, double lambda) {
  return 0.5 * (a * x - b).squaredNorm() + lambda * x.lpNorm<1>();
}

LassoSolution lasso(const Matrix& a, const Vector& b, const LassoConfig& config) {
  if (a.rows() != b.size()) throw DimensionError("lasso: A has " + std::to_string(a.rows()) +
                                                 " rows but b has length " + std::to_string(b.size()));
  if (a.rows() >= a.cols()) {
    Matrix gram = Matrix::Zero(a.cols(), a.cols());
    gram.selfadjointView<Eigen::Lower>().rankUpdate(a.transpose());
    const Vector atb = a.transpose() * b;
    return solve(GramForm(gram, atb, b.squaredNorm()), config);
  }
  return solve(DirectForm(a, b), config);
}

LassoSolution lasso_gram(const Matrix& gram, const Vector& atb, double btb, const LassoConfig& config) {
  if (gram.rows() != gram.cols() || gram.rows() != atb.size())
    throw DimensionError("lasso_gram: inconsistent Gram/right-hand-side dimensions");
  return solve(GramForm(gram, atb, btb), config);
}

}  // namespace mmvad::linalg
