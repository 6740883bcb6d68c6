#include <doctest.h>

#include <cmath>

#include "../oracles/oracles.hpp"
#include "mmvad/lasso.hpp"
#include "mmvad/linalg.hpp"

using namespace mmvad;
using namespace mmvad::linalg;

namespace {

double scalar_soft(double v, double tau) {
  if (v > tau) return v - tau;
  if (v < -tau) return v + tau;
  return 0.0;
}

Matrix gaussian(std::uint64_t seed, long r, long c) {
  SeededRng rng(seed);
  return oracle::random_matrix(rng, r, c);
}

}  // namespace

TEST_CASE("soft_threshold: definition, identity and entrywise oracle") {
  Vector v(3);
  v << 3, -1, 0.5;
  const Vector out = soft_threshold(v, 1.0);
  CHECK(out(0) == 2.0);
  CHECK(out(1) == 0.0);
  CHECK(out(2) == 0.0);
  CHECK(soft_threshold(v, 0.0) == v);

  SeededRng r(1);
  for (int rep = 0; rep < 50; ++rep) {
    const Vector x = oracle::random_vector(r, 20) * 3.0;
    const double tau = std::fabs(r.normal());
    const Vector y = soft_threshold(x, tau);
    for (int i = 0; i < 20; ++i) CHECK(y(i) == scalar_soft(x(i), tau));
  }
}

TEST_CASE("mgs_orthonormalize: basis, dependence, random full rank") {
  const Matrix e = Matrix::Identity(4, 2);
  const auto b = mgs_orthonormalize(e);
  CHECK(b.q.isApprox(e, 0.0));
  CHECK(b.dropped.empty());

  Matrix dep(3, 2);
  dep.col(0) << 1, 2, 2;
  dep.col(1) = 2.0 * dep.col(0);
  const auto d = mgs_orthonormalize(dep);
  REQUIRE(d.q.cols() == 1);
  CHECK((d.q.col(0) - dep.col(0) / 3.0).norm() < 1e-15);
  CHECK(d.dropped == std::vector<int>{1});
  CHECK(d.kept == std::vector<int>{0});

  const Matrix a = gaussian(2, 10, 6);
  const auto o = mgs_orthonormalize(a);
  REQUIRE(o.q.cols() == 6);
  const Matrix g = o.q.transpose() * o.q;
  CHECK((g - Matrix::Identity(6, 6)).cwiseAbs().maxCoeff() <= 1e-10);
  for (int j = 0; j < 6; ++j) CHECK(std::fabs(o.q.col(j).norm() - 1.0) <= 1e-12);
  // same span: projecting a onto q reproduces a
  CHECK((o.q * (o.q.transpose() * a) - a).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("mgs_orthonormalize: nearly dependent columns stay orthogonal") {
  // Columns that differ only by 1e-8 perturbations: classical Gram-Schmidt
  // loses orthogonality here; MGS with reorthogonalization must not.
  SeededRng r(3);
  Matrix a(50, 5);
  const Vector base = oracle::random_vector(r, 50);
  for (int j = 0; j < 5; ++j) a.col(j) = base + 1e-8 * oracle::random_vector(r, 50);
  const auto o = mgs_orthonormalize(a);
  const Matrix g = o.q.transpose() * o.q;
  CHECK((g - Matrix::Identity(o.q.cols(), o.q.cols())).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("orthonormal_complement: identity columns, 2-D geometry, random") {
  const auto c = orthonormal_complement(Matrix::Identity(5, 2));
  REQUIRE(c.q.cols() == 3);
  CHECK(c.rank == 2);
  CHECK_FALSE(c.rank_deficient);
  CHECK(c.q.topRows(2).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((c.q.transpose() * c.q - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-14);

  Matrix a(2, 1);
  a << 1, 1;
  const auto c2 = orthonormal_complement(a);
  REQUIRE(c2.q.cols() == 1);
  CHECK(std::fabs(std::fabs(c2.q(0, 0)) - 1.0 / std::sqrt(2.0)) < 1e-15);
  CHECK(std::fabs(c2.q(0, 0) + c2.q(1, 0)) < 1e-15);

  for (std::uint64_t s = 0; s < 20; ++s) {
    const Matrix r = gaussian(100 + s, 8, 3);
    const auto cr = orthonormal_complement(r);
    REQUIRE(cr.q.cols() == 5);
    CHECK((cr.q.transpose() * r).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((cr.q.transpose() * cr.q - Matrix::Identity(5, 5)).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("orthonormal_complement: rank deficiency and k >= M") {
  Matrix a(4, 2);
  a.col(0) << 1, 2, 3, 4;
  a.col(1) = -a.col(0);
  const auto c = orthonormal_complement(a);
  CHECK(c.rank == 1);
  CHECK(c.rank_deficient);
  CHECK(c.q.cols() == 3);
  CHECK((c.q.transpose() * a).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(orthonormal_complement(Matrix::Ones(3, 3)), DimensionError);
}

TEST_CASE("least_squares: identity, mean, normal-equation residual, minimality") {
  Vector b(3);
  b << 1, -2, 3;
  CHECK((least_squares(Matrix::Identity(3, 3), b).x - b).norm() < 1e-15);

  Matrix ones(2, 1);
  ones << 1, 1;
  Vector b2(2);
  b2 << 0, 2;
  CHECK(std::fabs(least_squares(ones, b2).x(0) - 1.0) < 1e-15);

  SeededRng r(5);
  for (int rep = 0; rep < 30; ++rep) {
    const Matrix a = oracle::random_matrix(r, 12, 5);
    const Vector y = oracle::random_vector(r, 12);
    const auto sol = least_squares(a, y);
    CHECK_FALSE(sol.rank_deficient);
    const double scale = a.norm() * y.norm();
    CHECK((a.transpose() * (a * sol.x - y)).cwiseAbs().maxCoeff() <= 1e-8 * scale);
    const double base = (a * sol.x - y).norm();
    for (int k = 0; k < 10; ++k) {
      const Vector delta = oracle::random_vector(r, 5) * 1e-3;
      CHECK((a * (sol.x + delta) - y).norm() >= base - 1e-8);
    }
    // matches Eigen's QR solution
    const Vector ref = a.colPivHouseholderQr().solve(y);
    CHECK((sol.x - ref).norm() <= 1e-10 * (1.0 + ref.norm()));
  }
}

TEST_CASE("least_squares: rank-deficient and underdetermined give the minimum-norm solution") {
  SeededRng r(6);
  Matrix a = oracle::random_matrix(r, 10, 4);
  a.col(3) = a.col(0) + 2.0 * a.col(1);  // rank 3
  const Vector y = oracle::random_vector(r, 10);
  const auto sol = least_squares(a, y);
  CHECK(sol.rank == 3);
  CHECK(sol.rank_deficient);
  const Vector ref = a.completeOrthogonalDecomposition().pseudoInverse() * y;
  CHECK((sol.x - ref).norm() < 1e-10);

  const Matrix wide = oracle::random_matrix(r, 3, 6);
  const Vector yw = oracle::random_vector(r, 3);
  const auto sw = least_squares(wide, yw);
  CHECK(sw.rank_deficient);
  CHECK((wide * sw.x - yw).norm() < 1e-12);
  const Vector refw = wide.completeOrthogonalDecomposition().pseudoInverse() * yw;
  CHECK((sw.x - refw).norm() < 1e-10);

  const auto zero = least_squares(Matrix::Zero(4, 2), Vector::Ones(4));
  CHECK(zero.rank == 0);
  CHECK(zero.x.isZero(0));
}

TEST_CASE("spectral_norm_sq: closed forms and dense eigensolver oracle") {
  CHECK(std::fabs(spectral_norm_sq(3.0 * Matrix::Identity(4, 4)) - 9.0 * 1.01) < 1e-9);
  Matrix d = Matrix::Zero(3, 3);
  d.diagonal() << 1, 2, 5;
  CHECK(std::fabs(spectral_norm_sq(d) / (25.0 * 1.01) - 1.0) < 1e-3);

  for (std::uint64_t s = 0; s < 20; ++s) {
    const Matrix a = gaussian(200 + s, 10, 10);
    const double ref = Eigen::SelfAdjointEigenSolver<Matrix>(a.transpose() * a).eigenvalues().maxCoeff();
    CHECK(std::fabs(spectral_norm_sq(a) / kSpectralSafety / ref - 1.0) < 1e-3);
    CHECK(std::fabs(spectral_norm_sq_gram(a.transpose() * a) / kSpectralSafety / ref - 1.0) < 1e-3);
  }
}

TEST_CASE("lasso: closed forms") {
  Vector b(3);
  b << 3, -1, 0.5;
  LassoConfig cfg;
  cfg.lambda = 1.0;
  cfg.tol = 1e-10;
  const auto sol = lasso(Matrix::Identity(3, 3), b, cfg);
  CHECK(sol.converged);
  CHECK(std::fabs(sol.coefficients(0) - 2.0) < 1e-6);
  CHECK(sol.coefficients(1) == 0.0);
  CHECK(sol.coefficients(2) == 0.0);

  SeededRng r(7);
  Matrix a = oracle::random_matrix(r, 8, 8) + 6.0 * Matrix::Identity(8, 8);
  const Vector y = oracle::random_vector(r, 8);
  cfg.lambda = 0.0;
  cfg.tol = 1e-12;
  cfg.max_iters = 200000;
  const auto ls = lasso(a, y, cfg);
  const Vector exact = a.partialPivLu().solve(y);
  CHECK((ls.coefficients - exact).norm() / exact.norm() < 1e-6);
}

TEST_CASE("lasso: random instance matches coordinate descent and subgradient oracles") {
  SeededRng r(8);
  const Matrix a = oracle::random_matrix(r, 20, 10);
  const Vector y = oracle::random_vector(r, 20);
  LassoConfig cfg;
  cfg.lambda = 0.5;
  cfg.tol = 1e-10;
  cfg.max_iters = 100000;
  const auto sol = lasso(a, y, cfg);
  const double f = lasso_objective(a, y, sol.coefficients, cfg.lambda);
  const double f_cd = oracle::lasso_objective(a, y, oracle::lasso_coordinate_descent(a, y, cfg.lambda), cfg.lambda);
  CHECK(std::fabs(f - f_cd) / std::fabs(f_cd) <= 1e-5);
  const double f_sg = oracle::lasso_subgradient_best(a, y, cfg.lambda, 20000);
  CHECK(f <= f_sg * (1.0 + 1e-5));
}

TEST_CASE("lasso: KKT certificate, monotone objective, both problem shapes") {
  SeededRng r(9);
  for (int rep = 0; rep < 40; ++rep) {
    const int rows = oracle::random_int(r, 5, 60);
    const int cols = oracle::random_int(r, 3, 40);
    const Matrix a = oracle::random_matrix(r, rows, cols);
    const Vector y = oracle::random_vector(r, rows);
    const double lmax = (a.transpose() * y).cwiseAbs().maxCoeff();
    LassoConfig cfg;
    cfg.lambda = lmax * std::pow(10.0, -3.0 * r.uniform());
    cfg.record_history = true;
    cfg.tol = 1e-8;
    cfg.max_iters = 200000;
    const auto sol = lasso(a, y, cfg);
    const Vector grad = a.transpose() * (a * sol.coefficients - y);
    const double tol_scale = cfg.tol * (1.0 + lmax);
    for (int i = 0; i < cols; ++i) {
      const double xi = sol.coefficients(i);
      if (xi != 0.0)
        CHECK(std::fabs(grad(i) + cfg.lambda * (xi > 0 ? 1.0 : -1.0)) <= tol_scale);
      else
        CHECK(std::fabs(grad(i)) <= cfg.lambda + tol_scale);
    }
    CHECK(kkt_residual(grad, sol.coefficients, cfg.lambda) <= tol_scale);
    for (std::size_t i = 1; i < sol.objective_history.size(); ++i)
      CHECK(sol.objective_history[i] <= sol.objective_history[i - 1] + 1e-12);
  }
}

TEST_CASE("lasso: gram entry point agrees with the direct one") {
  SeededRng r(10);
  const Matrix a = oracle::random_matrix(r, 30, 12);
  const Vector y = oracle::random_vector(r, 30);
  LassoConfig cfg;
  cfg.lambda = 2.0;
  cfg.tol = 1e-10;
  const auto d = lasso(a, y, cfg);
  const auto g = lasso_gram(a.transpose() * a, a.transpose() * y, y.squaredNorm(), cfg);
  CHECK((d.coefficients - g.coefficients).norm() < 1e-7);
  CHECK(std::fabs(d.final_objective - g.final_objective) < 1e-9 * (1.0 + d.final_objective));
}

TEST_CASE("lasso: errors and non-convergence") {
  LassoConfig cfg;
  cfg.lambda = -1.0;
  CHECK_THROWS_AS(lasso(Matrix::Identity(2, 2), Vector::Ones(2), cfg), DomainError);
  cfg.lambda = 0.1;
  CHECK_THROWS_AS(lasso(Matrix::Zero(2, 2), Vector::Ones(2), cfg), DomainError);
  CHECK_THROWS_AS(lasso(Matrix::Identity(2, 2), Vector::Ones(3), cfg), DimensionError);

  SeededRng r(11);
  const Matrix a = oracle::random_matrix(r, 40, 30);
  const Vector y = oracle::random_vector(r, 40);
  cfg.lambda = 0.01;
  cfg.max_iters = 2;
  cfg.tol = 1e-12;
  try {
    lasso(a, y, cfg);
    FAIL("expected NonConvergence");
  } catch (const NonConvergence& e) {
    CHECK_FALSE(e.best().converged);
    CHECK(e.best().coefficients.size() == 30);
    CHECK(e.best().kkt_residual > 0.0);
  }

  // lambda above ||A^T b||_inf: the zero vector is optimal
  cfg.max_iters = 1000;
  cfg.tol = 1e-8;
  cfg.lambda = 1.01 * (a.transpose() * y).cwiseAbs().maxCoeff();
  CHECK(lasso(a, y, cfg).coefficients.isZero(0));
}
