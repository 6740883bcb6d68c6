#include "mmvad/linalg.hpp"

#include <cmath>

#include "mmvad/errors.hpp"

namespace mmvad::linalg {
namespace {

// Daniel-Gragg-Kaufman-Stewart criterion: repeat the projection sweep when
// it cancelled more than this fraction of the norm.
constexpr double kReorthogonalize = 0.7071067811865476;

// One MGS sweep of v against the first r columns of q; accumulates the
// coefficients into coeff (length >= r).
void mgs_sweep(const Matrix& q, Eigen::Index r, Vector& v, double* coeff) {
  for (Eigen::Index i = 0; i < r; ++i) {
    const double c = q.col(i).dot(v);
    v.noalias() -= c * q.col(i);
    if (coeff) coeff[i] += c;
  }
}

}  // namespace

double project_out(const Matrix& q, Eigen::Index r, Vector& v, double* coeff) {
  double before = v.norm();
  for (int pass = 0; pass < 2; ++pass) {
    mgs_sweep(q, r, v, coeff);
    const double after = v.norm();
    if (after > kReorthogonalize * before) return after;
    before = after;
  }
  return v.norm();
}

namespace {

Vector start_vector(Eigen::Index n) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = 1.0 + 0.5 * std::sin(static_cast<double>(i) + 1.0);
  return v.normalized();
}

template <class ApplyGram>
double power_iteration(Eigen::Index n, ApplyGram&& apply) {
  Vector v = start_vector(n);
  Vector w = apply(v);
  if (w.norm() == 0.0) {
    // Start vector fell in the null space; try coordinate directions.
    for (Eigen::Index i = 0; i < n && w.norm() == 0.0; ++i) {
      v = Vector::Unit(n, i);
      w = apply(v);
    }
    if (w.norm() == 0.0) return 0.0;
  }
  double theta = v.dot(w);
  for (int iter = 0; iter < 1000; ++iter) {
    const double residual = (w - theta * v).norm();
    if (residual <= 1e-4 * std::abs(theta)) break;
    v = w.normalized();
    w = apply(v);
    theta = v.dot(w);
  }
  return theta;
}

}  // namespace

Vector soft_threshold(const Vector& v, double tau) {
  Vector out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double mag = std::abs(v(i)) - tau;
    out(i) = mag > 0.0 ? std::copysign(mag, v(i)) : 0.0;
  }
  return out;
}

OrthonormalBasis mgs_orthonormalize(const Matrix& columns) {
  OrthonormalBasis out;
  out.q.resize(columns.rows(), columns.cols());
  Eigen::Index r = 0;
  for (Eigen::Index j = 0; j < columns.cols(); ++j) {
    Vector v = columns.col(j);
    const double original = v.norm();
    const double remaining = project_out(out.q, r, v, nullptr);
    if (original == 0.0 || remaining <= kDropTolerance * original) {
      out.dropped.push_back(static_cast<int>(j));
      continue;
    }
    out.q.col(r++) = v / remaining;
    out.kept.push_back(static_cast<int>(j));
  }
  out.q.conservativeResize(Eigen::NoChange, r);
  return out;
}

Complement orthonormal_complement(const Matrix& a) {
  const Eigen::Index m = a.rows();
  const Eigen::Index k = a.cols();
  if (k >= m) throw DimensionError("orthonormal_complement needs fewer columns than rows");

  Matrix work = a;
  Vector original(k);
  for (Eigen::Index c = 0; c < k; ++c) original(c) = a.col(c).norm();

  std::vector<Vector> reflectors;
  std::vector<double> betas;
  Eigen::Index rank = 0;
  for (Eigen::Index j = 0; j < k; ++j) {
    // Pivot: the remaining column with the largest norm among those not yet
    // reduced to roundoff relative to their original length.
    Eigen::Index pivot = -1;
    double best = 0.0;
    for (Eigen::Index c = j; c < k; ++c) {
      const double rem = work.col(c).tail(m - j).norm();
      if (original(c) > 0.0 && rem > kDropTolerance * original(c) && rem > best) {
        best = rem;
        pivot = c;
      }
    }
    if (pivot < 0) break;
    if (pivot != j) {
      work.col(j).swap(work.col(pivot));
      std::swap(original(j), original(pivot));
    }
    Vector v = work.col(j).tail(m - j);
    const double alpha = v(0) >= 0.0 ? -best : best;
    v(0) -= alpha;
    const double beta = 2.0 / v.squaredNorm();
    auto block = work.bottomRightCorner(m - j, k - j);
    const Eigen::RowVectorXd proj = v.transpose() * block;
    block.noalias() -= (beta * v) * proj;
    reflectors.push_back(std::move(v));
    betas.push_back(beta);
    ++rank;
  }

  // Q = H_0 ... H_{r-1}; the complement is Q's trailing m - r columns.
  Complement out;
  out.rank = static_cast<int>(rank);
  out.rank_deficient = rank < k;
  Matrix q = Matrix::Zero(m, m - rank);
  q.bottomRows(m - rank).setIdentity();
  for (Eigen::Index j = rank - 1; j >= 0; --j) {
    const Vector& v = reflectors[static_cast<std::size_t>(j)];
    auto rows = q.bottomRows(m - j);
    const Eigen::RowVectorXd proj = v.transpose() * rows;
    rows.noalias() -= (betas[static_cast<std::size_t>(j)] * v) * proj;
  }
  out.q = std::move(q);
  return out;
}

LeastSquaresSolution least_squares(const Matrix& a, const Vector& b) {
  const Eigen::Index rows = a.rows();
  const Eigen::Index cols = a.cols();
  if (b.size() != rows) throw DimensionError("least_squares: right-hand side length mismatch");

  Matrix q(rows, cols);
  Matrix r = Matrix::Zero(cols, cols);  // only the first `rank` rows are used
  Eigen::Index rank = 0;
  for (Eigen::Index j = 0; j < cols; ++j) {
    Vector v = a.col(j);
    const double original = v.norm();
    Vector coeff = Vector::Zero(rank);
    const double remaining = project_out(q, rank, v, coeff.data());
    r.col(j).head(rank) = coeff;
    if (original == 0.0 || remaining <= kDropTolerance * original) continue;
    q.col(rank) = v / remaining;
    r(rank, j) = remaining;
    ++rank;
  }

  // z = Q^T b, carried through the same sequential projections.
  Vector w = b;
  Vector z(rank);
  for (Eigen::Index i = 0; i < rank; ++i) {
    z(i) = q.col(i).dot(w);
    w.noalias() -= z(i) * q.col(i);
  }

  LeastSquaresSolution out;
  out.rank = static_cast<int>(rank);
  out.rank_deficient = rank < cols;
  if (!out.rank_deficient) {
    out.x = r.triangularView<Eigen::Upper>().solve(z);
    return out;
  }
  if (rank == 0) {
    out.x = Vector::Zero(cols);
    return out;
  }

  // R (rank x cols) has full row rank; the minimum-norm solution of R x = z
  // is Q2 R2^{-T} z where R^T = Q2 R2.
  const Matrix rt = r.topRows(rank).transpose();
  Matrix q2(cols, rank);
  Matrix r2 = Matrix::Zero(rank, rank);
  for (Eigen::Index j = 0; j < rank; ++j) {
    Vector v = rt.col(j);
    Vector coeff = Vector::Zero(j);
    const double remaining = project_out(q2, j, v, coeff.data());
    r2.col(j).head(j) = coeff;
    r2(j, j) = remaining;
    q2.col(j) = v / remaining;
  }
  const Vector wsol = r2.transpose().triangularView<Eigen::Lower>().solve(z);
  out.x = q2 * wsol;
  return out;
}

double spectral_norm_sq(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  Vector tmp(a.rows());
  const double top = power_iteration(a.cols(), [&](const Vector& v) {
    tmp.noalias() = a * v;
    Vector out = a.transpose() * tmp;
    return out;
  });
  return kSpectralSafety * top;
}

double spectral_norm_sq_gram(const Matrix& g) {
  if (g.size() == 0) return 0.0;
  const double top = power_iteration(g.cols(), [&](const Vector& v) {
    Vector out = g.selfadjointView<Eigen::Lower>() * v;
    return out;
  });
  return kSpectralSafety * top;
}

}  // namespace mmvad::linalg
