#pragma once

#include <vector>

#include <Eigen/Dense>

namespace mmvad::linalg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Relative threshold below which a vector is treated as linearly
/// dependent on the ones before it.
inline constexpr double kDropTolerance = 1e-10;

/// Removes from v its components along q[:, 0..r) by modified Gram-Schmidt,
/// with one reorthogonalization sweep when cancellation is heavy. Adds the
/// projection coefficients into coeff when non-null. Returns ||v|| after.
double project_out(const Matrix& q, Eigen::Index r, Vector& v, double* coeff = nullptr);

Vector soft_threshold(const Vector& v, double tau);

struct OrthonormalBasis {
  Matrix q;                    // M x r, orthonormal columns
  std::vector<int> kept;       // input column indices that produced q's columns
  std::vector<int> dropped;    // input columns found dependent (norm after projection <= 1e-10 * original)
};

/// Modified Gram-Schmidt over the columns of `columns`, in order.
OrthonormalBasis mgs_orthonormalize(const Matrix& columns);

struct Complement {
  Matrix q;                    // M x (M - rank)
  int rank = 0;
  bool rank_deficient = false;
};

/// Orthonormal basis of the orthogonal complement of range(a), a is M x k.
/// Householder QR with column pivoting; rank is detected with the same
/// relative threshold as mgs_orthonormalize.
Complement orthonormal_complement(const Matrix& a);

struct LeastSquaresSolution {
  Vector x;
  int rank = 0;
  bool rank_deficient = false;
};

/// argmin ||a x - b||_2 via modified Gram-Schmidt QR of a (the right-hand
/// side is carried through the same projections). Returns the minimum-norm
/// minimizer when a is rank deficient, which includes the underdetermined
/// case rows < cols.
LeastSquaresSolution least_squares(const Matrix& a, const Vector& b);

/// Largest eigenvalue of a^T a by power iteration, times a 1.01 safety
/// factor. Stops at relative change 1e-4 or 1000 iterations.
double spectral_norm_sq(const Matrix& a);

/// Same estimate for a symmetric positive semidefinite Gram matrix g = a^T a.
double spectral_norm_sq_gram(const Matrix& g);

inline constexpr double kSpectralSafety = 1.01;

}  // namespace mmvad::linalg
