#include <cmath>

#include "mmvad/errors.hpp"
#include "mmvad/experiment.hpp"

namespace mmvad {
namespace {

void check_parameters(double mu2, double sigma2_sq, double sigma1_sq) {
  if (!std::isfinite(mu2) || !std::isfinite(sigma2_sq) || !std::isfinite(sigma1_sq))
    throw DomainError("theory parameters must be finite");
  if (sigma2_sq < 0.0 || sigma1_sq < 0.0) throw DomainError("variances must be >= 0");
}

}  // namespace

double theory_xi_expectation(const TheoryCase& c) {
  check_parameters(c.mu2, c.sigma2_sq, c.sigma1_sq);
  if (c.n < 1 || c.k < 0 || c.k > c.n || c.m < 1) throw DomainError("theory case needs 0 <= K <= N, M >= 1");
  const double m = c.m;
  const double n = c.n;
  const double k = c.k;
  const double s2 = c.mu2 * c.mu2 + c.sigma2_sq;
  if (c.kind == TheoryCaseKind::Prevalent) return m * (k * s2 + (m + 1.0 + n - k) * c.sigma1_sq);
  return m * ((m + 1.0 + k) * s2 + (n - k) * c.sigma1_sq);
}

double theory_xi_gap(int m, double mu2, double sigma2_sq, double sigma1_sq) {
  check_parameters(mu2, sigma2_sq, sigma1_sq);
  const double md = m;
  return md * (md + 1.0) * (mu2 * mu2 + sigma2_sq - sigma1_sq);
}

bool theory_separation_check(SignalModel model, double mu2, double sigma2_sq, double sigma1_sq) {
  check_parameters(mu2, sigma2_sq, sigma1_sq);
  if (model == SignalModel::Jsm2r) return mu2 * mu2 + sigma2_sq > sigma1_sq;
  return sigma2_sq > sigma1_sq;
}

}  // namespace mmvad
