#include "pmsm/quadrature.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "pmsm/error.hpp"

namespace pmsm::quad {

Rule golub_welsch(const std::vector<double>& diag,
                  const std::vector<double>& offdiag) {
  const int n = static_cast<int>(diag.size());
  if (n < 1 || offdiag.size() + 1 != diag.size())
    fail(ErrorCode::InvalidArgument, "golub_welsch: bad recurrence sizes");

  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) jacobi(i, i) = diag[i];
  for (int i = 0; i + 1 < n; ++i) {
    jacobi(i, i + 1) = offdiag[i];
    jacobi(i + 1, i) = offdiag[i];
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
  if (eig.info() != Eigen::Success)
    fail(ErrorCode::Solver, "golub_welsch: eigensolver failed");

  Rule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    rule.nodes[i] = eig.eigenvalues()(i);
    const double v0 = eig.eigenvectors()(0, i);
    rule.weights[i] = v0 * v0;
  }
  // Eigenvalues come out sorted; renormalize weights against roundoff.
  const double wsum =
      std::accumulate(rule.weights.begin(), rule.weights.end(), 0.0);
  for (double& w : rule.weights) w /= wsum;
  return rule;
}

Rule gauss_hermite(int n) {
  if (n < 1) fail(ErrorCode::InvalidArgument, "gauss_hermite: n must be >= 1");
  std::vector<double> diag(n, 0.0), off(n - 1);
  for (int k = 1; k < n; ++k) off[k - 1] = std::sqrt(static_cast<double>(k));
  Rule rule = golub_welsch(diag, off);
  // Symmetrize nodes exactly; the measure is even.
  for (int i = 0; i < n / 2; ++i) {
    const double m = 0.5 * (rule.nodes[n - 1 - i] - rule.nodes[i]);
    rule.nodes[i] = -m;
    rule.nodes[n - 1 - i] = m;
    const double w = 0.5 * (rule.weights[i] + rule.weights[n - 1 - i]);
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

Rule gauss_legendre(int n, double lo, double hi) {
  if (n < 1) fail(ErrorCode::InvalidArgument, "gauss_legendre: n must be >= 1");
  if (!(hi > lo))
    fail(ErrorCode::InvalidArgument, "gauss_legendre: empty interval");
  std::vector<double> diag(n, 0.0), off(n - 1);
  for (int k = 1; k < n; ++k) {
    const double kk = static_cast<double>(k);
    off[k - 1] = kk / std::sqrt(4.0 * kk * kk - 1.0);
  }
  Rule rule = golub_welsch(diag, off);
  for (double& x : rule.nodes) x = lo + 0.5 * (x + 1.0) * (hi - lo);
  return rule;
}

}  // namespace pmsm::quad
