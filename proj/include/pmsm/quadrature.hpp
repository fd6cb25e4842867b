#pragma once

#include <vector>

namespace pmsm::quad {

struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;  // normalized to sum 1 (probability measure)
};

// Gauss rule from the symmetric tridiagonal Jacobi matrix of a three-term
// recurrence (Golub-Welsch). diag/offdiag are the recurrence coefficients,
// weights come out normalized to sum 1.
Rule golub_welsch(const std::vector<double>& diag,
                  const std::vector<double>& offdiag);

// Probabilists' Gauss-Hermite: exact for E[p(X)] with X ~ N(0,1) and
// deg p <= 2n-1.
Rule gauss_hermite(int n);

// Gauss-Legendre mapped to (lo, hi) with uniform probability weight.
Rule gauss_legendre(int n, double lo, double hi);

}  // namespace pmsm::quad
