/**
 * @file linalg.hpp
 * @brief Hermitian eigen-solves, cutoff pseudoinverses, and the dual-variable
 *        bisection that enforces per-AP power budgets.
 */
#pragma once

#include <cmath>
#include <functional>
#include <limits>

#include "cfmimo/rng.hpp"
#include "cfmimo/types.hpp"

namespace cfmimo {

/// Relative singular/eigenvalue cutoff applied by every pseudoinverse.
inline constexpr double kPinvCutoff = 1e-10;

struct HermitianEig {
  CMat U;   // columns are eigenvectors
  RVec d;   // eigenvalues, ascending

  static HermitianEig compute(const CMat& a) {
    Eigen::SelfAdjointEigenSolver<CMat> es(a);
    return {es.eigenvectors(), es.eigenvalues()};
  }
};

/// Solves (A + shift*I) x = r through the eigendecomposition of A, zeroing
/// components whose shifted eigenvalue falls below the relative cutoff
/// (Moore-Penrose behavior on the rank-deficient part).
inline CVec eig_solve_shifted(const HermitianEig& eig, const CVec& r, double shift,
                              double rel_cutoff = kPinvCutoff) {
  const Eigen::Index n = eig.d.size();
  double max_abs = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) max_abs = std::max(max_abs, std::abs(eig.d[i] + shift));
  const double cutoff = rel_cutoff * max_abs;

  CVec c = eig.U.adjoint() * r;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double den = eig.d[i] + shift;
    c[i] = (std::abs(den) > cutoff) ? c[i] / den : Complex(0.0, 0.0);
  }
  return eig.U * c;
}

/// Moore-Penrose pseudoinverse applied to a vector: pinv(A) * r for
/// Hermitian A (PSD in all call sites, indefinite tolerated).
inline CVec pinv_apply(const CMat& a, const CVec& r, double rel_cutoff = kPinvCutoff) {
  return eig_solve_shifted(HermitianEig::compute(a), r, 0.0, rel_cutoff);
}

struct DualSolution {
  double lambda = 0.0;
  bool converged = true;
};

/// Smallest lambda >= 0 with power(lambda) <= budget, where power is
/// continuous and strictly decreasing. Meets |power - budget| / budget < tol
/// unless the constraint is inactive (then lambda = 0). The iteration cap
/// signals ill-conditioning through converged = false.
inline DualSolution bisect_dual(const std::function<double(double)>& power, double budget,
                                double tol = 1e-12, int max_iters = 200) {
  DualSolution out;
  if (power(0.0) <= budget * (1.0 + tol)) return out;  // inactive constraint

  double lo = 0.0;
  double hi = 1.0;
  int growth = 0;
  while (power(hi) > budget && growth < 2000) {
    lo = hi;
    hi *= 2.0;
    ++growth;
  }
  if (growth >= 2000) {
    out.lambda = hi;
    out.converged = false;
    return out;
  }

  double mid = hi;
  for (int it = 0; it < max_iters; ++it) {
    mid = 0.5 * (lo + hi);
    const double p = power(mid);
    if (std::abs(p - budget) < tol * budget) {
      out.lambda = mid;
      return out;
    }
    (p > budget ? lo : hi) = mid;
  }
  out.lambda = 0.5 * (lo + hi);
  // Accept a collapsed bracket: power is then at the resolution limit of
  // the floating-point lambda axis.
  out.converged = (hi - lo) <= 1e-9 * std::max(1.0, hi);
  return out;
}

/// M x N matrix with i.i.d. CN(0, variance) entries, filled column-major.
inline CMat cn_matrix(Eigen::Index rows, Eigen::Index cols, double variance, Rng& rng) {
  CMat z(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) z(i, j) = rng.cnormal(variance);
  return z;
}

inline CVec cn_vector(Eigen::Index n, double variance, Rng& rng) {
  CVec z(n);
  for (Eigen::Index i = 0; i < n; ++i) z[i] = rng.cnormal(variance);
  return z;
}

}  // namespace cfmimo
