#include "test_util.hpp"

using namespace cfmimo;
using testutil::rel_err;

TEST_CASE("shifted eigen-solve matches a dense LU solve") {
  Rng rng(21);
  const int n = 5;
  CMat g = cn_matrix(n, n, 1.0, rng);
  CMat a = g * g.adjoint();  // PSD
  const CVec r = cn_vector(n, 1.0, rng);
  const double shift = 0.3;

  const CVec x = eig_solve_shifted(HermitianEig::compute(a), r, shift);
  CMat full = a;
  full.diagonal().array() += shift;
  const CVec x_ref = full.fullPivLu().solve(r);
  REQUIRE(rel_err(x, x_ref) < 1e-10);
}

TEST_CASE("pinv_apply agrees with an SVD pseudoinverse on rank-deficient input") {
  Rng rng(33);
  const int n = 6;
  const CVec u = cn_vector(n, 1.0, rng);
  const CVec w = cn_vector(n, 1.0, rng);
  CMat a = u * u.adjoint() + w * w.adjoint();  // rank 2
  const CVec r = cn_vector(n, 1.0, rng);

  const CVec x = pinv_apply(a, r);

  Eigen::JacobiSVD<CMat> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  RVec inv = svd.singularValues();
  for (Eigen::Index i = 0; i < inv.size(); ++i)
    inv[i] = inv[i] > 1e-10 * svd.singularValues()[0] ? 1.0 / inv[i] : 0.0;
  const CVec x_ref = svd.matrixV() * inv.asDiagonal() * (svd.matrixU().adjoint() * r);
  REQUIRE(rel_err(x, x_ref) < 1e-9);
}

TEST_CASE("dual bisection recovers the closed-form root") {
  // power(l) = c / (1 + l)^2 crosses the budget at l* = sqrt(c/budget) - 1.
  const double c = 25.0, budget = 4.0;
  auto power = [&](double l) { return c / ((1 + l) * (1 + l)); };
  const DualSolution sol = bisect_dual(power, budget);
  REQUIRE(sol.converged);
  REQUIRE(sol.lambda == Approx(std::sqrt(c / budget) - 1.0).epsilon(1e-9));
}

TEST_CASE("dual bisection reports an inactive constraint as lambda zero") {
  auto power = [](double l) { return 1.0 / (1 + l); };
  const DualSolution sol = bisect_dual(power, 2.0);
  REQUIRE(sol.converged);
  REQUIRE(sol.lambda == 0.0);
}

TEST_CASE("cn_matrix is deterministic per stream") {
  Rng a(17), b(17);
  REQUIRE(cn_matrix(3, 4, 1.0, a) == cn_matrix(3, 4, 1.0, b));
}
