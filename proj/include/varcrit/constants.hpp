#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "varcrit/functional.hpp"
#include "varcrit/grid.hpp"

namespace varcrit {

struct BestConstant {
  double q = 0.0;
  double value = 0.0;  // infimum of the Rayleigh quotient
  Field extremal;      // nonnegative minimizer, ||.||_q = 1
  int iterations = 0;
  double residual = 0.0;  // relative Euler-Lagrange defect in L^2
};

/// Smallest Dirichlet eigenvalue (best L^2-embedding constant) by inverse
/// power iteration with conjugate-gradient inner solves.
BestConstant s2(const GridPtr& domain, double tol);

/// Best constant of the gradient-to-L^q embedding: minimizes
/// ||grad v||^2 / ||v||_q^2 by preconditioned descent on the unit L^q
/// sphere (renormalize each step, positive part). q == 2 delegates to s2.
BestConstant sq(const GridPtr& domain, double q, double tol, std::uint64_t seed);
BestConstant sq(const GridPtr& domain, double q, double tol, std::uint64_t seed, const Field* warm_start);

/// g(q) = (1/2 - 1/q) * sq_value^{q/(q-2)}, evaluated in log space.
double g_value(double sq_value, double q);

struct QBarResult {
  double qbar = 0.0;
  std::pair<double, double> bracket{0.0, 0.0};
  std::vector<std::pair<double, double>> samples;  // (q, g(q))
};

/// Smallest q in (2, 2*] where g reaches the critical energy threshold
/// S^{dim/2}/dim: 64-point geometric scan of (2, 2*], then bisection.
/// Near the critical exponent the computed best constant is replaced by
/// min(computed, analytic S) so the endpoint identity g(2*) = threshold
/// holds exactly. Requires s2(domain) < 1.
QBarResult qbar(const GridPtr& domain, double tol);

/// Sufficient condition for a radius-R ball to satisfy the L^2-embedding
/// bound: R > sqrt(s2(unit ball)). Returns the flag and the cached
/// unit-ball eigenvalue (reference resolution).
std::pair<bool, double> ball_condition(double R, int dim);

/// Annulus variant: R - r > 2*sqrt(s2(unit ball)).
std::pair<bool, double> annulus_condition(double R, double r, int dim);

/// Reference-resolution unit-ball eigenvalue used by the conditions
/// (computed once per dimension and cached).
double unit_ball_eigenvalue(int dim);

}  // namespace varcrit
