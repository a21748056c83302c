#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "varcrit/functional.hpp"

namespace varcrit {

struct ProjectionResult {
  double t = 0.0;            // scaling placing t*u on the constraint set
  Field projected;           // t*u
  int iterations = 0;
  double constraint_residual = 0.0;  // |J(t u)| / ||t u||_{1,2}^2
};

/// Cells grouped by identical exponent value so the projection root
/// function costs one pow per distinct exponent instead of per cell.
struct PowerGroups {
  std::vector<std::int64_t> cells;       // interior cells sorted by p
  std::vector<std::size_t> run_end;      // exclusive end of each equal-p run
  std::vector<double> run_p;
};

PowerGroups make_power_groups(const ExponentField& pf);

/// Scales u onto the constraint set J(t u) = 0: bracket expansion (factor
/// 10 both ways) around the unique root, then Newton safeguarded by
/// bisection. Requires some strictly positive cell (u+ != 0).
ProjectionResult project(const ExponentField& pf, const Field& u, double tol);
ProjectionResult project(const ExponentField& pf, const Field& u, double tol, const PowerGroups& groups);

enum class InitKind { RandomBump, Instanton, Custom };

struct SolverOptions {
  double step = 1.0;          // initial gradient step
  double tol_dual = 1e-6;     // H^{-1}-type residual norm target
  double tol_constraint = 1e-10;
  int max_iters = 400;
  std::uint64_t seed = 1;
  InitKind init = InitKind::RandomBump;
  std::optional<Field> custom_init;
  double cg_tol = 1e-8;       // inner Poisson solve tolerance
  int bumps = 3;

  void validate() const;
};

struct TracePoint {
  int iteration = 0;
  double energy = 0.0;
  double dual_residual = 0.0;
};

struct GroundState {
  Field u;
  double m = 0.0;                    // energy at the returned iterate
  double dual_residual = 0.0;        // sqrt(vol * <P r, r>), P the Poisson preconditioner
  double constraint_residual = 0.0;
  std::vector<TracePoint> trace;
  bool converged = false;
  int iterations = 0;
};

/// Constrained descent: u <- project((u - step * P(residual(u)))+), with
/// backtracking on energy increase. Every iterate stays on the constraint
/// set, so the energy trace is a monotone upper bound for the minimum.
GroundState minimize(const ExponentField& pf, const SolverOptions& opts);

/// Best-of-n wrapper: one boundary-adapted instanton start plus seeded
/// random-bump starts; returns the lowest-energy result.
GroundState minimize_multistart(const ExponentField& pf, const SolverOptions& opts, int starts);

struct CriticalityReport {
  double dual_residual = 0.0;
  double constraint_residual = 0.0;
  double jprime_uu = 0.0;        // must be negative on the constraint set
  double min_cell_value = 0.0;   // must be >= 0
  double energy_identity_lhs = 0.0;  // I(u) - J(u)/p-
  double energy_identity_rhs = 0.0;  // (1/2 - 1/p-)||u||^2 + integral (1/p- - 1/p)(u+)^p
  bool negative_slope = false;
  bool nonnegative = false;
};

CriticalityReport verify_critical(const ExponentField& pf, const GroundState& gs);

struct ThresholdProbeRow {
  double k = 0.0;
  double t = 0.0;
  double energy = 0.0;
};

/// Projects translated boundary-adapted instantons (centers -k e_dim) and
/// records their constrained energies; for bubbles far from the
/// subcritical band the values approach the critical threshold from below.
std::vector<ThresholdProbeRow> instanton_threshold_probe(const ExponentField& pf,
                                                         std::span<const double> k_values);

/// Local 2*-mass diagnostic: box-filter of |u|^{2*} with half-width
/// `radius` (integral over the window), reported on interior cells. A peak
/// near S^{dim/2} signals a bubble.
Field concentration_profile(const Field& u, double radius);

}  // namespace varcrit
