#pragma once

#include <optional>
#include <string>
#include <vector>

#include "varcrit/grid.hpp"

namespace varcrit {

/// Critical Sobolev exponent 2N/(N-2).
double critical_exponent(int dim);

/// Data for a constant-exponent subregion (used by the bounded-domain
/// hypothesis checks): p == q_u on every cell of `region`.
struct URegion {
  DomainShape region;
  double q_u = 0.0;
};

/// Per-cell exponent field p(x) with the region bookkeeping needed by the
/// hypothesis validators: p == p_inner on the closed core region Omega,
/// ramps up through the band {0 < dist < delta}, and equals the critical
/// exponent outside. The band membership is taken half-open (dist < delta);
/// cells at dist >= delta are exactly critical.
struct ExponentField {
  GridPtr grid;
  std::vector<double> p;
  std::vector<std::uint8_t> omega_mask;        // dist(center, closure(Omega)) == 0
  std::vector<std::uint8_t> omega_delta_mask;  // dist < delta (half-open band union core)
  double delta = 0.0;
  double p_minus = 0.0;
  double p_plus = 0.0;
  bool degenerate_constant = false;  // whole-domain constant exponent (oracle configs)
  std::optional<URegion> u_region;

  double omega_delta_measure() const;  // cell_volume * |omega_delta_mask|
};

ExponentField build_exponent(const GridPtr& g, const DomainShape& omega, double delta, double p_inner,
                             double ramp_power);

/// p == q everywhere. For q strictly subcritical the whole interior is
/// treated as the subcritical core (degenerate case, flagged); for
/// q == critical the core is empty.
ExponentField build_constant_exponent(const GridPtr& g, double q);

/// Attach constant-exponent subregion data (validated: p == q_u on the
/// region's cells and the region lies inside the core mask).
void attach_u_region(ExponentField& pf, const DomainShape& region, double q_u);

struct ClauseReport {
  std::string name;
  bool pass = true;
  std::int64_t worst_cell = -1;
  double worst_value = 0.0;
  std::string message;
};

struct ValidationReport {
  bool pass = true;
  std::vector<ClauseReport> clauses;
  double omega_delta_measure = 0.0;
  bool degenerate = false;

  const ClauseReport* clause(const std::string& name) const;
};

/// Checks the three growth clauses: subcritical range on the core, exactly
/// critical outside the band, strictly subcritical on the band. Always
/// returns a report.
ValidationReport validate_h1(const ExponentField& pf);

/// Bounded-domain subregion check: s2_of_u < 1, p_minus <= q_u <
/// min(qbar, p_plus), and p == q_u on the subregion cells. The scalars
/// s2_of_u and qbar come from the constants module, computed on the same
/// subdomain.
ValidationReport validate_h2(const ExponentField& pf, double s2_of_u, double qbar);

}  // namespace varcrit
