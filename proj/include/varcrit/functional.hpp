#pragma once

#include "varcrit/exponent.hpp"
#include "varcrit/grid.hpp"

namespace varcrit {

/// I(u) split into its three terms; total = kinetic - potential_sub -
/// potential_crit exactly in arithmetic.
struct EnergyBreakdown {
  double total = 0.0;
  double kinetic = 0.0;         // (1/2)||u||_{1,2}^2
  double potential_sub = 0.0;   // band integral of (u+)^p / p
  double potential_crit = 0.0;  // critical-region integral of (u+)^{2*} / 2*
};

/// Constants of the coercivity chain and the resulting norm barrier eta:
/// c1 * t^{p- - 2} + c2 * t^{2* - 2} = 1 at t = eta.
struct AprioriConstants {
  double a = 0.0;
  double b = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  double eta = 0.0;
};

/// Best constant of the embedding D^{1,2} -> L^{2*} on R^dim,
/// pi*N*(N-2)*(Gamma(N/2)/Gamma(N))^{2/N}.
double sobolev_constant(int dim);

/// The explicit radial ground state of the pure critical problem sampled
/// at interior cell centers, translated to `center`:
/// w(x) = [N(N-2)]^{(N-2)/4} / (1+|x|^2)^{(N-2)/2}.
Field instanton(const GridPtr& g, std::span<const double> center);

/// Boundary-adapted sample (w - w(d))+ with d the depth of `center` inside
/// the domain: continuous, vanishing at the Dirichlet boundary, so its
/// energy carries no mask-jump term. This is the trial function used for
/// the energy-threshold certificates; the plain sample is useless there
/// because hard truncation adds an O(1/h) boundary jump to the energy.
Field instanton_trial(const GridPtr& g, std::span<const double> center);

/// Rayleigh quotient ||grad w_trial||^2 / ||w_trial||_{2*}^2 of the
/// boundary-adapted instanton on a centered box grid, computed without
/// materializing the grid (plane streaming; same arithmetic as the Field
/// path, verified in tests). Enables certificate grids past memory limits.
double instanton_trial_quotient(int dim, double halfwidth, int cells_per_axis);

EnergyBreakdown energy(const ExponentField& pf, const Field& u);

/// Directional derivative I'(u)(v) evaluated by quadrature.
double pairing(const ExponentField& pf, const Field& u, const Field& v);

/// Strong-form representative r = -Delta_h u - (u+)^{p(x)-1}, satisfying
/// pairing(u, v) == cell_volume * <r, v> for every aligned v.
Field residual(const ExponentField& pf, const Field& u);

/// J(u) = I'(u)(u) = ||u||^2 - integral (u+)^p.
double constraint(const ExponentField& pf, const Field& u);

/// J'(u)(u) = 2||u||^2 - integral p(x) (u+)^p.
double constraint_derivative_along(const ExponentField& pf, const Field& u);

AprioriConstants apriori_constants(int dim, double p_minus, double omega_delta_measure);

}  // namespace varcrit
