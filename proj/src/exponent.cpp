#include "varcrit/exponent.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace varcrit {

double critical_exponent(int dim) {
  if (dim < 3) throw Error(ErrorCode::InvalidSpec, "critical exponent needs dim >= 3");
  return 2.0 * dim / (dim - 2.0);
}

double ExponentField::omega_delta_measure() const {
  std::int64_t n = 0;
  for (std::uint8_t m : omega_delta_mask) n += m;
  return static_cast<double>(n) * grid->cell_volume;
}

namespace {

std::vector<double> cell_distances(const Grid& g, const DomainShape& omega) {
  const std::int64_t total = g.total();
  std::vector<double> dist(static_cast<std::size_t>(total), 0.0);
  if (omega.kind() == DomainShape::Kind::Explicit) {
    return distance_to_mask(g, omega.mask());
  }
  std::vector<double> x(static_cast<std::size_t>(g.spec.dim));
  for (std::int64_t i = 0; i < total; ++i) {
    g.cell_coords(i, x);
    dist[static_cast<std::size_t>(i)] = omega.distance_to_closure(x, g.spec);
  }
  return dist;
}

}  // namespace

ExponentField build_exponent(const GridPtr& g, const DomainShape& omega, double delta, double p_inner,
                             double ramp_power) {
  const double p_crit = critical_exponent(g->spec.dim);
  if (!(p_inner > 2.0 && p_inner < p_crit))
    throw Error(ErrorCode::ExponentOutOfRange, "need 2 < p_inner < critical");
  if (!(delta > 0.0)) throw Error(ErrorCode::DeltaNonpositive, "delta must be positive");
  if (!(ramp_power > 0.0)) throw Error(ErrorCode::InvalidSpec, "ramp_power must be positive");
  omega.validate(g->spec);

  ExponentField pf;
  pf.grid = g;
  pf.delta = delta;
  const std::int64_t total = g->total();
  pf.p.assign(static_cast<std::size_t>(total), p_crit);
  pf.omega_mask.assign(static_cast<std::size_t>(total), 0);
  pf.omega_delta_mask.assign(static_cast<std::size_t>(total), 0);

  const std::vector<double> dist = cell_distances(*g, omega);
  std::int64_t core_count = 0;
  double p_max = p_inner;
  for (std::int64_t i = 0; i < total; ++i) {
    const auto is = static_cast<std::size_t>(i);
    if (!g->interior[is]) continue;
    const double d = dist[is];
    if (d == 0.0) {
      pf.p[is] = p_inner;
      pf.omega_mask[is] = 1;
      pf.omega_delta_mask[is] = 1;
      ++core_count;
    } else if (d < delta) {
      const double s = std::pow(d / delta, ramp_power);
      pf.p[is] = p_inner + (p_crit - p_inner) * s;
      pf.omega_delta_mask[is] = 1;
      p_max = std::max(p_max, pf.p[is]);
    }
  }
  if (core_count == 0) throw Error(ErrorCode::OmegaEmpty, "no interior cell lies in the core region");
  pf.p_minus = p_inner;
  pf.p_plus = p_max;
  return pf;
}

ExponentField build_constant_exponent(const GridPtr& g, double q) {
  const double p_crit = critical_exponent(g->spec.dim);
  if (!(q > 2.0 && q <= p_crit)) throw Error(ErrorCode::ExponentOutOfRange, "need 2 < q <= critical");

  ExponentField pf;
  pf.grid = g;
  pf.delta = g->h;  // no band; nominal positive width
  const std::int64_t total = g->total();
  pf.p.assign(static_cast<std::size_t>(total), q);
  pf.omega_mask.assign(static_cast<std::size_t>(total), 0);
  pf.omega_delta_mask.assign(static_cast<std::size_t>(total), 0);
  pf.p_minus = q;
  pf.p_plus = q;
  pf.degenerate_constant = true;
  if (q < p_crit) {
    for (std::int64_t i = 0; i < total; ++i) {
      const auto is = static_cast<std::size_t>(i);
      if (g->interior[is]) {
        pf.omega_mask[is] = 1;
        pf.omega_delta_mask[is] = 1;
      }
    }
  }
  return pf;
}

void attach_u_region(ExponentField& pf, const DomainShape& region, double q_u) {
  region.validate(pf.grid->spec);
  pf.u_region = URegion{region, q_u};
}

const ClauseReport* ValidationReport::clause(const std::string& name) const {
  for (const auto& c : clauses)
    if (c.name == name) return &c;
  return nullptr;
}

namespace {

ClauseReport& add_clause(ValidationReport& rep, std::string name) {
  rep.clauses.push_back(ClauseReport{std::move(name), true, -1, 0.0, ""});
  return rep.clauses.back();
}

void fail_at(ClauseReport& c, std::int64_t cell, double value, const std::string& msg) {
  if (c.pass || std::abs(value) > std::abs(c.worst_value)) {
    c.worst_cell = cell;
    c.worst_value = value;
    c.message = msg;
  }
  c.pass = false;
}

}  // namespace

ValidationReport validate_h1(const ExponentField& pf) {
  const Grid& g = *pf.grid;
  const double p_crit = critical_exponent(g.spec.dim);
  ValidationReport rep;
  rep.degenerate = pf.degenerate_constant;

  ClauseReport& a = add_clause(rep, "H1a");
  ClauseReport& b = add_clause(rep, "H1b");
  ClauseReport& c = add_clause(rep, "H1c");
  ClauseReport& nesting = add_clause(rep, "omega-in-band");

  if (!(2.0 < pf.p_minus && pf.p_minus <= pf.p_plus && pf.p_plus < p_crit))
    fail_at(a, -1, pf.p_plus, "scalar bounds 2 < p- <= p+ < critical violated");

  std::int64_t core_count = 0;
  const std::int64_t total = g.total();
  for (std::int64_t i = 0; i < total; ++i) {
    const auto is = static_cast<std::size_t>(i);
    if (!g.interior[is]) continue;
    const double pi = pf.p[is];
    if (pf.omega_mask[is]) {
      ++core_count;
      if (!(pf.p_minus <= pi && pi <= pf.p_plus))
        fail_at(a, i, pi, "core cell exponent outside [p-, p+]");
      if (!pf.omega_delta_mask[is]) fail_at(nesting, i, pi, "core cell not in the band mask");
    }
    if (pf.omega_delta_mask[is]) {
      if (!(pf.p_minus <= pi && pi < p_crit)) fail_at(c, i, pi, "band cell exponent not strictly subcritical");
    } else {
      if (pi != p_crit) fail_at(b, i, pi, "cell outside the band must be exactly critical");
    }
  }
  if (core_count == 0 && !pf.degenerate_constant)
    fail_at(a, -1, 0.0, "core region has zero measure");
  if (pf.degenerate_constant && pf.p_minus == p_crit && core_count == 0)
    fail_at(a, -1, p_crit, "pure critical field: core region empty");

  rep.omega_delta_measure = pf.omega_delta_measure();
  rep.pass = a.pass && b.pass && c.pass && nesting.pass;
  return rep;
}

ValidationReport validate_h2(const ExponentField& pf, double s2_of_u, double qbar) {
  if (!pf.u_region) throw Error(ErrorCode::MissingURegion, "exponent field carries no subregion data");
  const Grid& g = *pf.grid;
  ValidationReport rep;

  ClauseReport& emb = add_clause(rep, "S2(U)<1");
  if (!(s2_of_u < 1.0)) fail_at(emb, -1, s2_of_u, "S2(U) >= 1");

  ClauseReport& range = add_clause(rep, "q-range");
  const double q_u = pf.u_region->q_u;
  const double hi = std::min(qbar, pf.p_plus);
  if (!(pf.p_minus <= q_u && q_u < hi)) {
    std::ostringstream os;
    os << "need p- <= q < min(qbar, p+) = min(" << qbar << ", " << pf.p_plus << ")";
    fail_at(range, -1, q_u, os.str());
  }

  ClauseReport& constant = add_clause(rep, "p-constant-on-U");
  ClauseReport& nested = add_clause(rep, "U-in-omega");
  const DomainShape& region = pf.u_region->region;
  std::vector<double> x(static_cast<std::size_t>(g.spec.dim));
  const std::int64_t total = g.total();
  std::int64_t u_cells = 0;
  for (std::int64_t i = 0; i < total; ++i) {
    const auto is = static_cast<std::size_t>(i);
    if (!g.interior[is]) continue;
    g.cell_coords(i, x);
    if (!region.contains(x, g.spec)) continue;
    ++u_cells;
    if (pf.p[is] != q_u) fail_at(constant, i, pf.p[is], "exponent differs from q on a subregion cell");
    if (!pf.omega_mask[is]) fail_at(nested, i, pf.p[is], "subregion cell outside the core region");
  }
  if (u_cells == 0) fail_at(constant, -1, 0.0, "subregion contains no interior cell");

  rep.omega_delta_measure = pf.omega_delta_measure();
  rep.pass = emb.pass && range.pass && constant.pass && nested.pass;
  return rep;
}

}  // namespace varcrit
