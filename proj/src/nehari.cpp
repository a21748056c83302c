#include "varcrit/nehari.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace varcrit {

PowerGroups make_power_groups(const ExponentField& pf) {
  const Grid& g = *pf.grid;
  PowerGroups groups;
  groups.cells.reserve(static_cast<std::size_t>(g.interior_count));
  const std::int64_t total = g.total();
  for (std::int64_t i = 0; i < total; ++i)
    if (g.interior[static_cast<std::size_t>(i)]) groups.cells.push_back(i);
  std::stable_sort(groups.cells.begin(), groups.cells.end(), [&](std::int64_t a, std::int64_t b) {
    return pf.p[static_cast<std::size_t>(a)] < pf.p[static_cast<std::size_t>(b)];
  });
  std::size_t start = 0;
  while (start < groups.cells.size()) {
    const double p = pf.p[static_cast<std::size_t>(groups.cells[start])];
    std::size_t end = start + 1;
    while (end < groups.cells.size() && pf.p[static_cast<std::size_t>(groups.cells[end])] == p) ++end;
    groups.run_end.push_back(end);
    groups.run_p.push_back(p);
    start = end;
  }
  return groups;
}

ProjectionResult project(const ExponentField& pf, const Field& u, double tol) {
  return project(pf, u, tol, make_power_groups(pf));
}

ProjectionResult project(const ExponentField& pf, const Field& u, double tol, const PowerGroups& groups) {
  require_aligned(u, pf.grid);
  const Grid& g = *pf.grid;
  const double alpha = dirichlet_energy(u);

  // coefficient sum of (u+)^p per distinct exponent
  std::vector<double> coef(groups.run_p.size(), 0.0);
  bool any_positive = false;
  std::size_t start = 0;
  for (std::size_t r = 0; r < groups.run_p.size(); ++r) {
    const double p = groups.run_p[r];
    double s = 0.0;
    for (std::size_t j = start; j < groups.run_end[r]; ++j) {
      const double v = u[groups.cells[j]];
      if (v > 0.0) {
        s += std::exp(p * std::log(v));
        any_positive = true;
      }
    }
    coef[r] = s * g.cell_volume;
    start = groups.run_end[r];
  }
  if (!any_positive) throw Error(ErrorCode::NonpositiveInput, "u+ vanishes identically");

  // psi(t) = sum coef * t^{p-2}, strictly increasing; root of psi(t) = alpha
  auto psi = [&](double t) {
    double s = 0.0;
    const double lt = std::log(t);
    for (std::size_t r = 0; r < coef.size(); ++r)
      if (coef[r] != 0.0) s += coef[r] * std::exp((groups.run_p[r] - 2.0) * lt);
    return s;
  };
  auto dpsi = [&](double t) {
    double s = 0.0;
    const double lt = std::log(t);
    for (std::size_t r = 0; r < coef.size(); ++r)
      if (coef[r] != 0.0) s += coef[r] * (groups.run_p[r] - 2.0) * std::exp((groups.run_p[r] - 3.0) * lt);
    return s;
  };

  double lo = 1.0, hi = 1.0;
  int iters = 0;
  while (psi(lo) >= alpha) {
    lo /= 10.0;
    if (++iters > 400 || lo < 1e-300) throw Error(ErrorCode::NoBracket, "no lower bracket for the scaling root");
  }
  while (psi(hi) <= alpha) {
    hi *= 10.0;
    if (++iters > 400 || hi > 1e300) throw Error(ErrorCode::NoBracket, "no upper bracket for the scaling root");
  }

  double t = std::sqrt(lo * hi);
  for (int it = 0; it < 200; ++it) {
    ++iters;
    const double f = psi(t) - alpha;
    if (std::abs(f) <= tol * alpha) break;
    (f < 0.0 ? lo : hi) = t;
    const double dp = dpsi(t);
    double t_new = dp > 0.0 ? t - f / dp : 0.0;
    if (!(t_new > lo && t_new < hi)) t_new = 0.5 * (lo + hi);
    t = t_new;
  }

  ProjectionResult out;
  out.t = t;
  out.projected = scaled(u, t);
  out.iterations = iters;
  out.constraint_residual = std::abs(psi(t) - alpha) / alpha;
  return out;
}

void SolverOptions::validate() const {
  if (!(step > 0) || !(tol_dual > 0) || !(tol_constraint > 0) || !(cg_tol > 0))
    throw Error(ErrorCode::InvalidConfig, "solver tolerances and step must be positive");
  if (max_iters < 1) throw Error(ErrorCode::InvalidConfig, "max_iters must be >= 1");
  if (init == InitKind::Custom && !custom_init) throw Error(ErrorCode::InvalidConfig, "custom init missing field");
}

namespace {

Field random_bump_field(const GridPtr& g, std::uint64_t seed, int bumps) {
  std::mt19937_64 rng(seed);
  const Grid& grid = *g;
  const int dim = grid.spec.dim;
  double extent = grid.spec.upper[0] - grid.spec.lower[0];
  for (int k = 1; k < dim; ++k)
    extent = std::min(extent, grid.spec.upper[static_cast<std::size_t>(k)] - grid.spec.lower[static_cast<std::size_t>(k)]);

  std::uniform_int_distribution<std::int64_t> pick(0, grid.total() - 1);
  std::uniform_real_distribution<double> width(0.08 * extent, 0.25 * extent);
  std::uniform_real_distribution<double> amp(0.5, 1.5);

  std::vector<std::vector<double>> centers;
  std::vector<double> sigmas, amps;
  std::vector<double> x(static_cast<std::size_t>(dim));
  for (int b = 0; b < bumps; ++b) {
    std::int64_t cell = pick(rng);
    for (int tries = 0; tries < 100000 && !grid.is_interior(cell); ++tries) cell = pick(rng);
    if (!grid.is_interior(cell)) throw Error(ErrorCode::EmptyInterior, "could not sample an interior cell");
    grid.cell_coords(cell, x);
    centers.emplace_back(x.begin(), x.end());
    sigmas.push_back(width(rng));
    amps.push_back(amp(rng));
  }

  Field u(g);
  const std::int64_t total = grid.total();
  for (std::int64_t i = 0; i < total; ++i) {
    if (!grid.interior[static_cast<std::size_t>(i)]) continue;
    grid.cell_coords(i, x);
    double v = 0.0;
    for (std::size_t b = 0; b < centers.size(); ++b) {
      double r2 = 0.0;
      for (int k = 0; k < dim; ++k) {
        const double t = x[static_cast<std::size_t>(k)] - centers[b][static_cast<std::size_t>(k)];
        r2 += t * t;
      }
      v += amps[b] * std::exp(-0.5 * r2 / (sigmas[b] * sigmas[b]));
    }
    u[i] = v;
  }
  return u;
}

std::vector<double> domain_centroid(const Grid& g) {
  std::vector<double> c(static_cast<std::size_t>(g.spec.dim), 0.0);
  switch (g.shape.kind()) {
    case DomainShape::Kind::Ball:
    case DomainShape::Kind::Annulus:
      return g.shape.center();
    default:
      for (int k = 0; k < g.spec.dim; ++k) {
        const auto ks = static_cast<std::size_t>(k);
        c[ks] = 0.5 * (g.spec.lower[ks] + g.spec.upper[ks]);
      }
      return c;
  }
}

}  // namespace

GroundState minimize(const ExponentField& pf, const SolverOptions& opts) {
  opts.validate();
  const ValidationReport h1 = validate_h1(pf);
  if (!h1.pass) throw Error(ErrorCode::HypothesisViolated, "exponent field fails the growth hypotheses");

  const GridPtr& g = pf.grid;
  Field u0(g);
  switch (opts.init) {
    case InitKind::RandomBump:
      u0 = random_bump_field(g, opts.seed, opts.bumps);
      break;
    case InitKind::Instanton: {
      const std::vector<double> c = domain_centroid(*g);
      u0 = instanton_trial(g, c);
      break;
    }
    case InitKind::Custom:
      u0 = *opts.custom_init;
      require_aligned(u0, g);
      break;
  }

  const PowerGroups groups = make_power_groups(pf);
  ProjectionResult pr = project(pf, u0, opts.tol_constraint, groups);
  Field u = std::move(pr.projected);
  double E = energy(pf, u).total;

  GroundState out;
  out.trace.reserve(static_cast<std::size_t>(opts.max_iters) + 1);
  double step = opts.step;
  double dual = 0.0;
  double constraint_res = pr.constraint_residual;
  int it = 0;
  bool converged = false;

  for (it = 0; it < opts.max_iters; ++it) {
    const Field r = residual(pf, u);
    const Field pre = solve_poisson(r, opts.cg_tol);
    dual = std::sqrt(std::max(0.0, l2_inner(pre, r)));
    out.trace.push_back({it, E, dual});
    if (dual <= opts.tol_dual && constraint_res <= opts.tol_constraint) {
      converged = true;
      break;
    }

    bool accepted = false;
    while (step >= 1e-14 * opts.step) {
      Field cand = add_scaled(u, -step, pre);
      for (double& v : cand.values) v = std::max(v, 0.0);
      cand.clamp_to_interior();
      bool any = false;
      for (double v : cand.values)
        if (v > 0.0) {
          any = true;
          break;
        }
      if (!any) {
        step *= 0.5;
        continue;
      }
      ProjectionResult next = project(pf, cand, opts.tol_constraint, groups);
      const double E_next = energy(pf, next.projected).total;
      if (E_next <= E * (1.0 + 1e-14) + 1e-300) {
        u = std::move(next.projected);
        E = E_next;
        constraint_res = next.constraint_residual;
        step = std::min(step * 1.25, opts.step * 4.0);
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // descent stalled at backtracking floor
  }

  out.u = std::move(u);
  out.m = E;
  out.dual_residual = dual;
  out.constraint_residual = constraint_res;
  out.converged = converged;
  out.iterations = it;
  return out;
}

GroundState minimize_multistart(const ExponentField& pf, const SolverOptions& opts, int starts) {
  if (starts < 1) throw Error(ErrorCode::InvalidConfig, "starts must be >= 1");
  GroundState best;
  bool have = false;
  for (int s = 0; s < starts; ++s) {
    SolverOptions o = opts;
    if (starts > 1) {
      o.init = (s == 0) ? InitKind::Instanton : InitKind::RandomBump;
      o.seed = opts.seed + static_cast<std::uint64_t>(s);
    }
    GroundState gs = minimize(pf, o);
    if (!have || gs.m < best.m) {
      best = std::move(gs);
      have = true;
    }
  }
  return best;
}

CriticalityReport verify_critical(const ExponentField& pf, const GroundState& gs) {
  const Grid& g = *pf.grid;
  CriticalityReport rep;
  rep.dual_residual = gs.dual_residual;
  const double en = dirichlet_energy(gs.u);
  rep.constraint_residual = en > 0 ? std::abs(constraint(pf, gs.u)) / en : 0.0;
  rep.jprime_uu = constraint_derivative_along(pf, gs.u);
  rep.negative_slope = rep.jprime_uu < 0.0;

  double mn = 0.0;
  const std::int64_t total = g.total();
  for (std::int64_t i = 0; i < total; ++i)
    if (g.interior[static_cast<std::size_t>(i)]) mn = std::min(mn, gs.u[i]);
  rep.min_cell_value = mn;
  rep.nonnegative = mn >= 0.0;

  const EnergyBreakdown eb = energy(pf, gs.u);
  rep.energy_identity_lhs = eb.total - constraint(pf, gs.u) / pf.p_minus;
  double corr = 0.0;
  for (std::int64_t i = 0; i < total; ++i) {
    const auto is = static_cast<std::size_t>(i);
    if (!g.interior[is]) continue;
    const double v = gs.u[i];
    if (v <= 0.0) continue;
    corr += (1.0 / pf.p_minus - 1.0 / pf.p[is]) * std::exp(pf.p[is] * std::log(v));
  }
  rep.energy_identity_rhs = (0.5 - 1.0 / pf.p_minus) * en + corr * g.cell_volume;
  return rep;
}

std::vector<ThresholdProbeRow> instanton_threshold_probe(const ExponentField& pf,
                                                         std::span<const double> k_values) {
  const GridPtr& g = pf.grid;
  const int dim = g->spec.dim;
  const PowerGroups groups = make_power_groups(pf);
  std::vector<ThresholdProbeRow> rows;
  rows.reserve(k_values.size());
  for (double k : k_values) {
    std::vector<double> center(static_cast<std::size_t>(dim), 0.0);
    center[static_cast<std::size_t>(dim - 1)] = -k;
    const Field w = instanton_trial(g, center);  // throws offset-outside-box when k escapes
    ProjectionResult pr = project(pf, w, 1e-12, groups);
    rows.push_back({k, pr.t, energy(pf, pr.projected).total});
  }
  return rows;
}

Field concentration_profile(const Field& u, double radius) {
  const Grid& g = *u.grid;
  if (!(radius >= 2.0 * g.h)) throw Error(ErrorCode::RadiusTooSmall, "filter radius must be at least 2h");
  const double p_crit = critical_exponent(g.spec.dim);
  const auto window = static_cast<std::int64_t>(std::floor(radius / g.h + 1e-12));

  Field acc(u.grid);
  const std::int64_t total = g.total();
  for (std::int64_t i = 0; i < total; ++i) {
    const auto is = static_cast<std::size_t>(i);
    if (!g.interior[is]) continue;
    const double a = std::abs(u[i]);
    acc[i] = a > 0 ? std::exp(p_crit * std::log(a)) : 0.0;
  }

  // separable sliding-window sum along each axis in turn
  std::vector<double> line, out;
  for (int k = 0; k < g.spec.dim; ++k) {
    const std::int64_t s = g.stride[static_cast<std::size_t>(k)];
    const std::int64_t extent = g.spec.cells[static_cast<std::size_t>(k)];
    const std::int64_t lines = total / extent;
    line.assign(static_cast<std::size_t>(extent), 0.0);
    out.assign(static_cast<std::size_t>(extent), 0.0);
    for (std::int64_t l = 0; l < lines; ++l) {
      const std::int64_t outer = l / s;
      const std::int64_t inner = l % s;
      const std::int64_t base = outer * s * extent + inner;
      for (std::int64_t j = 0; j < extent; ++j) line[static_cast<std::size_t>(j)] = acc[base + j * s];
      double run = 0.0;
      for (std::int64_t j = 0; j <= std::min(window, extent - 1); ++j) run += line[static_cast<std::size_t>(j)];
      for (std::int64_t j = 0; j < extent; ++j) {
        out[static_cast<std::size_t>(j)] = run;
        const std::int64_t drop = j - window;
        const std::int64_t take = j + window + 1;
        if (drop >= 0) run -= line[static_cast<std::size_t>(drop)];
        if (take < extent) run += line[static_cast<std::size_t>(take)];
      }
      for (std::int64_t j = 0; j < extent; ++j) acc[base + j * s] = out[static_cast<std::size_t>(j)];
    }
  }

  for (std::int64_t i = 0; i < total; ++i) acc[i] *= g.cell_volume;
  acc.clamp_to_interior();
  return acc;
}

}  // namespace varcrit
