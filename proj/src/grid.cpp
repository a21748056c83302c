#include "varcrit/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>

namespace varcrit {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ShapeDoesNotFit: return "shape-does-not-fit";
    case ErrorCode::EmptyInterior: return "empty-interior";
    case ErrorCode::MisalignedField: return "misaligned-field";
    case ErrorCode::InvalidSpec: return "invalid-spec";
    case ErrorCode::ExponentOutOfRange: return "exponent-out-of-range";
    case ErrorCode::OmegaEmpty: return "omega-empty";
    case ErrorCode::DeltaNonpositive: return "delta-nonpositive";
    case ErrorCode::QOutOfRange: return "q-out-of-range";
    case ErrorCode::NoConvergence: return "no-convergence";
    case ErrorCode::NonpositiveInput: return "nonpositive-input";
    case ErrorCode::NoBracket: return "no-bracket";
    case ErrorCode::OffsetOutsideBox: return "offset-outside-box";
    case ErrorCode::RadiusTooSmall: return "radius-too-small";
    case ErrorCode::MissingURegion: return "missing-u-region";
    case ErrorCode::HypothesisViolated: return "hypothesis-violated";
    case ErrorCode::InvalidRadii: return "invalid-radii";
    case ErrorCode::UnknownParameter: return "unknown-parameter";
    case ErrorCode::InvalidConfig: return "invalid-config";
    case ErrorCode::IoError: return "io-error";
  }
  return "unknown-error";
}

// ---------------------------------------------------------------- GridSpec

GridSpec GridSpec::centered_box(int dim, double halfwidth, int cells_per_axis) {
  GridSpec s;
  s.dim = dim;
  s.lower.assign(static_cast<std::size_t>(dim), -halfwidth);
  s.upper.assign(static_cast<std::size_t>(dim), halfwidth);
  s.cells.assign(static_cast<std::size_t>(dim), cells_per_axis);
  return s;
}

double GridSpec::spacing() const {
  return (upper[0] - lower[0]) / static_cast<double>(cells[0]);
}

std::int64_t GridSpec::total_cells() const {
  std::int64_t n = 1;
  for (int c : cells) n *= c;
  return n;
}

void GridSpec::validate() const {
  if (dim < 2) throw Error(ErrorCode::InvalidSpec, "dim must be >= 2");
  if (lower.size() != static_cast<std::size_t>(dim) || upper.size() != static_cast<std::size_t>(dim) ||
      cells.size() != static_cast<std::size_t>(dim))
    throw Error(ErrorCode::InvalidSpec, "lower/upper/cells must have length dim");
  for (int k = 0; k < dim; ++k) {
    auto ks = static_cast<std::size_t>(k);
    if (!(upper[ks] > lower[ks])) throw Error(ErrorCode::InvalidSpec, "upper must exceed lower on every axis");
    if (cells[ks] < 4) throw Error(ErrorCode::InvalidSpec, "need at least 4 cells per axis");
  }
  const double h0 = spacing();
  if (!(h0 > 0)) throw Error(ErrorCode::InvalidSpec, "nonpositive spacing");
  for (int k = 1; k < dim; ++k) {
    auto ks = static_cast<std::size_t>(k);
    const double hk = (upper[ks] - lower[ks]) / static_cast<double>(cells[ks]);
    if (std::abs(hk - h0) > 1e-12 * h0)
      throw Error(ErrorCode::InvalidSpec, "spacing differs across axes beyond 1e-12 relative");
  }
}

// ------------------------------------------------------------- DomainShape

DomainShape DomainShape::box() {
  DomainShape s;
  s.kind_ = Kind::Box;
  return s;
}

DomainShape DomainShape::ball(std::vector<double> center, double radius) {
  DomainShape s;
  s.kind_ = Kind::Ball;
  s.center_ = std::move(center);
  s.radius_ = radius;
  return s;
}

DomainShape DomainShape::annulus(std::vector<double> outer_center, double outer_radius,
                                 std::vector<double> inner_center, double inner_radius) {
  DomainShape s;
  s.kind_ = Kind::Annulus;
  s.center_ = std::move(outer_center);
  s.radius_ = outer_radius;
  s.inner_center_ = std::move(inner_center);
  s.inner_radius_ = inner_radius;
  return s;
}

DomainShape DomainShape::explicit_mask(std::vector<std::uint8_t> mask) {
  DomainShape s;
  s.kind_ = Kind::Explicit;
  s.mask_ = std::move(mask);
  return s;
}

namespace {

double dist2(std::span<const double> x, const std::vector<double>& c) {
  double d = 0.0;
  for (std::size_t k = 0; k < c.size(); ++k) {
    const double t = x[k] - c[k];
    d += t * t;
  }
  return d;
}

}  // namespace

bool DomainShape::contains(std::span<const double> x, const GridSpec& spec) const {
  switch (kind_) {
    case Kind::Box:
      for (int k = 0; k < spec.dim; ++k) {
        auto ks = static_cast<std::size_t>(k);
        if (!(x[ks] > spec.lower[ks] && x[ks] < spec.upper[ks])) return false;
      }
      return true;
    case Kind::Ball:
      return dist2(x, center_) < radius_ * radius_;
    case Kind::Annulus:
      return dist2(x, center_) < radius_ * radius_ && dist2(x, inner_center_) > inner_radius_ * inner_radius_;
    case Kind::Explicit:
      throw Error(ErrorCode::InvalidSpec, "explicit shapes are resolved per cell in build_grid");
  }
  return false;
}

double DomainShape::distance_to_closure(std::span<const double> x, const GridSpec& spec) const {
  switch (kind_) {
    case Kind::Box: {
      double d2 = 0.0;
      for (int k = 0; k < spec.dim; ++k) {
        auto ks = static_cast<std::size_t>(k);
        const double out = std::max({0.0, spec.lower[ks] - x[ks], x[ks] - spec.upper[ks]});
        d2 += out * out;
      }
      return std::sqrt(d2);
    }
    case Kind::Ball:
      return std::max(0.0, std::sqrt(dist2(x, center_)) - radius_);
    case Kind::Annulus: {
      const double to_outer = std::sqrt(dist2(x, center_)) - radius_;
      const double into_hole = inner_radius_ - std::sqrt(dist2(x, inner_center_));
      return std::max({0.0, to_outer, into_hole});
    }
    case Kind::Explicit:
      throw Error(ErrorCode::InvalidSpec, "explicit shapes have no analytic distance");
  }
  return 0.0;
}

double DomainShape::inside_depth(std::span<const double> x, const GridSpec& spec) const {
  switch (kind_) {
    case Kind::Box: {
      double d = std::numeric_limits<double>::infinity();
      for (int k = 0; k < spec.dim; ++k) {
        auto ks = static_cast<std::size_t>(k);
        d = std::min({d, x[ks] - spec.lower[ks], spec.upper[ks] - x[ks]});
      }
      return std::max(0.0, d);
    }
    case Kind::Ball:
      return std::max(0.0, radius_ - std::sqrt(dist2(x, center_)));
    case Kind::Annulus: {
      const double to_outer = radius_ - std::sqrt(dist2(x, center_));
      const double to_inner = std::sqrt(dist2(x, inner_center_)) - inner_radius_;
      return std::max(0.0, std::min(to_outer, to_inner));
    }
    case Kind::Explicit:
      throw Error(ErrorCode::InvalidSpec, "explicit shapes have no analytic depth");
  }
  return 0.0;
}

void DomainShape::validate(const GridSpec& spec) const {
  switch (kind_) {
    case Kind::Box:
      return;
    case Kind::Ball: {
      if (!(radius_ > 0)) throw Error(ErrorCode::InvalidRadii, "ball radius must be positive");
      if (center_.size() != static_cast<std::size_t>(spec.dim))
        throw Error(ErrorCode::InvalidSpec, "ball center dimension mismatch");
      for (int k = 0; k < spec.dim; ++k) {
        auto ks = static_cast<std::size_t>(k);
        if (!(center_[ks] - radius_ > spec.lower[ks] && center_[ks] + radius_ < spec.upper[ks]))
          throw Error(ErrorCode::ShapeDoesNotFit, "closed ball must lie strictly inside the grid box");
      }
      return;
    }
    case Kind::Annulus: {
      if (!(inner_radius_ > 0) || !(inner_radius_ < radius_))
        throw Error(ErrorCode::InvalidRadii, "annulus needs 0 < r < R");
      DomainShape outer = ball(center_, radius_);
      outer.validate(spec);
      double off = 0.0;
      for (std::size_t k = 0; k < center_.size(); ++k) {
        const double t = center_[k] - inner_center_[k];
        off += t * t;
      }
      if (!(std::sqrt(off) + inner_radius_ < radius_))
        throw Error(ErrorCode::InvalidRadii, "closed inner ball must lie inside the open outer ball");
      return;
    }
    case Kind::Explicit:
      if (mask_.size() != static_cast<std::size_t>(spec.total_cells()))
        throw Error(ErrorCode::InvalidSpec, "explicit mask size does not match the grid");
      return;
  }
}

std::string DomainShape::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case Kind::Box:
      os << "box";
      break;
    case Kind::Ball:
      os << "ball(c=";
      for (std::size_t k = 0; k < center_.size(); ++k) os << (k ? "," : "") << center_[k];
      os << ";R=" << radius_ << ")";
      break;
    case Kind::Annulus:
      os << "annulus(R=" << radius_ << ";r=" << inner_radius_ << ")";
      break;
    case Kind::Explicit:
      os << "explicit";
      break;
  }
  return os.str();
}

// ------------------------------------------------------------------- Grid

void Grid::cell_coords(std::int64_t flat, std::span<double> out) const {
  for (int k = 0; k < spec.dim; ++k) {
    auto ks = static_cast<std::size_t>(k);
    const std::int64_t idx = (flat / stride[ks]) % spec.cells[ks];
    out[ks] = center_coord(k, idx);
  }
}

std::uint64_t Grid::content_hash() const {
  std::uint64_t hash = 1469598103934665603ull;
  auto mix = [&hash](const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      hash ^= p[i];
      hash *= 1099511628211ull;
    }
  };
  mix(&spec.dim, sizeof(spec.dim));
  mix(spec.lower.data(), spec.lower.size() * sizeof(double));
  mix(spec.upper.data(), spec.upper.size() * sizeof(double));
  mix(spec.cells.data(), spec.cells.size() * sizeof(int));
  mix(interior.data(), interior.size());
  return hash;
}

GridPtr build_grid(const GridSpec& spec, const DomainShape& shape) {
  spec.validate();
  shape.validate(spec);

  auto g = std::make_shared<Grid>();
  g->spec = spec;
  g->shape = shape;
  g->h = spec.spacing();
  g->cell_volume = std::pow(g->h, spec.dim);
  g->stride.assign(static_cast<std::size_t>(spec.dim), 1);
  for (int k = spec.dim - 2; k >= 0; --k)
    g->stride[static_cast<std::size_t>(k)] =
        g->stride[static_cast<std::size_t>(k + 1)] * spec.cells[static_cast<std::size_t>(k + 1)];

  const std::int64_t total = spec.total_cells();
  g->interior.assign(static_cast<std::size_t>(total), 0);

  std::vector<double> x(static_cast<std::size_t>(spec.dim));
  std::vector<std::int64_t> idx(static_cast<std::size_t>(spec.dim));
  for (std::int64_t flat = 0; flat < total; ++flat) {
    bool frame = false;
    for (int k = 0; k < spec.dim; ++k) {
      auto ks = static_cast<std::size_t>(k);
      idx[ks] = (flat / g->stride[ks]) % spec.cells[ks];
      if (idx[ks] == 0 || idx[ks] == spec.cells[ks] - 1) frame = true;
      x[ks] = g->center_coord(k, idx[ks]);
    }
    if (frame) continue;
    bool inside;
    if (shape.kind() == DomainShape::Kind::Explicit)
      inside = shape.mask()[static_cast<std::size_t>(flat)] != 0;
    else
      inside = shape.contains(x, spec);
    if (inside) {
      g->interior[static_cast<std::size_t>(flat)] = 1;
      ++g->interior_count;
    }
  }
  if (g->interior_count == 0) throw Error(ErrorCode::EmptyInterior, "no interior cell");
  return g;
}

// ------------------------------------------------------------------ Field

void Field::clamp_to_interior() {
  const auto& mask = grid->interior;
  for (std::size_t i = 0; i < values.size(); ++i)
    if (!mask[i]) values[i] = 0.0;
}

void require_aligned(const Field& a, const Field& b) {
  if (!a.grid || !b.grid || a.grid.get() != b.grid.get())
    throw Error(ErrorCode::MisalignedField, "fields live on different grids");
}

void require_aligned(const Field& a, const GridPtr& g) {
  if (!a.grid || a.grid.get() != g.get())
    throw Error(ErrorCode::MisalignedField, "field does not live on the expected grid");
}

Field apply_laplacian(const Field& u) {
  const Grid& g = *u.grid;
  Field out(u.grid);
  const double inv_h2 = 1.0 / (g.h * g.h);
  const int dim = g.spec.dim;
  const double diag = 2.0 * dim;
  const std::int64_t total = g.total();
  for (std::int64_t i = 0; i < total; ++i) {
    if (!g.interior[static_cast<std::size_t>(i)]) continue;
    double v = diag * u[i];
    for (int k = 0; k < dim; ++k) {
      const std::int64_t s = g.stride[static_cast<std::size_t>(k)];
      v -= u[i - s] + u[i + s];  // frame guarantees both neighbors exist
    }
    out[i] = v * inv_h2;
  }
  return out;
}

double integrate(const Field& f) {
  const Grid& g = *f.grid;
  double s = 0.0;
  const std::int64_t total = g.total();
  for (std::int64_t i = 0; i < total; ++i)
    if (g.interior[static_cast<std::size_t>(i)]) s += f[i];
  return s * g.cell_volume;
}

double dirichlet_energy(const Field& u) {
  const Grid& g = *u.grid;
  const int dim = g.spec.dim;
  double e = 0.0;
  const std::int64_t total = g.total();
  for (int k = 0; k < dim; ++k) {
    const std::int64_t s = g.stride[static_cast<std::size_t>(k)];
    const std::int64_t extent = g.spec.cells[static_cast<std::size_t>(k)];
    for (std::int64_t i = 0; i < total; ++i) {
      const std::int64_t idx_k = (i / s) % extent;
      if (idx_k + 1 >= extent) continue;
      const double d = u[i + s] - u[i];
      e += d * d;
    }
  }
  return e * std::pow(g.h, dim - 2);
}

namespace {

// |x|^q with fast paths for the exponents that dominate the hot loops.
inline double abs_pow(double x, double q) {
  const double a = std::abs(x);
  if (q == 2.0) return a * a;
  if (q == 4.0) {
    const double s = a * a;
    return s * s;
  }
  if (q == 6.0) {
    const double s = a * a;
    return s * s * s;
  }
  if (a == 0.0) return 0.0;
  return std::pow(a, q);
}

}  // namespace

double lp_norm(const Field& u, double q) {
  if (!(q >= 1.0)) throw Error(ErrorCode::QOutOfRange, "lp_norm needs q >= 1");
  const Grid& g = *u.grid;
  double s = 0.0;
  const std::int64_t total = g.total();
  for (std::int64_t i = 0; i < total; ++i)
    if (g.interior[static_cast<std::size_t>(i)]) s += abs_pow(u[i], q);
  return std::pow(s * g.cell_volume, 1.0 / q);
}

double l2_inner(const Field& a, const Field& b) {
  require_aligned(a, b);
  const Grid& g = *a.grid;
  double s = 0.0;
  const std::int64_t total = g.total();
  for (std::int64_t i = 0; i < total; ++i)
    if (g.interior[static_cast<std::size_t>(i)]) s += a[i] * b[i];
  return s * g.cell_volume;
}

Field solve_poisson(const Field& rhs, double tol, int max_iters) {
  if (!(tol > 0)) throw Error(ErrorCode::InvalidSpec, "solve_poisson needs tol > 0");
  const Grid& g = *rhs.grid;
  const std::int64_t total = g.total();
  if (max_iters <= 0) {
    int n_max = 0;
    for (int c : g.spec.cells) n_max = std::max(n_max, c);
    max_iters = std::max(1000, 40 * n_max);
  }

  double rhs_norm2 = 0.0;
  for (std::int64_t i = 0; i < total; ++i)
    if (g.interior[static_cast<std::size_t>(i)]) rhs_norm2 += rhs[i] * rhs[i];
  Field x(rhs.grid);
  if (rhs_norm2 == 0.0) return x;
  const double target2 = tol * tol * rhs_norm2;

  Field r = rhs;
  r.clamp_to_interior();
  Field p = r;
  double rr = rhs_norm2;
  for (int it = 0; it < max_iters; ++it) {
    Field ap = apply_laplacian(p);
    double pap = 0.0;
    for (std::int64_t i = 0; i < total; ++i)
      if (g.interior[static_cast<std::size_t>(i)]) pap += p[i] * ap[i];
    const double alpha = rr / pap;
    double rr_next = 0.0;
    for (std::int64_t i = 0; i < total; ++i) {
      if (!g.interior[static_cast<std::size_t>(i)]) continue;
      x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
      rr_next += r[i] * r[i];
    }
    if (rr_next <= target2) return x;
    const double beta = rr_next / rr;
    rr = rr_next;
    for (std::int64_t i = 0; i < total; ++i)
      if (g.interior[static_cast<std::size_t>(i)]) p[i] = r[i] + beta * p[i];
  }
  std::ostringstream os;
  os << "conjugate gradients stalled, relative residual " << std::sqrt(rr / rhs_norm2) << " after " << max_iters
     << " iterations";
  throw Error(ErrorCode::NoConvergence, os.str());
}

Field positive_part(const Field& u) {
  Field out = u;
  for (double& v : out.values) v = std::max(v, 0.0);
  return out;
}

Field scaled(const Field& u, double c) {
  Field out = u;
  for (double& v : out.values) v *= c;
  return out;
}

Field add_scaled(const Field& u, double c, const Field& v) {
  require_aligned(u, v);
  Field out = u;
  for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] += c * v.values[i];
  return out;
}

// ------------------------------------------------------ distance transform

namespace {

// 1D lower-envelope pass of the squared-distance transform
// (Felzenszwalb-Huttenlocher). f is the per-sample squared distance, in
// units of the grid spacing.
void edt_1d(const std::vector<double>& f, std::vector<double>& out) {
  const std::size_t n = f.size();
  std::vector<int> v(n);
  std::vector<double> z(n + 1);
  int k = 0;
  v[0] = 0;
  z[0] = -std::numeric_limits<double>::infinity();
  z[1] = std::numeric_limits<double>::infinity();
  auto sq = [](double a) { return a * a; };
  for (int q = 1; q < static_cast<int>(n); ++q) {
    if (f[static_cast<std::size_t>(q)] == std::numeric_limits<double>::infinity() && k == 0 &&
        f[static_cast<std::size_t>(v[0])] == std::numeric_limits<double>::infinity()) {
      v[0] = q;
      continue;
    }
    double s;
    while (true) {
      const int p = v[static_cast<std::size_t>(k)];
      if (f[static_cast<std::size_t>(q)] == std::numeric_limits<double>::infinity()) {
        s = std::numeric_limits<double>::infinity();
        break;
      }
      if (f[static_cast<std::size_t>(p)] == std::numeric_limits<double>::infinity()) {
        s = -std::numeric_limits<double>::infinity();
      } else {
        s = (f[static_cast<std::size_t>(q)] + sq(q) - f[static_cast<std::size_t>(p)] - sq(p)) / (2.0 * (q - p));
      }
      if (s <= z[static_cast<std::size_t>(k)] && k > 0) {
        --k;
        continue;
      }
      break;
    }
    if (s == std::numeric_limits<double>::infinity()) continue;
    ++k;
    v[static_cast<std::size_t>(k)] = q;
    z[static_cast<std::size_t>(k)] = s;
    z[static_cast<std::size_t>(k + 1)] = std::numeric_limits<double>::infinity();
  }
  k = 0;
  for (int q = 0; q < static_cast<int>(n); ++q) {
    while (z[static_cast<std::size_t>(k + 1)] < q) ++k;
    const int p = v[static_cast<std::size_t>(k)];
    out[static_cast<std::size_t>(q)] =
        f[static_cast<std::size_t>(p)] == std::numeric_limits<double>::infinity()
            ? std::numeric_limits<double>::infinity()
            : sq(q - p) + f[static_cast<std::size_t>(p)];
  }
}

}  // namespace

std::vector<double> distance_to_mask(const Grid& g, const std::vector<std::uint8_t>& mask) {
  const std::int64_t total = g.total();
  std::vector<double> d2(static_cast<std::size_t>(total));
  for (std::int64_t i = 0; i < total; ++i)
    d2[static_cast<std::size_t>(i)] =
        mask[static_cast<std::size_t>(i)] ? 0.0 : std::numeric_limits<double>::infinity();

  const int dim = g.spec.dim;
  for (int k = dim - 1; k >= 0; --k) {
    const std::int64_t s = g.stride[static_cast<std::size_t>(k)];
    const std::int64_t extent = g.spec.cells[static_cast<std::size_t>(k)];
    const std::int64_t lines = total / extent;
    std::vector<double> line(static_cast<std::size_t>(extent)), out(static_cast<std::size_t>(extent));
    for (std::int64_t l = 0; l < lines; ++l) {
      // base index of this line: enumerate all cells with axis-k index 0
      const std::int64_t outer = l / s;
      const std::int64_t inner = l % s;
      const std::int64_t base = outer * s * extent + inner;
      for (std::int64_t j = 0; j < extent; ++j) line[static_cast<std::size_t>(j)] = d2[static_cast<std::size_t>(base + j * s)];
      edt_1d(line, out);
      for (std::int64_t j = 0; j < extent; ++j) d2[static_cast<std::size_t>(base + j * s)] = out[static_cast<std::size_t>(j)];
    }
  }
  for (double& v : d2) v = std::sqrt(v) * g.h;
  return d2;
}

}  // namespace varcrit
