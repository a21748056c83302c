#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "varcrit/error.hpp"

namespace varcrit {

/// Uniform tensor-product discretization of a box. Values live at cell
/// centers; the spacing h must be identical on every axis (1e-12 relative).
struct GridSpec {
  int dim = 3;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<int> cells;

  /// Centered box [-halfwidth, halfwidth]^dim with n cells per axis.
  static GridSpec centered_box(int dim, double halfwidth, int cells_per_axis);

  double spacing() const;  // uniform h
  std::int64_t total_cells() const;
  void validate() const;  // throws Error(InvalidSpec)
};

/// Geometric domain inside the grid box. Membership and distances are
/// analytic for box/ball/annulus; explicit masks fall back to cell data.
class DomainShape {
 public:
  enum class Kind { Box, Ball, Annulus, Explicit };

  static DomainShape box();
  static DomainShape ball(std::vector<double> center, double radius);
  static DomainShape annulus(std::vector<double> outer_center, double outer_radius,
                             std::vector<double> inner_center, double inner_radius);
  static DomainShape explicit_mask(std::vector<std::uint8_t> mask);

  Kind kind() const { return kind_; }
  const std::vector<double>& center() const { return center_; }
  double radius() const { return radius_; }
  const std::vector<double>& inner_center() const { return inner_center_; }
  double inner_radius() const { return inner_radius_; }
  const std::vector<std::uint8_t>& mask() const { return mask_; }

  /// True iff x lies in the open domain. Explicit masks are resolved per
  /// cell in build_grid, not here.
  bool contains(std::span<const double> x, const GridSpec& spec) const;

  /// dist(x, closure of the domain); zero inside. Analytic for
  /// box/ball/annulus, unsupported for explicit masks (callers use the
  /// grid distance transform instead).
  double distance_to_closure(std::span<const double> x, const GridSpec& spec) const;

  /// Distance from an inside point to the domain boundary (depth).
  double inside_depth(std::span<const double> x, const GridSpec& spec) const;

  /// Throws ShapeDoesNotFit / InvalidRadii when the shape violates its
  /// invariants or does not fit strictly inside the grid box.
  void validate(const GridSpec& spec) const;

  std::string describe() const;

 private:
  Kind kind_ = Kind::Box;
  std::vector<double> center_, inner_center_;
  double radius_ = 0.0, inner_radius_ = 0.0;
  std::vector<std::uint8_t> mask_;
};

/// Immutable discretized domain: spec, interior mask (Dirichlet frame
/// forced false on the outermost cell layer), strides for neighbor
/// arithmetic. Shared read-only between fields; all operations on it are
/// pure, so concurrent use is safe.
class Grid {
 public:
  GridSpec spec;
  DomainShape shape;
  std::vector<std::uint8_t> interior;
  std::vector<std::int64_t> stride;
  double h = 0.0;
  double cell_volume = 0.0;
  std::int64_t interior_count = 0;

  std::int64_t total() const { return static_cast<std::int64_t>(interior.size()); }
  bool is_interior(std::int64_t flat) const { return interior[static_cast<std::size_t>(flat)] != 0; }

  double center_coord(int axis, std::int64_t index_on_axis) const {
    return spec.lower[static_cast<std::size_t>(axis)] + (static_cast<double>(index_on_axis) + 0.5) * h;
  }
  void cell_coords(std::int64_t flat, std::span<double> out) const;

  /// FNV-1a over the spec and interior mask; identifies a grid in reports.
  std::uint64_t content_hash() const;
};

using GridPtr = std::shared_ptr<const Grid>;

GridPtr build_grid(const GridSpec& spec, const DomainShape& shape);

/// Cell values aligned with a grid; zero at every non-interior cell.
class Field {
 public:
  Field() = default;
  explicit Field(GridPtr g) : grid(std::move(g)), values(grid->interior.size(), 0.0) {}

  GridPtr grid;
  std::vector<double> values;

  double& operator[](std::int64_t i) { return values[static_cast<std::size_t>(i)]; }
  double operator[](std::int64_t i) const { return values[static_cast<std::size_t>(i)]; }

  /// Zeroes every non-interior cell (restores the Dirichlet invariant).
  void clamp_to_interior();
};

void require_aligned(const Field& a, const Field& b);
void require_aligned(const Field& a, const GridPtr& g);

// -Delta_h u with the (2*dim+1)-point stencil; Dirichlet zero outside the
// interior mask, output zero on non-interior cells.
Field apply_laplacian(const Field& u);

double integrate(const Field& f);              // cell_volume * sum over interior
double dirichlet_energy(const Field& u);       // ||u||_{1,2}^2, all-faces forward differences
double lp_norm(const Field& u, double q);      // (integrate |u|^q)^{1/q}, q >= 1
double l2_inner(const Field& a, const Field& b);  // cell_volume * <a,b>

/// Conjugate gradients for -Delta_h v = rhs on the interior, relative
/// tolerance on the l2 residual. Deterministic. Throws NoConvergence with
/// the residual in the message if max_iters is exhausted.
Field solve_poisson(const Field& rhs, double tol, int max_iters = 0);

/// Elementwise max(u, 0).
Field positive_part(const Field& u);

/// axpy-style helpers (alignment-checked).
Field scaled(const Field& u, double c);
Field add_scaled(const Field& u, double c, const Field& v);  // u + c*v

/// Exact squared Euclidean distance transform (per-cell, to the nearest
/// true cell center). Used for explicit-mask exponent ramps.
std::vector<double> distance_to_mask(const Grid& g, const std::vector<std::uint8_t>& mask);

}  // namespace varcrit
