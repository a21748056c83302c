#pragma once

#include <iosfwd>
#include <string>

#include "varcrit/exponent.hpp"
#include "varcrit/grid.hpp"

namespace varcrit {

/// Field snapshot: one-line header carrying the grid spec, then one row
/// "index x1 ... x_dim value" per interior cell. Values round-trip exactly
/// (shortest-exact formatting). The layout is documented in the README and
/// stable across versions.
void write_field_snapshot(std::ostream& os, const Field& u);
void write_field_snapshot(const std::string& path, const Field& u);

/// Reads a snapshot back; requires nothing but the stream (grid is rebuilt
/// from the header, shape recorded as an explicit mask of the listed cells).
Field read_field_snapshot(std::istream& is);
Field read_field_snapshot(const std::string& path);

/// Exponent snapshot: the field table with an extra p column and header
/// lines carrying delta, p bounds, and the core-region descriptor.
void write_exponent_snapshot(std::ostream& os, const ExponentField& pf);
void write_exponent_snapshot(const std::string& path, const ExponentField& pf);

}  // namespace varcrit
