#include "varcrit/snapshot.hpp"

#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

namespace varcrit {

namespace {

std::string exact(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_header(std::ostream& os, const Grid& g) {
  os << "# varcrit field snapshot v1\n";
  os << "# dim=" << g.spec.dim;
  os << " lower=";
  for (int k = 0; k < g.spec.dim; ++k) os << (k ? "," : "") << exact(g.spec.lower[static_cast<std::size_t>(k)]);
  os << " upper=";
  for (int k = 0; k < g.spec.dim; ++k) os << (k ? "," : "") << exact(g.spec.upper[static_cast<std::size_t>(k)]);
  os << " cells=";
  for (int k = 0; k < g.spec.dim; ++k) os << (k ? "," : "") << g.spec.cells[static_cast<std::size_t>(k)];
  os << " h=" << exact(g.h) << "\n";
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  parts.push_back(cur);
  return parts;
}

std::string header_value(const std::string& line, const std::string& key) {
  const std::string tag = key + "=";
  const auto pos = line.find(tag);
  if (pos == std::string::npos) throw Error(ErrorCode::IoError, "snapshot header missing " + key);
  const auto start = pos + tag.size();
  auto end = line.find(' ', start);
  if (end == std::string::npos) end = line.size();
  return line.substr(start, end - start);
}

}  // namespace

void write_field_snapshot(std::ostream& os, const Field& u) {
  const Grid& g = *u.grid;
  write_header(os, g);
  os << "# columns: index";
  for (int k = 0; k < g.spec.dim; ++k) os << " x" << (k + 1);
  os << " value\n";
  std::vector<double> x(static_cast<std::size_t>(g.spec.dim));
  for (std::int64_t i = 0; i < g.total(); ++i) {
    if (!g.interior[static_cast<std::size_t>(i)]) continue;
    g.cell_coords(i, x);
    os << i;
    for (double c : x) os << ' ' << exact(c);
    os << ' ' << exact(u[i]) << '\n';
  }
}

void write_field_snapshot(const std::string& path, const Field& u) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorCode::IoError, "cannot open " + path);
  write_field_snapshot(os, u);
}

Field read_field_snapshot(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("# varcrit field snapshot", 0) != 0)
    throw Error(ErrorCode::IoError, "not a field snapshot");
  if (!std::getline(is, line)) throw Error(ErrorCode::IoError, "truncated snapshot header");

  GridSpec spec;
  spec.dim = std::stoi(header_value(line, "dim"));
  for (const auto& part : split(header_value(line, "lower"), ',')) spec.lower.push_back(std::stod(part));
  for (const auto& part : split(header_value(line, "upper"), ',')) spec.upper.push_back(std::stod(part));
  for (const auto& part : split(header_value(line, "cells"), ',')) spec.cells.push_back(std::stoi(part));
  spec.validate();

  std::vector<std::pair<std::int64_t, double>> rows;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    std::int64_t idx = 0;
    row >> idx;
    double coord = 0.0, value = 0.0;
    for (int k = 0; k < spec.dim; ++k) row >> coord;
    row >> value;
    if (!row) throw Error(ErrorCode::IoError, "malformed snapshot row");
    rows.emplace_back(idx, value);
  }

  std::vector<std::uint8_t> mask(static_cast<std::size_t>(spec.total_cells()), 0);
  for (const auto& [idx, value] : rows) {
    if (idx < 0 || idx >= spec.total_cells()) throw Error(ErrorCode::IoError, "snapshot index out of range");
    mask[static_cast<std::size_t>(idx)] = 1;
  }
  const GridPtr g = build_grid(spec, DomainShape::explicit_mask(std::move(mask)));
  Field u(g);
  for (const auto& [idx, value] : rows) u[idx] = value;
  u.clamp_to_interior();
  return u;
}

Field read_field_snapshot(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::IoError, "cannot open " + path);
  return read_field_snapshot(is);
}

void write_exponent_snapshot(std::ostream& os, const ExponentField& pf) {
  const Grid& g = *pf.grid;
  write_header(os, g);
  os << "# delta=" << exact(pf.delta) << " p_minus=" << exact(pf.p_minus) << " p_plus=" << exact(pf.p_plus)
     << " omega=" << (pf.degenerate_constant ? "whole-domain" : "core-region") << "\n";
  os << "# columns: index";
  for (int k = 0; k < g.spec.dim; ++k) os << " x" << (k + 1);
  os << " p\n";
  std::vector<double> x(static_cast<std::size_t>(g.spec.dim));
  for (std::int64_t i = 0; i < g.total(); ++i) {
    if (!g.interior[static_cast<std::size_t>(i)]) continue;
    g.cell_coords(i, x);
    os << i;
    for (double c : x) os << ' ' << exact(c);
    os << ' ' << exact(pf.p[static_cast<std::size_t>(i)]) << '\n';
  }
}

void write_exponent_snapshot(const std::string& path, const ExponentField& pf) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorCode::IoError, "cannot open " + path);
  write_exponent_snapshot(os, pf);
}

}  // namespace varcrit
