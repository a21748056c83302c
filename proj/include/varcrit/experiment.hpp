#pragma once

#include <optional>
#include <string>
#include <vector>

#include "varcrit/constants.hpp"
#include "varcrit/nehari.hpp"

namespace varcrit {

struct ShapeConfig {
  std::string shape;  // "box" | "ball" | "annulus"
  std::vector<double> center;
  double radius = 0.0;
  std::vector<double> inner_center;
  double inner_radius = 0.0;

  DomainShape to_shape(int dim) const;
};

struct URegionConfig {
  ShapeConfig region;
  double q = 0.0;
  double box_halfwidth = 0.0;  // subgrid used for its embedding constants
  int cells_per_axis = 0;
};

struct ExponentConfig {
  std::string kind;  // "ramp" | "constant"
  ShapeConfig omega;
  double delta = 0.0;
  double p_inner = 0.0;
  double ramp_power = 1.0;
  double q = 0.0;  // constant kind
};

struct SolverConfig {
  double step = 1.0;
  double tol_dual = 1e-5;
  double tol_constraint = 1e-10;
  int max_iters = 400;
  std::uint64_t seed = 1;
  std::string init = "random-bump";  // "random-bump" | "instanton"
  int starts = 1;
  double cg_tol = 1e-8;
};

struct ExperimentConfig {
  std::string task;  // "ground-state" | "constants-sweep" | "threshold-probe" | "validate"
  std::string name;
  int dim = 3;
  double box_halfwidth = 0.0;
  int cells_per_axis = 0;
  ShapeConfig domain;
  ExponentConfig exponent;
  std::optional<URegionConfig> u_region;
  SolverConfig solver;
  std::vector<double> probe_k;
  std::vector<double> sweep_q;
  bool certify_h2 = false;
  std::string output_dir;  // empty = no artifacts

  static ExperimentConfig from_json_text(const std::string& text);
  static ExperimentConfig from_file(const std::string& path);
  void validate() const;
};

struct ReportRow {
  std::string task;
  std::optional<double> m;
  std::optional<double> threshold;       // S^{dim/2}/dim
  std::optional<double> eta;
  std::optional<double> lower_bound;     // (1/2 - 1/p-) eta^2
  std::optional<double> s2_u;
  std::optional<double> qbar_value;
  std::optional<double> g_qu;
  std::optional<double> dual_residual;
  std::optional<double> constraint_residual;
  double wall_time_s = 0.0;
  std::string grid_hash;
  // inequality flags; empty string when not applicable
  std::string flag_lower;   // lower_bound <= m
  std::string flag_upper;   // m < threshold
  std::string flag_s2u;     // s2_u < 1
  std::string flag_h1;
  std::string flag_h2;
  std::string flag_probe;   // probe: final energy below threshold and t <= 1.05

  bool any_fail() const;
};

std::string report_csv_header();
std::string report_csv_row(const ReportRow& row);
std::string report_json(const std::vector<ReportRow>& rows, bool include_wall_time);

/// Executes one configuration; deterministic given the config (seeded
/// randomness, serial reductions). Writes snapshots/CSVs under
/// config.output_dir when set.
std::vector<ReportRow> run_experiment(const ExperimentConfig& config);

/// One run per value of the named parameter; rows gain the parameter
/// column in the returned CSV text. Recognized names: q, R, delta,
/// p_inner, ramp_power, cells_per_axis, box_halfwidth, seed.
std::string sweep_experiment(const ExperimentConfig& base, const std::string& param,
                             const std::vector<double>& values, std::vector<ReportRow>* rows_out = nullptr);

}  // namespace varcrit
