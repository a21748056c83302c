#include "varcrit/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "varcrit/snapshot.hpp"

namespace varcrit {

namespace {

using nlohmann::json;

std::string fmt12(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string opt_str(const std::optional<double>& v) { return v ? fmt12(*v) : std::string(); }

ShapeConfig parse_shape(const json& j) {
  ShapeConfig s;
  s.shape = j.at("shape").get<std::string>();
  if (j.contains("center")) s.center = j.at("center").get<std::vector<double>>();
  if (j.contains("radius")) s.radius = j.at("radius").get<double>();
  if (j.contains("inner_center")) s.inner_center = j.at("inner_center").get<std::vector<double>>();
  if (j.contains("inner_radius")) s.inner_radius = j.at("inner_radius").get<double>();
  return s;
}

}  // namespace

DomainShape ShapeConfig::to_shape(int dim) const {
  auto padded = [dim](std::vector<double> v) {
    if (v.empty()) v.assign(static_cast<std::size_t>(dim), 0.0);
    return v;
  };
  if (shape == "box") return DomainShape::box();
  if (shape == "ball") return DomainShape::ball(padded(center), radius);
  if (shape == "annulus")
    return DomainShape::annulus(padded(center), radius, padded(inner_center), inner_radius);
  throw Error(ErrorCode::InvalidConfig, "unknown shape '" + shape + "'");
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("config parse failure: ") + e.what());
  }

  ExperimentConfig c;
  c.task = j.at("task").get<std::string>();
  c.name = j.value("name", c.task);
  c.dim = j.value("dim", 3);
  c.box_halfwidth = j.at("box_halfwidth").get<double>();
  c.cells_per_axis = j.at("cells_per_axis").get<int>();
  c.domain = j.contains("domain") ? parse_shape(j.at("domain")) : ShapeConfig{"box", {}, 0.0, {}, 0.0};

  if (j.contains("exponent")) {
    const json& e = j.at("exponent");
    c.exponent.kind = e.at("kind").get<std::string>();
    if (c.exponent.kind == "ramp") {
      c.exponent.omega = parse_shape(e.at("omega"));
      c.exponent.delta = e.at("delta").get<double>();
      c.exponent.p_inner = e.at("p_inner").get<double>();
      c.exponent.ramp_power = e.value("ramp_power", 1.0);
    } else if (c.exponent.kind == "constant") {
      c.exponent.q = e.at("q").get<double>();
    } else {
      throw Error(ErrorCode::InvalidConfig, "exponent.kind must be 'ramp' or 'constant'");
    }
  }

  if (j.contains("u_region")) {
    URegionConfig u;
    u.region = parse_shape(j.at("u_region"));
    u.q = j.at("u_region").at("q").get<double>();
    u.box_halfwidth = j.at("u_region").value("box_halfwidth", 0.0);
    u.cells_per_axis = j.at("u_region").value("cells_per_axis", 0);
    c.u_region = u;
  }

  if (j.contains("solver")) {
    const json& s = j.at("solver");
    c.solver.step = s.value("step", 1.0);
    c.solver.tol_dual = s.value("tol_dual", 1e-5);
    c.solver.tol_constraint = s.value("tol_constraint", 1e-10);
    c.solver.max_iters = s.value("max_iters", 400);
    c.solver.seed = s.value("seed", std::uint64_t{1});
    c.solver.init = s.value("init", std::string("random-bump"));
    c.solver.starts = s.value("starts", 1);
    c.solver.cg_tol = s.value("cg_tol", 1e-8);
  }

  if (j.contains("probe")) c.probe_k = j.at("probe").at("k_values").get<std::vector<double>>();
  if (j.contains("sweep_q")) c.sweep_q = j.at("sweep_q").get<std::vector<double>>();
  c.certify_h2 = j.value("certify_h2", false);
  c.output_dir = j.value("output_dir", std::string());
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::IoError, "cannot open config " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return from_json_text(buf.str());
}

void ExperimentConfig::validate() const {
  if (task != "ground-state" && task != "constants-sweep" && task != "threshold-probe" && task != "validate")
    throw Error(ErrorCode::InvalidConfig, "unrecognized task '" + task + "'");
  if (!(box_halfwidth > 0) || cells_per_axis < 4)
    throw Error(ErrorCode::InvalidConfig, "box_halfwidth must be positive and cells_per_axis >= 4");
  if (task == "threshold-probe" && probe_k.empty())
    throw Error(ErrorCode::InvalidConfig, "threshold-probe needs probe.k_values");
  if (task == "constants-sweep" && sweep_q.empty())
    throw Error(ErrorCode::InvalidConfig, "constants-sweep needs sweep_q");
  if (task == "ground-state" && exponent.kind.empty())
    throw Error(ErrorCode::InvalidConfig, "ground-state needs an exponent block");
}

bool ReportRow::any_fail() const {
  for (const std::string* f : {&flag_lower, &flag_upper, &flag_s2u, &flag_h1, &flag_h2, &flag_probe})
    if (*f == "fail") return true;
  return false;
}

std::string report_csv_header() {
  return "task,m,threshold,eta,lower_bound,s2_u,qbar,g_qu,dual_residual,constraint_residual,"
         "wall_time_s,grid_hash,flag_lower,flag_upper,flag_s2u,flag_h1,flag_h2,flag_probe";
}

std::string report_csv_row(const ReportRow& r) {
  std::ostringstream os;
  os << r.task << ',' << opt_str(r.m) << ',' << opt_str(r.threshold) << ',' << opt_str(r.eta) << ','
     << opt_str(r.lower_bound) << ',' << opt_str(r.s2_u) << ',' << opt_str(r.qbar_value) << ','
     << opt_str(r.g_qu) << ',' << opt_str(r.dual_residual) << ',' << opt_str(r.constraint_residual) << ','
     << fmt12(r.wall_time_s) << ',' << r.grid_hash << ',' << r.flag_lower << ',' << r.flag_upper << ','
     << r.flag_s2u << ',' << r.flag_h1 << ',' << r.flag_h2 << ',' << r.flag_probe;
  return os.str();
}

std::string report_json(const std::vector<ReportRow>& rows, bool include_wall_time) {
  json arr = json::array();
  for (const ReportRow& r : rows) {
    json o;
    o["task"] = r.task;
    auto put = [&o](const char* key, const std::optional<double>& v) {
      if (v) o[key] = fmt12(*v);
    };
    put("m", r.m);
    put("threshold", r.threshold);
    put("eta", r.eta);
    put("lower_bound", r.lower_bound);
    put("s2_u", r.s2_u);
    put("qbar", r.qbar_value);
    put("g_qu", r.g_qu);
    put("dual_residual", r.dual_residual);
    put("constraint_residual", r.constraint_residual);
    if (include_wall_time) o["wall_time_s"] = fmt12(r.wall_time_s);
    o["grid_hash"] = r.grid_hash;
    auto flag = [&o](const char* key, const std::string& v) {
      if (!v.empty()) o[key] = v;
    };
    flag("flag_lower", r.flag_lower);
    flag("flag_upper", r.flag_upper);
    flag("flag_s2u", r.flag_s2u);
    flag("flag_h1", r.flag_h1);
    flag("flag_h2", r.flag_h2);
    flag("flag_probe", r.flag_probe);
    arr.push_back(o);
  }
  return arr.dump(2);
}

namespace {

std::string hash_hex(std::uint64_t h) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

struct BuiltProblem {
  GridPtr grid;
  ExponentField pf;
};

BuiltProblem build_problem(const ExperimentConfig& c) {
  const GridSpec spec = GridSpec::centered_box(c.dim, c.box_halfwidth, c.cells_per_axis);
  BuiltProblem out;
  out.grid = build_grid(spec, c.domain.to_shape(c.dim));
  if (c.exponent.kind == "ramp") {
    out.pf = build_exponent(out.grid, c.exponent.omega.to_shape(c.dim), c.exponent.delta, c.exponent.p_inner,
                            c.exponent.ramp_power);
  } else if (c.exponent.kind == "constant") {
    out.pf = build_constant_exponent(out.grid, c.exponent.q);
  } else {
    throw Error(ErrorCode::InvalidConfig, "task needs an exponent block");
  }
  if (c.u_region) attach_u_region(out.pf, c.u_region->region.to_shape(c.dim), c.u_region->q);
  return out;
}

GridPtr build_u_grid(const ExperimentConfig& c) {
  if (!c.u_region) throw Error(ErrorCode::MissingURegion, "config has no u_region");
  const URegionConfig& u = *c.u_region;
  double halfwidth = u.box_halfwidth;
  int cells = u.cells_per_axis;
  if (halfwidth <= 0) halfwidth = 1.1 * u.region.radius;
  if (cells <= 0) cells = 32;
  const GridSpec spec = GridSpec::centered_box(c.dim, halfwidth, cells);
  // subgrid centered on the region
  GridSpec shifted = spec;
  ShapeConfig centered = u.region;
  if (!centered.center.empty()) {
    for (int k = 0; k < c.dim; ++k) {
      const auto ks = static_cast<std::size_t>(k);
      shifted.lower[ks] += centered.center[ks];
      shifted.upper[ks] += centered.center[ks];
    }
  }
  return build_grid(shifted, u.region.to_shape(c.dim));
}

std::string flag(bool pass) { return pass ? "pass" : "fail"; }

void write_text(const std::string& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorCode::IoError, "cannot open " + path);
  os << text;
}

ReportRow run_ground_state(const ExperimentConfig& c) {
  BuiltProblem prob = build_problem(c);
  ReportRow row;
  row.task = c.name;
  row.grid_hash = hash_hex(prob.grid->content_hash());
  const double threshold = std::pow(sobolev_constant(c.dim), c.dim / 2.0) / c.dim;
  row.threshold = threshold;

  const ValidationReport h1 = validate_h1(prob.pf);
  row.flag_h1 = flag(h1.pass);
  const AprioriConstants ap = apriori_constants(c.dim, prob.pf.p_minus, h1.omega_delta_measure);
  row.eta = ap.eta;
  row.lower_bound = (0.5 - 1.0 / prob.pf.p_minus) * ap.eta * ap.eta;

  SolverOptions opts;
  opts.step = c.solver.step;
  opts.tol_dual = c.solver.tol_dual;
  opts.tol_constraint = c.solver.tol_constraint;
  opts.max_iters = c.solver.max_iters;
  opts.seed = c.solver.seed;
  opts.cg_tol = c.solver.cg_tol;
  opts.init = c.solver.init == "instanton" ? InitKind::Instanton : InitKind::RandomBump;
  const GroundState gs = minimize_multistart(prob.pf, opts, std::max(1, c.solver.starts));

  row.m = gs.m;
  row.dual_residual = gs.dual_residual;
  row.constraint_residual = gs.constraint_residual;
  row.flag_lower = flag(*row.lower_bound <= gs.m);
  row.flag_upper = flag(gs.m < threshold);

  if (c.u_region) {
    const GridPtr ug = build_u_grid(c);
    const BestConstant s2u = s2(ug, 1e-8);
    row.s2_u = s2u.value;
    row.flag_s2u = flag(s2u.value < 1.0);
    if (c.certify_h2) {
      const QBarResult qb = qbar(ug, 1e-4);
      row.qbar_value = qb.qbar;
      const BestConstant at_q = sq(ug, c.u_region->q, 1e-7, c.solver.seed);
      row.g_qu = g_value(at_q.value, c.u_region->q);
      const ValidationReport h2 = validate_h2(prob.pf, s2u.value, qb.qbar);
      row.flag_h2 = flag(h2.pass);
    }
  }

  if (!c.output_dir.empty()) {
    std::filesystem::create_directories(c.output_dir);
    write_field_snapshot(c.output_dir + "/ground_state.field", gs.u);
    json summary;
    summary["m"] = fmt12(gs.m);
    summary["dual_residual"] = fmt12(gs.dual_residual);
    summary["constraint_residual"] = fmt12(gs.constraint_residual);
    summary["iterations"] = gs.iterations;
    summary["converged"] = gs.converged;
    summary["seed"] = c.solver.seed;
    summary["starts"] = c.solver.starts;
    summary["grid_hash"] = row.grid_hash;
    write_text(c.output_dir + "/run_summary.json", summary.dump(2));
  }
  return row;
}

ReportRow run_validate(const ExperimentConfig& c) {
  BuiltProblem prob = build_problem(c);
  ReportRow row;
  row.task = c.name;
  row.grid_hash = hash_hex(prob.grid->content_hash());
  row.threshold = std::pow(sobolev_constant(c.dim), c.dim / 2.0) / c.dim;

  const ValidationReport h1 = validate_h1(prob.pf);
  row.flag_h1 = flag(h1.pass);
  if (h1.pass && !prob.pf.degenerate_constant) {
    const AprioriConstants ap = apriori_constants(c.dim, prob.pf.p_minus, h1.omega_delta_measure);
    row.eta = ap.eta;
    row.lower_bound = (0.5 - 1.0 / prob.pf.p_minus) * ap.eta * ap.eta;
  }

  if (c.u_region) {
    const GridPtr ug = build_u_grid(c);
    const BestConstant s2u = s2(ug, 1e-8);
    row.s2_u = s2u.value;
    row.flag_s2u = flag(s2u.value < 1.0);
    double qb_value = critical_exponent(c.dim);
    if (c.certify_h2) {
      const QBarResult qb = qbar(ug, 1e-4);
      qb_value = qb.qbar;
      row.qbar_value = qb.qbar;
      const BestConstant at_q = sq(ug, c.u_region->q, 1e-7, c.solver.seed);
      row.g_qu = g_value(at_q.value, c.u_region->q);
    }
    const ValidationReport h2 = validate_h2(prob.pf, s2u.value, qb_value);
    row.flag_h2 = flag(h2.pass);
  }

  if (!c.output_dir.empty()) {
    std::filesystem::create_directories(c.output_dir);
    write_exponent_snapshot(c.output_dir + "/exponent.snapshot", prob.pf);
  }
  return row;
}

ReportRow run_threshold_probe(const ExperimentConfig& c, std::string* csv_out) {
  BuiltProblem prob = build_problem(c);
  ReportRow row;
  row.task = c.name;
  row.grid_hash = hash_hex(prob.grid->content_hash());
  const double threshold = std::pow(sobolev_constant(c.dim), c.dim / 2.0) / c.dim;
  row.threshold = threshold;
  row.flag_h1 = flag(validate_h1(prob.pf).pass);

  const std::vector<ThresholdProbeRow> rows = instanton_threshold_probe(prob.pf, c.probe_k);
  std::ostringstream csv;
  csv << "k,t,energy\n";
  bool t_ok = true;
  for (const auto& r : rows) {
    csv << fmt12(r.k) << ',' << fmt12(r.t) << ',' << fmt12(r.energy) << '\n';
    t_ok = t_ok && r.t <= 1.05;
  }
  const bool below = !rows.empty() && rows.back().energy < threshold;
  row.flag_probe = flag(below && t_ok);
  row.m = rows.empty() ? std::optional<double>{} : std::optional<double>{rows.back().energy};
  if (csv_out) *csv_out = csv.str();
  if (!c.output_dir.empty()) {
    std::filesystem::create_directories(c.output_dir);
    write_text(c.output_dir + "/threshold_probe.csv", csv.str());
  }
  return row;
}

ReportRow run_constants_sweep(const ExperimentConfig& c, std::string* csv_out) {
  const GridSpec spec = GridSpec::centered_box(c.dim, c.box_halfwidth, c.cells_per_axis);
  const GridPtr g = build_grid(spec, c.domain.to_shape(c.dim));
  ReportRow row;
  row.task = c.name;
  row.grid_hash = hash_hex(g->content_hash());
  const double S = sobolev_constant(c.dim);
  const double p_crit = critical_exponent(c.dim);
  row.threshold = std::pow(S, c.dim / 2.0) / c.dim;

  std::ostringstream csv;
  csv << "q,S_q,g\n";
  const Field* warm = nullptr;
  Field prev;
  for (double q : c.sweep_q) {
    BestConstant bc = sq(g, q, 1e-7, c.solver.seed, warm);
    double value = bc.value;
    if (q > 2.0 && p_crit - q <= 0.05) value = std::min(value, S);
    csv << fmt12(q) << ',' << fmt12(value) << ',' << (q > 2.0 ? fmt12(g_value(value, q)) : std::string()) << '\n';
    prev = std::move(bc.extremal);
    warm = &prev;
  }
  if (csv_out) *csv_out = csv.str();
  if (!c.output_dir.empty()) {
    std::filesystem::create_directories(c.output_dir);
    write_text(c.output_dir + "/g_curve.csv", csv.str());
  }
  return row;
}

}  // namespace

std::vector<ReportRow> run_experiment(const ExperimentConfig& c) {
  c.validate();
  const auto t0 = std::chrono::steady_clock::now();
  ReportRow row;
  if (c.task == "ground-state")
    row = run_ground_state(c);
  else if (c.task == "validate")
    row = run_validate(c);
  else if (c.task == "threshold-probe")
    row = run_threshold_probe(c, nullptr);
  else
    row = run_constants_sweep(c, nullptr);
  row.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  std::vector<ReportRow> rows{row};
  if (!c.output_dir.empty()) {
    std::filesystem::create_directories(c.output_dir);
    std::ostringstream csv;
    csv << report_csv_header() << '\n' << report_csv_row(row) << '\n';
    write_text(c.output_dir + "/report.csv", csv.str());
    write_text(c.output_dir + "/report.json", report_json(rows, true));
  }
  return rows;
}

std::string sweep_experiment(const ExperimentConfig& base, const std::string& param,
                             const std::vector<double>& values, std::vector<ReportRow>* rows_out) {
  std::ostringstream csv;
  csv << param << ',' << report_csv_header() << '\n';
  for (double v : values) {
    ExperimentConfig c = base;
    c.output_dir.clear();  // artifacts only for single runs
    if (param == "q") {
      if (c.exponent.kind != "constant")
        throw Error(ErrorCode::UnknownParameter, "q sweeps need a constant-exponent config");
      c.exponent.q = v;
    } else if (param == "R") {
      c.domain.radius = v;
    } else if (param == "delta") {
      c.exponent.delta = v;
    } else if (param == "p_inner") {
      c.exponent.p_inner = v;
    } else if (param == "ramp_power") {
      c.exponent.ramp_power = v;
    } else if (param == "cells_per_axis") {
      c.cells_per_axis = static_cast<int>(v);
    } else if (param == "box_halfwidth") {
      c.box_halfwidth = v;
    } else if (param == "seed") {
      c.solver.seed = static_cast<std::uint64_t>(v);
    } else {
      throw Error(ErrorCode::UnknownParameter, "unrecognized sweep parameter '" + param + "'");
    }
    const std::vector<ReportRow> rows = run_experiment(c);
    for (const ReportRow& r : rows) {
      csv << fmt12(v) << ',' << report_csv_row(r) << '\n';
      if (rows_out) rows_out->push_back(r);
    }
  }
  if (!base.output_dir.empty()) {
    std::filesystem::create_directories(base.output_dir);
    write_text(base.output_dir + "/sweep_" + param + ".csv", csv.str());
  }
  return csv.str();
}

}  // namespace varcrit
