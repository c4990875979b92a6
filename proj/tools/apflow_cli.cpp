// apflow command-line driver.
//
//   apflow run --case sod --order 2 --end-time 0.2
//   apflow run --manifest runs/lid.json --cells 32
//   apflow converge --case sod --resolutions 100,200,400
//   apflow compare-explicit --case sod
//   apflow export-case --case all --output cases
//
// Data go to files; progress and errors go to stderr. Exit codes: 0 success,
// 2 configuration error, 3 solver failure, 1 anything else (I/O included).

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "apflow/apflow.hpp"

namespace fs = std::filesystem;
using namespace apflow;

namespace {

constexpr int kExitOther = 1;
constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;

struct CaseFlags {
  std::string case_ref;
  std::optional<int> cells;
  std::optional<double> dt, cfl, alpha, epsilon, end_time, newton_tol;
  std::optional<int> order;
  bool general_eos = false;
  std::string output;
  int threads = 0;  // 0: not given

  void attach(CLI::App* app, bool with_cells = true) {
    app->add_option("--case", case_ref, "built-in case name or path to a JSON case file");
    if (with_cells) app->add_option("--cells", cells, "cells along x (2D grids keep square cells)");
    app->add_option("--dt", dt, "fixed time step, in the case file's units");
    app->add_option("--cfl", cfl, "CFL number (drops a fixed dt unless --dt is also given)");
    app->add_option("--alpha", alpha, "share of the pressure gradient kept explicit");
    app->add_option("--epsilon", epsilon, "Mach parameter (scaled cases only)");
    app->add_option("--order", order, "spatial order, 1 or 2");
    app->add_option("--end-time", end_time, "final time, in the case file's units");
    app->add_option("--newton-tol", newton_tol, "Newton tolerance for the general-EOS path");
    app->add_flag("--general-eos", general_eos, "route the equation of state through the Newton path");
    app->add_option("--output", output, "output directory (default: $APFLOW_OUTPUT_DIR or ./apflow_output)");
    app->add_option("--threads", threads, "worker threads (1 is the deterministic reference)");
  }

  void merge_into(RunManifest& m) const {
    if (!case_ref.empty()) m.case_ref = case_ref;
    CaseOverrides& o = m.overrides;
    if (cells) o.cells = cells;
    if (dt) o.dt = dt;
    if (cfl) o.cfl = cfl;
    if (alpha) o.alpha = alpha;
    if (epsilon) o.epsilon = epsilon;
    if (order) o.order = order;
    if (end_time) o.end_time = end_time;
    if (newton_tol) o.newton_tolerance = newton_tol;
    if (general_eos) m.general_eos = true;
    if (!output.empty()) m.output_dir = output;
    if (threads != 0) m.threads = threads;
  }
};

std::string default_output_dir() {
  if (const char* env = std::getenv("APFLOW_OUTPUT_DIR"); env && *env) return env;
  return "apflow_output";
}

void log(const std::string& msg) { std::cerr << "apflow: " << msg << '\n'; }

void write_json(const fs::path& path, const json& j) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write '" + path.string() + "'");
  os << j.dump(2) << '\n';
  if (!os) throw IoError("write failed for '" + path.string() + "'");
}

fs::path prepare_dir(const std::string& dir) {
  const fs::path p(dir.empty() ? default_output_dir() : dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw IoError("cannot create '" + p.string() + "': " + ec.message());
  return p;
}

bool wants(const RunManifest& m, const std::string& fmt) {
  return std::find(m.formats.begin(), m.formats.end(), fmt) != m.formats.end();
}

std::string step_tag(int step) {
  std::ostringstream os;
  os << std::setw(7) << std::setfill('0') << step;
  return os.str();
}

int cmd_run(const std::string& manifest_path, const CaseFlags& flags, const std::vector<std::string>& formats,
            std::optional<int> snapshot_every, const std::vector<double>& snapshot_times) {
  RunManifest m;
  if (!manifest_path.empty()) m = parse_manifest(read_case_file(manifest_path));
  flags.merge_into(m);
  if (!formats.empty()) m.formats = formats;
  if (snapshot_every) m.snapshot_every = snapshot_every;
  m.snapshot_times.insert(m.snapshot_times.end(), snapshot_times.begin(), snapshot_times.end());

  // Everything is validated before the first byte is written.
  const CaseDefinition cd = resolve_manifest(m);
  if (wants(m, "vtk") && cd.grid.dimension != 2) throw ConfigError("VTK output needs a 2D case");
  if (m.output_dir.empty()) m.output_dir = default_output_dir();

  const fs::path dir = prepare_dir(m.output_dir);
  write_json(dir / "manifest.json", manifest_json(m));
  write_json(dir / "case.json", cd.source);

  RunOptions ro;
  ro.general_eos = m.general_eos;
  ro.log = log;
  ro.on_snapshot = [&](double, int step, const StructuredGrid& grid, const std::vector<CellState>& cells) {
    const std::string stem = "snapshot_" + step_tag(step);
    if (wants(m, "csv")) write_csv((dir / (stem + ".csv")).string(), grid, cells);
    if (wants(m, "vtk")) write_vtk((dir / (stem + ".vtk")).string(), grid, cells, cd.step.eps);
  };
  log("running '" + cd.name + "' to t=" + std::to_string(cd.end_time));
  const RunResult r = run_case(cd, ro);
  if (wants(m, "csv")) write_csv((dir / "final.csv").string(), r.grid, r.cells);
  if (wants(m, "vtk")) write_vtk((dir / "final.vtk").string(), r.grid, r.cells, cd.step.eps);
  write_json(dir / "summary.json", summary_json(cd, r));

  std::ostringstream os;
  os << std::setprecision(6) << r.steps << " steps, mass drift " << r.mass_drift() << ", energy drift "
     << r.energy_drift() << ", max|div u| " << r.max_divergence << ", max Mach " << r.max_mach;
  if (cd.grid.dimension == 2) os << ", recirculation " << (r.recirculation.found ? "yes" : "no");
  log(os.str());
  log("wrote " + dir.string());
  return 0;
}

int cmd_converge(const CaseFlags& flags, std::vector<int> resolutions, std::optional<int> reference,
                 double dt_coefficient, double dt_power, const std::string& variable) {
  RunManifest m;
  flags.merge_into(m);
  if (m.case_ref.empty()) throw ConfigError("no case given");
  if (variable != "p" && variable != "rho" && variable != "u") throw ConfigError("variable must be p, rho or u");
  if (m.threads < 1) throw ConfigError("threads must be at least 1");
  json file = apply_overrides(case_json(m.case_ref), m.overrides);
  resolve_case(file);  // validation

  ConvergenceOptions opt;
  opt.resolutions = std::move(resolutions);
  opt.reference_cells = reference;
  opt.dt_coefficient = dt_coefficient;
  opt.dt_power = dt_power;
  opt.variable = variable;
  opt.threads = m.threads;
  opt.general_eos = m.general_eos;
  if (!(dt_coefficient > 0.0)) throw ConfigError("dt coefficient must be positive");

  const fs::path dir = prepare_dir(m.output_dir);
  log("convergence study on '" + m.case_ref + "'");
  const ConvergenceResult res = convergence_study(file, opt);
  {
    std::ofstream os(dir / "convergence.csv");
    if (!os) throw IoError("cannot write convergence.csv");
    res.report.write_csv(os);
  }
  json rows = json::array();
  for (const ErrorRow& row : res.report.rows) {
    json r = {{"cells", row.cells}, {"dx", row.dx}, {"dt", row.dt}, {"l1_error", row.error}};
    r["order"] = row.order ? json(*row.order) : json(nullptr);
    rows.push_back(r);
    std::ostringstream os;
    os << std::setprecision(4) << std::setw(6) << row.cells << "  E=" << row.error;
    if (row.order) os << "  order=" << *row.order;
    log(os.str());
  }
  write_json(dir / "convergence.json",
             {{"case", m.case_ref},
              {"variable", variable},
              {"reference", reference ? json(*reference) : json("exact")},
              {"dt_rule", {{"coefficient", dt_coefficient}, {"power", dt_power}}},
              {"rows", rows}});
  log("wrote " + dir.string());
  return 0;
}

int cmd_compare(const CaseFlags& flags) {
  RunManifest m;
  flags.merge_into(m);
  const CaseDefinition cd = resolve_manifest(m);
  const fs::path dir = prepare_dir(m.output_dir);
  log("AP and explicit runs of '" + cd.name + "'");
  const ExplicitComparison c = compare_explicit(cd);
  json j = {{"case", cd.name},
            {"epsilon", cd.step.eps},
            {"dt_ap", c.dt_ap},
            {"dt_explicit", c.dt_explicit},
            {"steps_ap", c.steps_ap},
            {"steps_explicit", c.steps_explicit},
            {"wall_clock_ap", c.wall_ap},
            {"wall_clock_explicit", c.wall_explicit},
            {"l1_pressure_distance", c.l1_distance}};
  if (c.l1_ap_exact) j["l1_ap_vs_exact"] = *c.l1_ap_exact;
  if (c.l1_explicit_exact) j["l1_explicit_vs_exact"] = *c.l1_explicit_exact;
  write_json(dir / "comparison.json", j);
  std::ostringstream os;
  os << std::setprecision(4) << "dt ap/explicit = " << c.dt_ap << " / " << c.dt_explicit << ", steps "
     << c.steps_ap << " / " << c.steps_explicit;
  log(os.str());
  return 0;
}

int cmd_export(const std::string& name, const std::string& output) {
  std::vector<std::string> names;
  if (name == "all") names = builtin_case_names();
  else names.push_back(name);
  for (const auto& n : names) builtin_case_json(n);  // validation
  const fs::path dir = prepare_dir(output);
  for (const auto& n : names) write_json(dir / (n + ".json"), builtin_case_json(n));
  log("exported " + std::to_string(names.size()) + " case(s) to " + dir.string());
  return 0;
}

void report_error(const char* kind, const std::string& what) {
  std::cerr << json{{"error", kind}, {"message", what}}.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"All-speed asymptotic-preserving finite-volume solver"};
  app.require_subcommand(1);

  CaseFlags run_flags, conv_flags, cmp_flags;
  std::string manifest_path;
  std::vector<std::string> formats;
  std::optional<int> snapshot_every;
  std::vector<double> snapshot_times;
  auto* run = app.add_subcommand("run", "run one case and write fields and a summary");
  run->add_option("--manifest", manifest_path, "JSON run manifest; flags override its entries");
  run_flags.attach(run);
  run->add_option("--format", formats, "output formats: csv, vtk")->delimiter(',');
  run->add_option("--snapshot-every", snapshot_every, "write fields every N steps");
  run->add_option("--snapshot-time", snapshot_times, "extra snapshot times")->delimiter(',');

  std::vector<int> resolutions;
  std::optional<int> reference;
  double dt_coefficient = 1.0, dt_power = 2.0;
  std::string variable = "p";
  auto* conv = app.add_subcommand("converge", "grid convergence study with L1 errors and orders");
  conv_flags.attach(conv, false);
  conv->add_option("--resolutions", resolutions, "strictly increasing cell counts")->delimiter(',')->required();
  conv->add_option("--reference", reference, "reference cell count (default: exact Riemann solution)");
  conv->add_option("--dt-coefficient", dt_coefficient, "dt = coefficient * dx^power");
  conv->add_option("--dt-power", dt_power, "dt = coefficient * dx^power");
  conv->add_option("--variable", variable, "compared field: p, rho or u");

  auto* cmp = app.add_subcommand("compare-explicit", "run the AP and explicit schemes side by side");
  cmp_flags.attach(cmp);

  std::string export_name = "all", export_dir;
  auto* exp = app.add_subcommand("export-case", "write built-in case definitions as JSON");
  exp->add_option("--case", export_name, "case name or 'all'");
  exp->add_option("--output", export_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*run) return cmd_run(manifest_path, run_flags, formats, snapshot_every, snapshot_times);
    if (*conv) return cmd_converge(conv_flags, resolutions, reference, dt_coefficient, dt_power, variable);
    if (*cmp) return cmd_compare(cmp_flags);
    if (*exp) return cmd_export(export_name, export_dir);
  } catch (const ConfigError& e) {
    report_error("config", e.what());
    return kExitConfig;
  } catch (const json::exception& e) {
    report_error("config", e.what());
    return kExitConfig;
  } catch (const SolverError& e) {
    report_error("solver", e.what());
    return kExitSolver;
  } catch (const StateError& e) {
    report_error("solver", e.what());
    return kExitSolver;
  } catch (const EosDomainError& e) {
    report_error("solver", e.what());
    return kExitSolver;
  } catch (const IoError& e) {
    report_error("io", e.what());
    return kExitOther;
  } catch (const std::exception& e) {
    report_error("internal", e.what());
    return kExitOther;
  }
  return kExitOther;
}
