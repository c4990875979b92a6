#pragma once

// Time loop, run summaries, convergence studies and the AP/explicit comparison.

#include <chrono>
#include <cmath>
#include <functional>
#include <future>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "apflow/cases.hpp"
#include "apflow/diagnostics.hpp"
#include "apflow/io.hpp"
#include "apflow/riemann.hpp"

namespace apflow {

enum class Scheme { ap, explicit_rusanov };

struct RunOptions {
  Scheme scheme = Scheme::ap;
  bool general_eos = false;  // route the perfect gas through the Newton path
  bool record_residual = false;
  std::function<void(double t, int step, const StructuredGrid&, const std::vector<CellState>&)> on_snapshot;
  std::function<void(const std::string&)> log;
};

struct FieldRange {
  double min = 0.0;
  double max = 0.0;
};

struct RunResult {
  StructuredGrid grid;
  ConservativeState state;
  std::vector<CellState> cells;
  double eps = 1.0;
  double time = 0.0;
  int steps = 0;
  std::vector<double> dt_history;
  std::vector<int> newton_iterations;
  std::vector<double> residual_history;  // L1 change of the conservative state per step
  double mass0 = 0.0, mass = 0.0, energy0 = 0.0, energy = 0.0;
  double max_energy_residual = 0.0;
  double max_divergence = 0.0;
  double max_mach = 0.0;
  FieldRange rho, p, h, speed;
  Recirculation recirculation;
  double wall_clock = 0.0;

  double mass_drift() const { return std::abs(mass - mass0) / std::abs(mass0); }
  double energy_drift() const { return std::abs(energy - energy0) / std::abs(energy0); }

  std::vector<double> x() const {
    std::vector<double> v(grid.num_cells());
    for (int c = 0; c < grid.num_cells(); ++c) v[c] = grid.center(c)[0];
    return v;
  }
  std::vector<double> field(const std::string& name) const {
    std::vector<double> v(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const CellState& s = cells[c];
      if (name == "p") v[c] = s.prim.p;
      else if (name == "rho") v[c] = s.cons.rho;
      else if (name == "u") v[c] = s.prim.u[0];
      else if (name == "v") v[c] = s.prim.u[1];
      else if (name == "h") v[c] = s.prim.h;
      else throw ConfigError("unknown field '" + name + "'");
    }
    return v;
  }
  std::vector<Vec2> velocity() const {
    std::vector<Vec2> u(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) u[c] = cells[c].prim.u;
    return u;
  }
};

namespace detail {

template <EquationOfState E>
RunResult run_with(const CaseDefinition& cd, const E& eos, const RunOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  RunResult r;
  r.grid = build_grid(cd.grid);
  r.eps = cd.step.eps;
  const StructuredGrid& grid = r.grid;
  Stepper<E> stepper(grid, cd.bc, eos, cd.step);
  ConservativeState U = initial_state(cd, grid, eos);
  auto mass = [&](const ConservativeState& s) { return total(grid, [&](int c) { return s[c].rho; }); };
  auto energy = [&](const ConservativeState& s) { return total(grid, [&](int c) { return s[c].W; }); };
  r.mass0 = mass(U);
  r.energy0 = energy(U);

  std::vector<double> snaps = cd.snapshot_times;
  std::sort(snaps.begin(), snaps.end());
  std::size_t next_snap = 0;
  if (opt.on_snapshot && cd.snapshot_every > 0) opt.on_snapshot(0.0, 0, grid, stepper.cell_states(U));

  double t = 0.0;
  const double end = cd.end_time;
  int fixed_steps = 0;
  if (cd.dt) fixed_steps = static_cast<int>(std::ceil(end / *cd.dt - 1e-9));
  int n = 0;
  while (true) {
    if (cd.dt ? n >= fixed_steps : t >= end * (1.0 - 1e-12)) break;
    double dt;
    if (cd.dt) {
      dt = (n + 1 == fixed_steps) ? end - n * *cd.dt : *cd.dt;
    } else {
      dt = opt.scheme == Scheme::ap ? stepper.compute_dt(U, t) : stepper.compute_explicit_dt(U, t);
      dt = std::min(dt, end - t);
      // Land exactly on snapshot times.
      if (next_snap < snaps.size() && t + dt > snaps[next_snap] && snaps[next_snap] > t) dt = snaps[next_snap] - t;
    }
    ConservativeState before;
    if (opt.record_residual) before = U;
    StepReport rep =
        opt.scheme == Scheme::ap ? stepper.ap_step(U, t, dt) : stepper.explicit_step(U, t, dt);
    ++n;
    t = cd.dt ? (n == fixed_steps ? end : n * *cd.dt) : t + dt;
    r.dt_history.push_back(dt);
    r.newton_iterations.push_back(rep.newton_iterations);
    r.max_energy_residual = std::max(r.max_energy_residual, rep.energy_residual);
    if (opt.record_residual) {
      double s = 0.0;
      for (int c = 0; c < grid.num_cells(); ++c) {
        if (!grid.fluid(c)) continue;
        s += std::abs(U[c].rho - before[c].rho) + std::abs(U[c].q[0] - before[c].q[0]) +
             std::abs(U[c].q[1] - before[c].q[1]) + std::abs(U[c].W - before[c].W);
      }
      r.residual_history.push_back(s / grid.num_fluid_cells());
    }
    const double tol = 1e-12 * std::max(1.0, t);
    const bool at_snap = next_snap < snaps.size() && t >= snaps[next_snap] - tol;
    while (next_snap < snaps.size() && t >= snaps[next_snap] - tol) ++next_snap;
    if (opt.on_snapshot && (at_snap || (cd.snapshot_every > 0 && n % cd.snapshot_every == 0)))
      opt.on_snapshot(t, n, grid, stepper.cell_states(U));
    if (opt.log && n % 1000 == 0) opt.log("step " + std::to_string(n) + " t=" + std::to_string(t));
  }

  r.time = t;
  r.steps = n;
  r.state = U;
  r.cells = stepper.cell_states(U);
  r.mass = mass(U);
  r.energy = energy(U);
  const auto g = stepper.ghosted(r.cells, t);
  r.max_divergence = max_abs(divergence_field(grid, g), &grid);
  r.max_mach = max_abs(local_mach(r.cells, cd.step.eps), &grid);
  bool first = true;
  auto widen = [&](FieldRange& fr, double v) {
    if (first) fr = {v, v};
    fr.min = std::min(fr.min, v);
    fr.max = std::max(fr.max, v);
  };
  for (int c = 0; c < grid.num_cells(); ++c) {
    if (!grid.fluid(c)) continue;
    const CellState& s = r.cells[c];
    widen(r.rho, s.cons.rho);
    widen(r.p, s.prim.p);
    widen(r.h, s.prim.h);
    widen(r.speed, std::sqrt(norm2(s.prim.u)));
    first = false;
  }
  if (grid.dimension() == 2)
    r.recirculation = detect_recirculation(grid, r.velocity(), cd.recirculation_region, cd.recirculation_threshold);
  r.wall_clock = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

}  // namespace detail

inline RunResult run_case(const CaseDefinition& cd, const RunOptions& opt = {}) {
  const EosPerfectGas gas(cd.gamma);
  if (opt.general_eos) return detail::run_with(cd, FunctionalEos::wrap(gas), opt);
  return detail::run_with(cd, gas, opt);
}

inline json summary_json(const CaseDefinition& cd, const RunResult& r, bool include_wall_clock = true) {
  auto range = [](const FieldRange& f) { return json{{"min", f.min}, {"max", f.max}}; };
  json j = {{"case", cd.name},
            {"epsilon", cd.step.eps},
            {"alpha", cd.step.alpha},
            {"order", cd.step.order},
            {"cells", {r.grid.nx(), r.grid.ny()}},
            {"final_time", r.time},
            {"steps", r.steps},
            {"dt_history", r.dt_history},
            {"newton_iterations", r.newton_iterations},
            {"conservation",
             {{"mass_initial", r.mass0},
              {"mass_final", r.mass},
              {"mass_drift", r.mass_drift()},
              {"energy_initial", r.energy0},
              {"energy_final", r.energy},
              {"energy_drift", r.energy_drift()}}},
            {"max_energy_residual", r.max_energy_residual},
            {"max_divergence", r.max_divergence},
            {"max_local_mach", r.max_mach},
            {"fields", {{"rho", range(r.rho)}, {"p", range(r.p)}, {"h", range(r.h)}, {"speed", range(r.speed)}}},
            {"recirculation",
             {{"found", r.recirculation.found},
              {"center", {r.recirculation.center[0], r.recirculation.center[1]}},
              {"circulation", r.recirculation.circulation}}}};
  if (include_wall_clock) j["wall_clock_seconds"] = r.wall_clock;
  return j;
}

struct ConvergenceOptions {
  std::vector<int> resolutions;
  double dt_coefficient = 1.0;  // dt = coefficient * dx^dt_power
  double dt_power = 2.0;
  std::optional<int> reference_cells;  // self-computed reference; exact Riemann solution otherwise
  std::string variable = "p";
  int threads = 1;
  bool general_eos = false;
};

struct ConvergenceResult {
  ErrorReport report;
  std::vector<RunResult> runs;
  std::optional<RunResult> reference;
};

/// Exact Riemann profile of a case with a riemann initial condition, at the case end time.
inline std::vector<double> exact_riemann_profile(const CaseDefinition& cd, const std::vector<double>& x,
                                                 const std::string& variable) {
  if (cd.initial.at("type") != "riemann") throw ConfigError("exact reference needs a riemann initial condition");
  if (cd.step.eps != 1.0) throw ConfigError("exact Riemann reference assumes epsilon = 1");
  auto side = [&](const char* k) {
    const Primitive p = initial_primitive(cd, {k[0] == 'l' ? -1e300 : 1e300, 0.0});
    return RiemannState{density(EosPerfectGas(cd.gamma), p.p, p.h), p.u[0], p.p};
  };
  const RiemannExact rs(side("left"), side("right"), cd.gamma);
  const double x0 = cd.initial.at("interface").get<double>();
  std::vector<double> v(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const RiemannState s = rs.sample(x[k], x0, cd.end_time);
    v[k] = variable == "p" ? s.p : variable == "rho" ? s.rho : s.u;
  }
  return v;
}

inline ConvergenceResult convergence_study(const json& case_file, const ConvergenceOptions& opt) {
  if (opt.resolutions.empty()) throw ConfigError("convergence study needs at least one resolution");
  for (std::size_t k = 1; k < opt.resolutions.size(); ++k)
    if (opt.resolutions[k] <= opt.resolutions[k - 1]) throw ConfigError("resolutions must be strictly increasing");
  if (opt.reference_cells && *opt.reference_cells <= opt.resolutions.back())
    throw ConfigError("reference must be strictly finer than every resolution");

  auto definition = [&](int cells) {
    CaseOverrides o;
    o.cells = cells;
    const CaseDefinition probe = resolve_case(apply_overrides(case_file, o));
    const double dx = (probe.grid.upper[0] - probe.grid.lower[0]) / cells;
    const double dt = opt.dt_coefficient * std::pow(dx, opt.dt_power);
    // dt is given in the file's time unit, so convert back if the file is SI.
    o.dt = probe.scaling ? dt * probe.scaling->x0 / probe.scaling->u0 : dt;
    return resolve_case(apply_overrides(case_file, o));
  };

  std::vector<int> jobs = opt.resolutions;
  if (opt.reference_cells) jobs.push_back(*opt.reference_cells);
  std::vector<CaseDefinition> defs;
  for (int n : jobs) defs.push_back(definition(n));
  RunOptions ro;
  ro.general_eos = opt.general_eos;
  std::vector<RunResult> results(jobs.size());
  if (opt.threads <= 1) {
    for (std::size_t k = 0; k < jobs.size(); ++k) results[k] = run_case(defs[k], ro);
  } else {
    // Longest job first; each run is independent and deterministic.
    std::vector<std::size_t> order(jobs.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = order.size() - 1 - k;
    std::size_t next = 0;
    while (next < order.size()) {
      std::vector<std::future<void>> batch;
      for (int w = 0; w < opt.threads && next < order.size(); ++w, ++next) {
        const std::size_t k = order[next];
        batch.push_back(std::async(std::launch::async, [&, k] { results[k] = run_case(defs[k], ro); }));
      }
      for (auto& f : batch) f.get();
    }
  }

  ConvergenceResult out;
  std::vector<double> x_ref, v_ref;
  if (opt.reference_cells) {
    out.reference = results.back();
    x_ref = out.reference->x();
    v_ref = out.reference->field(opt.variable);
  }
  for (std::size_t k = 0; k < opt.resolutions.size(); ++k) {
    const RunResult& r = results[k];
    ErrorRow row;
    row.cells = opt.resolutions[k];
    row.dx = r.grid.dx();
    row.dt = defs[k].dt.value_or(0.0);
    const std::vector<double> x = r.x(), v = r.field(opt.variable);
    if (opt.reference_cells) {
      row.error = l1_error(x, v, x_ref, v_ref);
    } else {
      row.error = l1_error(x, v, x, exact_riemann_profile(defs[k], x, opt.variable));
    }
    out.report.rows.push_back(row);
    out.runs.push_back(r);
  }
  out.report.estimate_orders();
  return out;
}

struct ExplicitComparison {
  double dt_ap = 0.0;
  double dt_explicit = 0.0;
  int steps_ap = 0;
  int steps_explicit = 0;
  double wall_ap = 0.0;
  double wall_explicit = 0.0;
  double l1_distance = 0.0;  // pressure, explicit vs AP
  std::optional<double> l1_ap_exact;
  std::optional<double> l1_explicit_exact;
};

/// Runs a case with both schemes under their own CFL rules.
inline ExplicitComparison compare_explicit(CaseDefinition cd) {
  cd.dt.reset();
  ExplicitComparison c;
  RunOptions ap;
  RunOptions ex;
  ex.scheme = Scheme::explicit_rusanov;
  const RunResult a = run_case(cd, ap);
  const RunResult e = run_case(cd, ex);
  c.dt_ap = a.dt_history.empty() ? 0.0 : a.dt_history.front();
  c.dt_explicit = e.dt_history.empty() ? 0.0 : e.dt_history.front();
  c.steps_ap = a.steps;
  c.steps_explicit = e.steps;
  c.wall_ap = a.wall_clock;
  c.wall_explicit = e.wall_clock;
  c.l1_distance = l1_error(e.x(), e.field("p"), a.x(), a.field("p"));
  if (cd.initial.at("type") == "riemann" && cd.step.eps == 1.0 && cd.grid.dimension == 1) {
    c.l1_ap_exact = l1_error(a.x(), a.field("p"), a.x(), exact_riemann_profile(cd, a.x(), "p"));
    c.l1_explicit_exact = l1_error(e.x(), e.field("p"), e.x(), exact_riemann_profile(cd, e.x(), "p"));
  }
  return c;
}

}  // namespace apflow
