#pragma once

// Case definitions: JSON schema, the six built-in benchmarks, SI -> scaled
// resolution and initial-state evaluation.
//
// A case file is a JSON object. "units" is "scaled" (numbers used as-is, the
// Mach parameter given by physics.epsilon) or "si" (numbers in SI, converted
// with the "scaling" block). Everything else is documented in README.md.

#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "apflow/stepper.hpp"

namespace apflow {

using json = nlohmann::json;

struct CaseDefinition {
  std::string name;
  std::string description;
  GridConfig grid;
  BoundaryData bc;
  double gamma = 1.4;
  StepConfig step;
  std::optional<double> dt;  // fixed step; otherwise the CFL rule
  double end_time = 0.0;
  json initial;  // scaled initial condition
  std::vector<double> snapshot_times;
  int snapshot_every = 0;
  std::optional<Box> recirculation_region;
  double recirculation_threshold = 1e-3;
  std::optional<ScalingParameters> scaling;
  json source;  // the file form this definition was resolved from
};

namespace detail {

inline const json& require(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError("missing '" + std::string(key) + "' in " + where);
  return j.at(key);
}

template <class T>
T get(const json& j, const char* key, const std::string& where) {
  try {
    return require(j, key, where).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("bad value for '" + std::string(key) + "' in " + where + ": " + e.what());
  }
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("bad value for '" + std::string(key) + "': " + e.what());
  }
}

inline Vec2 vec2(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ConfigError("expected a 2-vector in " + where);
  return {j[0].get<double>(), j[1].get<double>()};
}

/// Unit conversion for one case: identity for scaled files.
struct Units {
  std::optional<ScalingParameters> s;
  double length(double x) const { return s ? s->length(x) : x; }
  double time(double t) const { return s ? s->time(t) : t; }
  double velocity(double u) const { return s ? s->velocity(u) : u; }
  double pressure(double p) const { return s ? s->pressure(p) : p; }
  double enthalpy(double h) const { return s ? s->enthalpy(h) : h; }
  double density(double r) const { return s ? s->density(r) : r; }
  Vec2 length(Vec2 x) const { return {length(x[0]), length(x[1])}; }
  Vec2 velocity(Vec2 u) const { return {velocity(u[0]), velocity(u[1])}; }
  Vec2 acceleration(Vec2 a) const { return s ? Vec2{s->acceleration(a[0]), s->acceleration(a[1])} : a; }
};

inline json scaled_primitive(const json& j, const Units& u, const std::string& where) {
  return {{"p", u.pressure(get<double>(j, "p", where))},
          {"h", u.enthalpy(get<double>(j, "h", where))},
          {"u", [&] {
             const Vec2 v = u.velocity(vec2(require(j, "u", where), where + ".u"));
             return json::array({v[0], v[1]});
           }()}};
}

}  // namespace detail

/// Builds the scaled definition from a case file object.
inline CaseDefinition resolve_case(const json& j) {
  using namespace detail;
  if (!j.is_object()) throw ConfigError("case file must be a JSON object");
  CaseDefinition c;
  c.source = j;
  c.name = get_or<std::string>(j, "name", "custom");
  c.description = get_or<std::string>(j, "description", "");
  const std::string units = get_or<std::string>(j, "units", "scaled");
  Units u;
  if (units == "si") {
    const json& s = require(j, "scaling", "case");
    ScalingParameters sp{get<double>(s, "rho0", "scaling"), get<double>(s, "p0", "scaling"),
                         get<double>(s, "u0", "scaling"), get<double>(s, "x0", "scaling")};
    try {
      sp.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    u.s = sp;
    c.scaling = sp;
  } else if (units != "scaled") {
    throw ConfigError("units must be 'scaled' or 'si'");
  }

  const json& eos = require(j, "eos", "case");
  if (get_or<std::string>(eos, "type", "perfect_gas") != "perfect_gas")
    throw ConfigError("only the perfect_gas EOS can be declared in a case file");
  c.gamma = get_or<double>(eos, "gamma", 1.4);
  if (!(c.gamma > 1.0)) throw ConfigError("gamma must exceed 1");

  // Grid.
  const json& g = require(j, "grid", "case");
  c.grid.dimension = get<int>(g, "dimension", "grid");
  const json& cells = require(g, "cells", "grid");
  if (!cells.is_array() || cells.empty()) throw ConfigError("grid.cells must be a non-empty array");
  c.grid.cells = {cells[0].get<int>(), cells.size() > 1 ? cells[1].get<int>() : 1};
  if (c.grid.dimension == 1) {
    const double lo = get<double>(g, "lower", "grid"), hi = get<double>(g, "upper", "grid");
    c.grid.lower = {u.length(lo), 0.0};
    c.grid.upper = {u.length(hi), 1.0};
  } else {
    c.grid.lower = u.length(vec2(require(g, "lower", "grid"), "grid.lower"));
    c.grid.upper = u.length(vec2(require(g, "upper", "grid"), "grid.upper"));
  }
  if (g.contains("solids")) {
    for (const json& b : g.at("solids"))
      c.grid.solids.push_back({u.length(vec2(require(b, "lower", "solid"), "solid.lower")),
                               u.length(vec2(require(b, "upper", "solid"), "solid.upper"))});
  }

  // Physics (needed before boundaries for cp).
  const json physics = j.value("physics", json::object());
  const double eps_file = get_or<double>(physics, "epsilon", 1.0);
  c.step.eps = u.s ? u.s->epsilon() : eps_file;
  if (u.s && physics.contains("epsilon") && std::abs(eps_file - c.step.eps) > 1e-12 * c.step.eps)
    throw ConfigError("physics.epsilon disagrees with the scaling block");
  c.step.viscous = get_or<bool>(physics, "viscous", false);
  c.step.conduction = get_or<bool>(physics, "conduction", false);
  c.step.gravity = get_or<bool>(physics, "gravity", false);
  double cp = 1.0;
  if (units == "si") {
    if (physics.contains("cp")) {
      cp = get<double>(physics, "cp", "physics");
    } else if (physics.contains("gas_constant")) {
      cp = c.gamma / (c.gamma - 1.0) * get<double>(physics, "gas_constant", "physics") /
           get<double>(physics, "molar_mass", "physics");
    }
    SiFlowData si;
    si.nu = get_or<double>(physics, "nu", 0.0);
    si.conductivity = get_or<double>(physics, "conductivity", 0.0);
    si.cp = cp;
    const ScaledFlowData sc = nondimensionalize(si, *u.s);
    c.step.reynolds = sc.reynolds;
    c.step.prandtl = sc.prandtl;
  } else {
    c.step.reynolds = get_or<double>(physics, "reynolds", 0.0);
    c.step.prandtl = get_or<double>(physics, "prandtl", 0.0);
  }
  if (physics.contains("f_ext")) c.step.f_ext = u.acceleration(vec2(physics.at("f_ext"), "physics.f_ext"));

  // Boundaries.
  const json bnd = j.value("boundaries", json::object());
  for (int s = 0; s < 2 * c.grid.dimension; ++s) {
    const std::string key(kSideNames[s]);
    const json& b = require(bnd, key.c_str(), "boundaries");
    SideSpec& spec = c.grid.sides[s];
    spec.kind = boundary_kind_from_string(get<std::string>(b, "type", key));
    spec.wall_speed = u.velocity(get_or<double>(b, "wall_speed", 0.0));
    spec.wall_ramp_time = u.time(get_or<double>(b, "ramp_time", 0.0));
    SideData& d = c.bc.sides[s];
    if (b.contains("velocity")) d.velocity = u.velocity(vec2(b.at("velocity"), key + ".velocity"));
    if (b.contains("enthalpy")) d.enthalpy = u.enthalpy(get<double>(b, "enthalpy", key));
    if (b.contains("temperature")) {
      if (units != "si") throw ConfigError("wall temperatures need SI units and a heat capacity");
      d.enthalpy = u.enthalpy(cp * get<double>(b, "temperature", key));
    }
    if (b.contains("pressure")) d.pressure = u.pressure(get<double>(b, "pressure", key));
  }

  // Scheme.
  const json& sch = require(j, "scheme", "case");
  c.step.alpha = get_or<double>(sch, "alpha", 0.0);
  c.step.order = get_or<int>(sch, "order", 2);
  c.step.cfl = get_or<double>(sch, "cfl", 0.5);
  if (sch.contains("dt")) c.dt = u.time(get<double>(sch, "dt", "scheme"));
  if (sch.contains("dt_max")) c.step.dt_max = u.time(get<double>(sch, "dt_max", "scheme"));
  c.end_time = u.time(get<double>(sch, "end_time", "scheme"));
  c.step.newton.tolerance = get_or<double>(sch, "newton_tolerance", 1e-10);
  c.step.newton.max_iterations = get_or<int>(sch, "newton_max_iterations", 50);
  if (c.dt && !(*c.dt > 0.0)) throw ConfigError("scheme.dt must be positive");
  if (!(c.end_time > 0.0)) throw ConfigError("scheme.end_time must be positive");
  c.step.validate();

  // Initial condition, stored scaled.
  const json& ic = require(j, "initial", "case");
  const std::string type = get<std::string>(ic, "type", "initial");
  if (type == "uniform") {
    c.initial = scaled_primitive(ic, u, "initial");
    c.initial["type"] = "uniform";
  } else if (type == "riemann") {
    c.initial = {{"type", "riemann"},
                 {"interface", u.length(get<double>(ic, "interface", "initial"))},
                 {"left", scaled_primitive(require(ic, "left", "initial"), u, "initial.left")},
                 {"right", scaled_primitive(require(ic, "right", "initial"), u, "initial.right")}};
  } else if (type == "colliding_pulses" || type == "taylor_green") {
    if (units != "scaled") throw ConfigError(type + " initial data are defined in scaled units only");
    c.initial = ic;
  } else {
    throw ConfigError("unknown initial condition type '" + type + "'");
  }

  const json out = j.value("output", json::object());
  if (out.contains("snapshots"))
    for (const json& t : out.at("snapshots")) c.snapshot_times.push_back(u.time(t.get<double>()));
  c.snapshot_every = get_or<int>(out, "every", 0);

  const json diag = j.value("diagnostics", json::object());
  if (diag.contains("recirculation_region")) {
    const json& r = diag.at("recirculation_region");
    c.recirculation_region = Box{u.length(vec2(require(r, "lower", "region"), "region.lower")),
                                 u.length(vec2(require(r, "upper", "region"), "region.upper"))};
  }
  c.recirculation_threshold = get_or<double>(diag, "recirculation_threshold", 1e-3);

  // Structural checks that need the whole definition.
  const StructuredGrid grid = build_grid(c.grid);
  require_side_data(grid, c.bc);
  return c;
}

inline const std::vector<std::string>& builtin_case_names() {
  static const std::vector<std::string> names{"colliding_pulses", "sod",         "lax",
                                              "backward_step",    "lid_cavity", "heat_cavity"};
  return names;
}

/// File form of a built-in case.
inline json builtin_case_json(const std::string& name) {
  const json slip = {{"type", "slip_wall"}};
  const json neumann = {{"type", "neumann"}};
  const json periodic = {{"type", "periodic"}};
  if (name == "colliding_pulses") {
    const double gamma = 1.4, eps = 1.0 / 11.0;
    return {{"name", name},
            {"description", "Two acoustic pulses colliding in a periodic tube"},
            {"units", "scaled"},
            {"eos", {{"type", "perfect_gas"}, {"gamma", gamma}}},
            {"grid", {{"dimension", 1}, {"cells", {220}}, {"lower", -2.0 / eps}, {"upper", 2.0 / eps}}},
            {"boundaries", {{"x_lower", periodic}, {"x_upper", periodic}}},
            {"physics", {{"epsilon", eps}}},
            {"scheme", {{"alpha", 0.0}, {"order", 2}, {"dt", 1e-3}, {"end_time", 1.63}}},
            {"initial",
             {{"type", "colliding_pulses"},
              {"L", 2.0 / eps},
              {"rho0", 0.995},
              {"rho1", 2.0},
              {"p0", 1.0},
              {"p1", 2.0 * gamma},
              {"u0", 2.0 * std::sqrt(gamma)}}},
            {"output", {{"snapshots", {0.815, 1.63}}}}};
  }
  if (name == "sod" || name == "lax") {
    const bool sod = name == "sod";
    const json left = sod ? json{{"p", 1.0}, {"h", 3.5}, {"u", {0.0, 0.0}}}
                          : json{{"p", 3.528}, {"h", 27.748}, {"u", {0.698, 0.0}}};
    const json right = sod ? json{{"p", 0.1}, {"h", 2.8}, {"u", {0.0, 0.0}}}
                           : json{{"p", 0.571}, {"h", 3.3997}, {"u", {0.0, 0.0}}};
    return {{"name", name},
            {"description", sod ? "Sod shock tube" : "Lax shock tube"},
            {"units", "scaled"},
            {"eos", {{"type", "perfect_gas"}, {"gamma", 1.4}}},
            {"grid", {{"dimension", 1}, {"cells", {100}}, {"lower", sod ? 0.0 : -1.0}, {"upper", 1.0}}},
            {"boundaries", {{"x_lower", neumann}, {"x_upper", neumann}}},
            {"physics", {{"epsilon", 1.0}}},
            {"scheme", {{"alpha", 0.0}, {"order", 2}, {"dt", 1e-3}, {"end_time", sod ? 0.2 : 0.25}}},
            {"initial", {{"type", "riemann"}, {"interface", sod ? 0.5 : 0.0}, {"left", left}, {"right", right}}}};
  }
  const json scaling_air = {{"rho0", 10.0}, {"p0", 1e5}, {"u0", 1.0}, {"x0", 1.0}};
  const json gas = {{"gas_constant", 8.315}, {"molar_mass", 0.02897}};
  if (name == "backward_step") {
    json physics = {{"viscous", true}, {"conduction", true}, {"nu", 1.56e-2}, {"conductivity", 2.7e-2}};
    physics.update(gas);
    return {{"name", name},
            {"description", "Channel flow over a backward-facing step"},
            {"units", "si"},
            {"scaling", scaling_air},
            {"eos", {{"type", "perfect_gas"}, {"gamma", 1.4}}},
            {"grid",
             {{"dimension", 2},
              {"cells", {110, 20}},
              {"lower", {0.0, 0.0}},
              {"upper", {22.0, 4.0}},
              {"solids", {{{"lower", {0.0, 0.0}}, {"upper", {4.0, 2.0}}}}}}},
            {"boundaries",
             {{"x_lower", {{"type", "inlet"}, {"velocity", {1.0, 0.0}}, {"enthalpy", 3.5e4}}},
              {"x_upper", {{"type", "outlet"}, {"pressure", 1e5}}},
              {"y_lower", slip},
              {"y_upper", slip}}},
            {"physics", physics},
            {"scheme", {{"alpha", 0.0}, {"order", 2}, {"dt", 5e-4}, {"end_time", 20.0}}},
            {"initial", {{"type", "uniform"}, {"p", 1e5}, {"h", 3.5e4}, {"u", {1.0, 0.0}}}},
            {"diagnostics", {{"recirculation_region", {{"lower", {4.0, 0.0}}, {"upper", {12.0, 2.0}}}}}}};
  }
  if (name == "lid_cavity") {
    json physics = {{"viscous", true}, {"conduction", true}, {"nu", 2.5e-2}, {"conductivity", 2.7e-2}};
    physics.update(gas);
    return {{"name", name},
            {"description", "Lid-driven square cavity"},
            {"units", "si"},
            {"scaling", scaling_air},
            {"eos", {{"type", "perfect_gas"}, {"gamma", 1.4}}},
            {"grid", {{"dimension", 2}, {"cells", {50, 50}}, {"lower", {0.0, 0.0}}, {"upper", {1.0, 1.0}}}},
            {"boundaries",
             {{"x_lower", slip},
              {"x_upper", slip},
              {"y_lower", slip},
              {"y_upper", {{"type", "slip_wall"}, {"wall_speed", 1.0}, {"ramp_time", 1.0}}}}},
            {"physics", physics},
            {"scheme", {{"alpha", 0.0}, {"order", 2}, {"dt", 2.5e-4}, {"end_time", 20.0}}},
            {"initial", {{"type", "uniform"}, {"p", 1e5}, {"h", 3.5e4}, {"u", {0.0, 0.0}}}},
            {"diagnostics", {{"recirculation_region", {{"lower", {0.0, 0.0}}, {"upper", {1.0, 1.0}}}}}}};
  }
  if (name == "heat_cavity") {
    const double L = 1.528e-3, rho0 = 1.2, p0 = 1e5, eps = 1e-4;
    json physics = {{"viscous", true},   {"conduction", true},          {"gravity", true},
                    {"nu", 1.619e-6},    {"conductivity", 2.29e-3},     {"f_ext", {0.0, -9.81}}};
    physics.update(gas);
    return {{"name", name},
            {"description", "Differentially heated square cavity under gravity"},
            {"units", "si"},
            {"scaling", {{"rho0", rho0}, {"p0", p0}, {"u0", eps * std::sqrt(p0 / rho0)}, {"x0", L}}},
            {"eos", {{"type", "perfect_gas"}, {"gamma", 1.4}}},
            {"grid", {{"dimension", 2}, {"cells", {40, 40}}, {"lower", {0.0, 0.0}}, {"upper", {L, L}}}},
            {"boundaries",
             {{"x_lower", {{"type", "isothermal_wall"}, {"temperature", 283.15}}},
              {"x_upper", {{"type", "isothermal_wall"}, {"temperature", 263.15}}},
              {"y_lower", {{"type", "adiabatic_wall"}}},
              {"y_upper", {{"type", "adiabatic_wall"}}}}},
            {"physics", physics},
            {"scheme", {{"alpha", 0.0}, {"order", 2}, {"cfl", 0.002}, {"end_time", 3.0}, {"newton_tolerance", 1e-10}}},
            {"initial", {{"type", "uniform"}, {"p", 1e5}, {"h", 2.9167e5}, {"u", {0.0, 0.0}}}}};
  }
  throw ConfigError("unknown case '" + name + "'");
}

inline json read_case_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open case file '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("malformed case file '" + path + "': " + e.what());
  }
}

/// A built-in name or a path to a JSON case file.
inline json case_json(const std::string& name_or_path) {
  for (const auto& n : builtin_case_names())
    if (n == name_or_path) return builtin_case_json(n);
  if (name_or_path.find('/') != std::string::npos || name_or_path.find(".json") != std::string::npos)
    return read_case_file(name_or_path);
  throw ConfigError("unknown case '" + name_or_path + "'");
}

inline CaseDefinition load_case(const std::string& name_or_path) { return resolve_case(case_json(name_or_path)); }

/// Run-time overrides applied to the file form (units of the file).
struct CaseOverrides {
  std::optional<int> cells;  // first axis; the other keeps the spacing square
  std::optional<double> dt;
  std::optional<double> cfl;
  std::optional<double> alpha;
  std::optional<double> epsilon;  // scaled files only
  std::optional<int> order;
  std::optional<double> end_time;
  std::optional<double> newton_tolerance;
};

inline json apply_overrides(json j, const CaseOverrides& o) {
  if (o.cells) {
    if (*o.cells <= 0) throw ConfigError("cell count must be positive");
    json& g = j.at("grid");
    if (g.at("dimension").get<int>() == 2) {
      const double lx = g.at("upper")[0].get<double>() - g.at("lower")[0].get<double>();
      const double ly = g.at("upper")[1].get<double>() - g.at("lower")[1].get<double>();
      const int ny = static_cast<int>(std::lround(*o.cells * ly / lx));
      if (std::abs(*o.cells * ly / lx - ny) > 1e-9) throw ConfigError("cell count does not give square cells");
      g["cells"] = {*o.cells, ny};
    } else {
      g["cells"] = {*o.cells};
    }
  }
  json& s = j["scheme"];
  if (o.dt) s["dt"] = *o.dt;
  if (o.cfl) {
    s["cfl"] = *o.cfl;
    if (!o.dt) s.erase("dt");
  }
  if (o.alpha) s["alpha"] = *o.alpha;
  if (o.order) s["order"] = *o.order;
  if (o.end_time) s["end_time"] = *o.end_time;
  if (o.newton_tolerance) s["newton_tolerance"] = *o.newton_tolerance;
  if (o.epsilon) {
    if (j.value("units", "scaled") != "scaled") throw ConfigError("epsilon can only be overridden for scaled cases");
    j["physics"]["epsilon"] = *o.epsilon;
  }
  return j;
}

/// Scaled primitive state of the initial condition at position x.
inline Primitive initial_primitive(const CaseDefinition& c, const Vec2& x) {
  const json& ic = c.initial;
  const std::string type = ic.at("type").get<std::string>();
  auto prim = [](const json& j) {
    return Primitive{j.at("p").get<double>(), j.at("h").get<double>(),
                     {j.at("u")[0].get<double>(), j.at("u")[1].get<double>()}};
  };
  if (type == "uniform") return prim(ic);
  if (type == "riemann") return x[0] <= ic.at("interface").get<double>() ? prim(ic.at("left")) : prim(ic.at("right"));
  if (type == "colliding_pulses") {
    const double eps = c.step.eps;
    const double L = ic.at("L").get<double>();
    const double bump = 0.5 * (1.0 - std::cos(2.0 * M_PI * x[0] / L));
    const double rho = ic.at("rho0").get<double>() + eps * ic.at("rho1").get<double>() * bump;
    const double p = ic.at("p0").get<double>() + eps * ic.at("p1").get<double>() * bump;
    const double sgn = (x[0] > 0.0) - (x[0] < 0.0);
    const double u = sgn * ic.at("u0").get<double>() * bump;
    return {p, enthalpy_from_density(EosPerfectGas(c.gamma), p, rho), {u, 0.0}};
  }
  if (type == "taylor_green") {
    // u = A (sin x cos y, -cos x sin y), uniform p, rho = rho0 (1 + d cos x cos y)
    const double A = ic.value("amplitude", 1.0);
    const double p = ic.value("p", 1.0);
    const double rho = ic.value("rho", 1.0) * (1.0 + ic.value("rho_amplitude", 0.0) * std::cos(x[0]) * std::cos(x[1]));
    return {p,
            enthalpy_from_density(EosPerfectGas(c.gamma), p, rho),
            {A * std::sin(x[0]) * std::cos(x[1]), -A * std::cos(x[0]) * std::sin(x[1])}};
  }
  throw ConfigError("unknown initial condition type '" + type + "'");
}

template <EquationOfState E>
ConservativeState initial_state(const CaseDefinition& c, const StructuredGrid& grid, const E& eos) {
  ConservativeState U(grid.num_cells());
  for (int i = 0; i < grid.num_cells(); ++i)
    U[i] = conservative_from_primitive(initial_primitive(c, grid.center(i)), eos, c.step.eps);
  return U;
}

}  // namespace apflow
