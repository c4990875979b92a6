#pragma once

// Run manifests: a case reference plus overrides, output directory, formats
// and snapshot schedule. Stored as JSON; command-line flags are merged on top.

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "apflow/cases.hpp"

namespace apflow {

struct RunManifest {
  std::string case_ref;
  CaseOverrides overrides;
  std::string output_dir;
  std::vector<std::string> formats{"csv"};
  std::vector<double> snapshot_times;  // added to the case's own schedule
  std::optional<int> snapshot_every;
  bool general_eos = false;
  int threads = 1;
};

namespace detail {

template <class T>
std::optional<T> typed(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) return std::nullopt;
  const json& v = obj.at(key);
  if constexpr (std::is_same_v<T, int>) {
    if (!v.is_number_integer()) throw ConfigError(where + "." + key + " must be an integer");
  } else if constexpr (std::is_same_v<T, double>) {
    if (!v.is_number()) throw ConfigError(where + "." + key + " must be a number");
  } else if constexpr (std::is_same_v<T, bool>) {
    if (!v.is_boolean()) throw ConfigError(where + "." + key + " must be a boolean");
  } else {
    if (!v.is_string()) throw ConfigError(where + "." + key + " must be a string");
  }
  return v.get<T>();
}

inline void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [k, v] : obj.items())
    if (!allowed.count(k)) throw ConfigError("unknown key '" + k + "' in " + where);
}

}  // namespace detail

inline void validate_formats(const std::vector<std::string>& formats) {
  for (const auto& f : formats)
    if (f != "csv" && f != "vtk") throw ConfigError("unknown output format '" + f + "'");
}

inline RunManifest parse_manifest(const json& j) {
  using detail::typed;
  detail::reject_unknown(j, {"case", "overrides", "output", "general_eos", "threads"}, "manifest");
  RunManifest m;
  m.case_ref = typed<std::string>(j, "case", "manifest").value_or("");
  if (j.contains("overrides")) {
    const json& o = j.at("overrides");
    detail::reject_unknown(o, {"cells", "dt", "cfl", "alpha", "epsilon", "order", "end_time", "newton_tolerance"},
                           "manifest.overrides");
    const std::string w = "manifest.overrides";
    m.overrides.cells = typed<int>(o, "cells", w);
    m.overrides.dt = typed<double>(o, "dt", w);
    m.overrides.cfl = typed<double>(o, "cfl", w);
    m.overrides.alpha = typed<double>(o, "alpha", w);
    m.overrides.epsilon = typed<double>(o, "epsilon", w);
    m.overrides.order = typed<int>(o, "order", w);
    m.overrides.end_time = typed<double>(o, "end_time", w);
    m.overrides.newton_tolerance = typed<double>(o, "newton_tolerance", w);
  }
  if (j.contains("output")) {
    const json& o = j.at("output");
    detail::reject_unknown(o, {"directory", "formats", "snapshot_times", "snapshot_every"}, "manifest.output");
    m.output_dir = typed<std::string>(o, "directory", "manifest.output").value_or("");
    if (o.contains("formats")) {
      if (!o.at("formats").is_array()) throw ConfigError("manifest.output.formats must be an array");
      m.formats.clear();
      for (const auto& f : o.at("formats")) {
        if (!f.is_string()) throw ConfigError("manifest.output.formats entries must be strings");
        m.formats.push_back(f.get<std::string>());
      }
    }
    if (o.contains("snapshot_times")) {
      if (!o.at("snapshot_times").is_array()) throw ConfigError("manifest.output.snapshot_times must be an array");
      for (const auto& t : o.at("snapshot_times")) {
        if (!t.is_number()) throw ConfigError("manifest.output.snapshot_times entries must be numbers");
        m.snapshot_times.push_back(t.get<double>());
      }
    }
    m.snapshot_every = typed<int>(o, "snapshot_every", "manifest.output");
  }
  m.general_eos = typed<bool>(j, "general_eos", "manifest").value_or(false);
  m.threads = typed<int>(j, "threads", "manifest").value_or(1);
  validate_formats(m.formats);
  return m;
}

inline json manifest_json(const RunManifest& m) {
  json o = json::object();
  const CaseOverrides& v = m.overrides;
  if (v.cells) o["cells"] = *v.cells;
  if (v.dt) o["dt"] = *v.dt;
  if (v.cfl) o["cfl"] = *v.cfl;
  if (v.alpha) o["alpha"] = *v.alpha;
  if (v.epsilon) o["epsilon"] = *v.epsilon;
  if (v.order) o["order"] = *v.order;
  if (v.end_time) o["end_time"] = *v.end_time;
  if (v.newton_tolerance) o["newton_tolerance"] = *v.newton_tolerance;
  json out = {{"directory", m.output_dir}, {"formats", m.formats}, {"snapshot_times", m.snapshot_times}};
  if (m.snapshot_every) out["snapshot_every"] = *m.snapshot_every;
  return {{"case", m.case_ref},
          {"overrides", o},
          {"output", out},
          {"general_eos", m.general_eos},
          {"threads", m.threads}};
}

/// Resolves the manifest into a case definition, with validation of every
/// override. Nothing is written.
inline CaseDefinition resolve_manifest(const RunManifest& m) {
  if (m.case_ref.empty()) throw ConfigError("no case given");
  if (m.threads < 1) throw ConfigError("threads must be at least 1");
  if (m.snapshot_every && *m.snapshot_every < 0) throw ConfigError("snapshot_every must be non-negative");
  validate_formats(m.formats);
  CaseDefinition cd = resolve_case(apply_overrides(case_json(m.case_ref), m.overrides));
  for (double t : m.snapshot_times) {
    if (!(t >= 0.0)) throw ConfigError("snapshot times must be non-negative");
    cd.snapshot_times.push_back(cd.scaling ? cd.scaling->time(t) : t);
  }
  if (m.snapshot_every) cd.snapshot_every = *m.snapshot_every;
  return cd;
}

}  // namespace apflow
