#pragma once

#include <random>
#include <vector>

#include "apflow/apflow.hpp"

namespace apflow::test {

inline GridConfig line(int cells, double lo, double hi, BoundaryKind kind = BoundaryKind::periodic) {
  GridConfig g;
  g.dimension = 1;
  g.cells = {cells, 1};
  g.lower = {lo, 0.0};
  g.upper = {hi, 1.0};
  g.sides[x_lower].kind = g.sides[x_upper].kind = kind;
  return g;
}

inline GridConfig square(int cells, double lo, double hi, BoundaryKind kind = BoundaryKind::periodic) {
  GridConfig g;
  g.dimension = 2;
  g.cells = {cells, cells};
  g.lower = {lo, lo};
  g.upper = {hi, hi};
  for (auto& s : g.sides) s.kind = kind;
  return g;
}

/// Sod data (left p=1, h=3.5; right p=0.1, h=2.8) split at x = mid.
inline ConservativeState sod_state(const StructuredGrid& grid, double mid = 0.5, double eps = 1.0) {
  const EosPerfectGas gas(1.4);
  ConservativeState U(grid.num_cells());
  for (int c = 0; c < grid.num_cells(); ++c) {
    const bool left = grid.center(c)[0] <= mid;
    U[c] = conservative_from_primitive(left ? Primitive{1.0, 3.5, {0.0, 0.0}} : Primitive{0.1, 2.8, {0.0, 0.0}},
                                       gas, eps);
  }
  return U;
}

/// Periodic Sod variant on [0, 1]: high-pressure slab in the middle.
inline ConservativeState periodic_sod_state(const StructuredGrid& grid, double eps = 1.0) {
  const EosPerfectGas gas(1.4);
  ConservativeState U(grid.num_cells());
  for (int c = 0; c < grid.num_cells(); ++c) {
    const double x = grid.center(c)[0];
    const bool high = x > 0.25 && x < 0.75;
    U[c] = conservative_from_primitive(high ? Primitive{1.0, 3.5, {0.0, 0.0}} : Primitive{0.1, 2.8, {0.0, 0.0}},
                                       gas, eps);
  }
  return U;
}

/// Well-prepared 2D data on [0, 2pi]^2: uniform p, divergence-free velocity,
/// density modulated so the advective term does not vanish.
inline ConservativeState taylor_green_state(const StructuredGrid& grid, double eps, double rho_amplitude = 0.3,
                                            double amplitude = 1.0) {
  const EosPerfectGas gas(1.4);
  ConservativeState U(grid.num_cells());
  for (int c = 0; c < grid.num_cells(); ++c) {
    const Vec2 x = grid.center(c);
    const double rho = 1.0 + rho_amplitude * std::cos(x[0]) * std::cos(x[1]);
    const Primitive p{1.0, enthalpy_from_density(gas, 1.0, rho),
                      {amplitude * std::sin(x[0]) * std::cos(x[1]), -amplitude * std::cos(x[0]) * std::sin(x[1])}};
    U[c] = conservative_from_primitive(p, gas, eps);
  }
  return U;
}

inline double relative(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace apflow::test
