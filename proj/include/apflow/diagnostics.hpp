#pragma once

// Error norms, convergence orders, divergence, local Mach number,
// recirculation detection and conserved totals.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "apflow/mesh.hpp"

namespace apflow {

/// Piecewise-linear interpolation of (x, v) at xq; constant beyond the ends.
inline double interpolate(const std::vector<double>& x, const std::vector<double>& v, double xq) {
  if (x.empty() || x.size() != v.size()) throw std::invalid_argument("interpolation needs matching samples");
  if (xq <= x.front()) return v.front();
  if (xq >= x.back()) return v.back();
  const auto it = std::upper_bound(x.begin(), x.end(), xq);
  const std::size_t k = static_cast<std::size_t>(it - x.begin());
  const double w = (xq - x[k - 1]) / (x[k] - x[k - 1]);
  return (1.0 - w) * v[k - 1] + w * v[k];
}

/// sum |p(x_j) - p_ref(x_j)| / sum |p_ref(x_j)| with the coarse field
/// interpolated to the reference points.
inline double l1_error(const std::vector<double>& x, const std::vector<double>& v, const std::vector<double>& x_ref,
                       const std::vector<double>& v_ref) {
  if (x_ref.size() != v_ref.size()) throw std::invalid_argument("reference samples do not match");
  double num = 0.0, den = 0.0;
  for (std::size_t j = 0; j < x_ref.size(); ++j) {
    num += std::abs(interpolate(x, v, x_ref[j]) - v_ref[j]);
    den += std::abs(v_ref[j]);
  }
  if (den == 0.0) throw std::invalid_argument("reference field has zero L1 norm");
  return num / den;
}

struct ErrorRow {
  int cells = 0;
  double dx = 0.0;
  double dt = 0.0;
  double error = 0.0;
  std::optional<double> order;  // log2(E(previous) / E(this)), set from the second row on
};

struct ErrorReport {
  std::vector<ErrorRow> rows;

  void estimate_orders() {
    for (std::size_t k = 0; k < rows.size(); ++k) {
      rows[k].order.reset();
      if (k == 0) continue;
      const double a = rows[k - 1].error, b = rows[k].error;
      if (a > 0.0 && b > 0.0) rows[k].order = std::log(a / b) / std::log(rows[k - 1].dx / rows[k].dx);
    }
  }

  void write_csv(std::ostream& os) const {
    os.precision(17);
    os << "cells,dx,dt,l1_error,order\n";
    for (const auto& r : rows) {
      os << r.cells << ',' << r.dx << ',' << r.dt << ',' << r.error << ',';
      if (r.order) os << *r.order;
      os << '\n';
    }
  }
};

/// Face-averaged divergence, the operator of the mass flux:
/// (1/V) sum_faces s (u_i + u_v)/2 . n, with u_v taken from the ghost field.
inline std::vector<double> divergence_field(const StructuredGrid& grid, const GhostedField<CellState>& g) {
  std::vector<double> div(grid.num_cells(), 0.0);
  for (const Face& f : grid.faces()) {
    const FaceStencil s = face_stencil(grid, g, f);
    const double un = 0.5 * (s.v[1].prim.u[f.axis] + s.v[2].prim.u[f.axis]) / grid.dx();
    if (f.left >= 0) div[f.left] += un;
    if (f.right >= 0) div[f.right] -= un;
  }
  return div;
}

/// Same operator on a bare velocity field; non-periodic boundaries copy the
/// boundary cell, masked blocks reflect it.
inline std::vector<double> divergence_field(const StructuredGrid& grid, const std::vector<Vec2>& u) {
  std::vector<CellState> cells(grid.num_cells());
  for (int c = 0; c < grid.num_cells(); ++c) cells[c].prim.u = u[c];
  GhostedField<CellState> g(grid, CellState{});
  for (int c = 0; c < grid.num_cells(); ++c) g.at(grid.coords(c)) = cells[c];
  const int nx = grid.nx(), ny = grid.ny();
  auto clamp_src = [&](int i, int j) {
    if (grid.periodic(0)) i = (i % nx + nx) % nx; else i = std::clamp(i, 0, nx - 1);
    if (grid.dimension() == 2) {
      if (grid.periodic(1)) j = (j % ny + ny) % ny; else j = std::clamp(j, 0, ny - 1);
    }
    return cells[grid.index(i, j)];
  };
  const int gy = grid.dimension() == 2 ? kGhostWidth : 0;
  for (int j = -gy; j < ny + gy; ++j)
    for (int i = -kGhostWidth; i < nx + kGhostWidth; ++i)
      if (!grid.in_domain(i, j)) g.at(i, j) = clamp_src(i, grid.dimension() == 2 ? j : 0);
  return divergence_field(grid, g);
}

inline double max_abs(const std::vector<double>& v, const StructuredGrid* grid = nullptr) {
  double m = 0.0;
  for (std::size_t c = 0; c < v.size(); ++c)
    if (!grid || grid->fluid(static_cast<int>(c))) m = std::max(m, std::abs(v[c]));
  return m;
}

/// eps |u| / a_m per cell.
inline std::vector<double> local_mach(const std::vector<CellState>& cells, double eps) {
  std::vector<double> m(cells.size());
  for (std::size_t c = 0; c < cells.size(); ++c) m[c] = eps * std::sqrt(norm2(cells[c].prim.u) / cells[c].am2);
  return m;
}

struct Recirculation {
  bool found = false;
  Vec2 center{0.0, 0.0};
  double circulation = 0.0;
};

/// Looks for a vortex: a 2x2 block of fluid cells where u changes sign between
/// the lower and upper pair and v between the left and right pair, both with
/// the rotation sense of the loop circulation, and |circulation| exceeds the
/// threshold. Reports the strongest block; the center is the shared vertex.
inline Recirculation detect_recirculation(const StructuredGrid& grid, const std::vector<Vec2>& u,
                                          const std::optional<Box>& region = std::nullopt,
                                          double threshold = 1e-3) {
  Recirculation best;
  if (grid.dimension() != 2) return best;
  const double dx = grid.dx();
  for (int j = 0; j + 1 < grid.ny(); ++j) {
    for (int i = 0; i + 1 < grid.nx(); ++i) {
      const int c00 = grid.index(i, j), c10 = grid.index(i + 1, j);
      const int c01 = grid.index(i, j + 1), c11 = grid.index(i + 1, j + 1);
      if (!grid.fluid(c00) || !grid.fluid(c10) || !grid.fluid(c01) || !grid.fluid(c11)) continue;
      const Vec2 vertex{grid.origin()[0] + (i + 1) * dx, grid.origin()[1] + (j + 1) * dx};
      if (region && (vertex[0] < region->lower[0] || vertex[0] > region->upper[0] ||
                     vertex[1] < region->lower[1] || vertex[1] > region->upper[1]))
        continue;
      // Counter-clockwise loop through the four centers.
      const double gamma = dx * (0.5 * (u[c00][0] + u[c10][0]) + 0.5 * (u[c10][1] + u[c11][1]) -
                                 0.5 * (u[c11][0] + u[c01][0]) - 0.5 * (u[c01][1] + u[c00][1]));
      const double s = gamma > 0.0 ? 1.0 : -1.0;
      const bool u_turns = (s * u[c00][0] > 0.0 && s * u[c01][0] < 0.0) ||
                           (s * u[c10][0] > 0.0 && s * u[c11][0] < 0.0);
      const bool v_turns = (s * u[c00][1] < 0.0 && s * u[c10][1] > 0.0) ||
                           (s * u[c01][1] < 0.0 && s * u[c11][1] > 0.0);
      const bool turning = u_turns && v_turns;
      if (!turning || std::abs(gamma) <= threshold) continue;
      if (!best.found || std::abs(gamma) > std::abs(best.circulation)) best = {true, vertex, gamma};
    }
  }
  return best;
}

/// Sum of V * value over fluid cells in cell order.
template <class F>
double total(const StructuredGrid& grid, F&& value) {
  double s = 0.0;
  for (int c = 0; c < grid.num_cells(); ++c)
    if (grid.fluid(c)) s += grid.volume() * value(c);
  return s;
}

/// First crossing of `level` when scanning v from the right; the position is
/// interpolated between the two bracketing samples.
inline double locate_crossing_from_right(const std::vector<double>& x, const std::vector<double>& v, double level) {
  for (std::size_t k = v.size() - 1; k > 0; --k) {
    const double a = v[k - 1] - level, b = v[k] - level;
    if ((a >= 0.0) != (b >= 0.0)) return x[k - 1] + (x[k] - x[k - 1]) * a / (a - b);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace apflow
