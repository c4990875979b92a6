#pragma once

// Uniform Cartesian grids in 1D/2D, face enumeration, boundary tags and
// ghost layers of width two.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "apflow/state.hpp"

namespace apflow {

inline constexpr int kGhostWidth = 2;

class ConfigError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

enum class BoundaryKind { periodic, neumann, slip_wall, inlet, outlet, isothermal_wall, adiabatic_wall };

inline std::string_view to_string(BoundaryKind k) {
  switch (k) {
    case BoundaryKind::periodic: return "periodic";
    case BoundaryKind::neumann: return "neumann";
    case BoundaryKind::slip_wall: return "slip_wall";
    case BoundaryKind::inlet: return "inlet";
    case BoundaryKind::outlet: return "outlet";
    case BoundaryKind::isothermal_wall: return "isothermal_wall";
    case BoundaryKind::adiabatic_wall: return "adiabatic_wall";
  }
  return "?";
}

inline BoundaryKind boundary_kind_from_string(std::string_view s) {
  for (auto k : {BoundaryKind::periodic, BoundaryKind::neumann, BoundaryKind::slip_wall, BoundaryKind::inlet,
                 BoundaryKind::outlet, BoundaryKind::isothermal_wall, BoundaryKind::adiabatic_wall})
    if (to_string(k) == s) return k;
  throw ConfigError("unknown boundary tag '" + std::string(s) + "'");
}

inline bool is_wall(BoundaryKind k) {
  return k == BoundaryKind::slip_wall || k == BoundaryKind::isothermal_wall || k == BoundaryKind::adiabatic_wall;
}

/// Sides in the order x_lower, x_upper, y_lower, y_upper.
enum Side : int { x_lower = 0, x_upper = 1, y_lower = 2, y_upper = 3 };

inline constexpr std::array<std::string_view, 4> kSideNames{"x_lower", "x_upper", "y_lower", "y_upper"};

inline int side_axis(int side) { return side / 2; }
inline int side_direction(int side) { return side % 2 == 0 ? -1 : +1; }

struct SideSpec {
  BoundaryKind kind = BoundaryKind::neumann;
  double wall_speed = 0.0;      // tangential speed of a moving wall
  double wall_ramp_time = 0.0;  // speed ramps linearly from 0 over this time
};

struct Box {
  Vec2 lower{0.0, 0.0};
  Vec2 upper{0.0, 0.0};
};

struct GridConfig {
  int dimension = 1;
  std::array<int, 2> cells{1, 1};
  Vec2 lower{0.0, 0.0};
  Vec2 upper{1.0, 1.0};
  std::array<SideSpec, 4> sides{};
  std::vector<Box> solids;  // cells whose centers fall inside are excluded from the flow
};

/// Per-side data needed by tags that impose values.
struct SideData {
  std::optional<Vec2> velocity;   // inlet
  std::optional<double> enthalpy; // inlet, isothermal wall
  std::optional<double> pressure; // outlet
};

struct BoundaryData {
  std::array<SideData, 4> sides{};
};

struct Face {
  int axis = 0;
  int left = -1;   // fluid cell on the low side, -1 if ghost or solid
  int right = -1;  // fluid cell on the high side
  std::array<int, 2> left_pos{0, 0};  // grid coordinates of the low-side position (may be outside)
  int side = -1;                      // domain side for boundary faces, -1 otherwise
  bool solid = false;                 // boundary face against a masked block
  bool boundary() const { return left < 0 || right < 0; }
};

struct Neighbor {
  enum class Kind { cell, boundary, solid } kind = Kind::cell;
  int cell = -1;
  int side = -1;
};

class StructuredGrid {
public:
  StructuredGrid() = default;

  int dimension() const { return dim_; }
  int nx() const { return n_[0]; }
  int ny() const { return n_[1]; }
  int cells(int axis) const { return n_[axis]; }
  int num_cells() const { return n_[0] * n_[1]; }
  double dx() const { return dx_; }
  const Vec2& origin() const { return origin_; }
  const SideSpec& side(int s) const { return sides_[s]; }
  int num_sides() const { return 2 * dim_; }

  double volume() const { return dim_ == 1 ? dx_ : dx_ * dx_; }
  double face_area() const { return dim_ == 1 ? 1.0 : dx_; }

  int index(int i, int j = 0) const { return i + n_[0] * j; }
  std::array<int, 2> coords(int c) const { return {c % n_[0], c / n_[0]}; }
  bool in_domain(int i, int j) const { return i >= 0 && i < n_[0] && j >= 0 && j < n_[1]; }
  bool fluid(int c) const { return solid_[c] == 0; }
  bool fluid_at(int i, int j) const { return in_domain(i, j) && fluid(index(i, j)); }
  bool has_solids() const { return num_solid_ > 0; }
  int num_fluid_cells() const { return num_cells() - num_solid_; }

  Vec2 center(int c) const {
    const auto [i, j] = coords(c);
    return {origin_[0] + (i + 0.5) * dx_, dim_ == 2 ? origin_[1] + (j + 0.5) * dx_ : 0.0};
  }

  bool periodic(int axis) const { return sides_[2 * axis].kind == BoundaryKind::periodic; }

  double wall_speed(int side, double t) const {
    const SideSpec& s = sides_[side];
    if (s.wall_speed == 0.0) return 0.0;
    if (s.wall_ramp_time <= 0.0) return s.wall_speed;
    return std::min(t / s.wall_ramp_time, 1.0) * s.wall_speed;
  }

  /// All faces touching at least one fluid cell: x faces row by row, then y faces.
  const std::vector<Face>& faces() const { return faces_; }

  /// What lies one step from cell c along +/- axis.
  Neighbor neighbor(int c, int axis, int dir) const {
    auto pos = coords(c);
    pos[axis] += dir;
    if (pos[axis] < 0 || pos[axis] >= n_[axis]) {
      if (periodic(axis)) {
        pos[axis] = (pos[axis] + n_[axis]) % n_[axis];
      } else {
        return {Neighbor::Kind::boundary, -1, 2 * axis + (dir > 0 ? 1 : 0)};
      }
    }
    const int nb = index(pos[0], pos[1]);
    if (!fluid(nb)) return {Neighbor::Kind::solid, nb, -1};
    return {Neighbor::Kind::cell, nb, -1};
  }

  friend StructuredGrid build_grid(const GridConfig& config);

private:
  void build_faces();

  int dim_ = 1;
  std::array<int, 2> n_{1, 1};
  double dx_ = 1.0;
  Vec2 origin_{0.0, 0.0};
  std::array<SideSpec, 4> sides_{};
  std::vector<unsigned char> solid_;
  int num_solid_ = 0;
  std::vector<Face> faces_;
};

inline void StructuredGrid::build_faces() {
  faces_.clear();
  for (int axis = 0; axis < dim_; ++axis) {
    const int other = 1 - axis;
    const int n_axis = n_[axis];
    const int n_other = dim_ == 2 ? n_[other] : 1;
    const bool per = periodic(axis);
    // x faces iterate rows (j outer); y faces iterate columns... kept lexicographic by (other, axis).
    for (int t = 0; t < n_other; ++t) {
      for (int k = per ? 0 : -1; k < n_axis; ++k) {
        std::array<int, 2> lp{0, 0};
        lp[axis] = k;
        lp[other] = t;
        std::array<int, 2> rp = lp;
        rp[axis] = k + 1;
        auto resolve = [&](std::array<int, 2> p, int& cell, bool& solid, int& side) {
          if (p[axis] < 0 || p[axis] >= n_axis) {
            if (per) {
              p[axis] = (p[axis] + n_axis) % n_axis;
            } else {
              side = 2 * axis + (p[axis] < 0 ? 0 : 1);
              cell = -1;
              return;
            }
          }
          const int c = index(p[0], p[1]);
          if (fluid(c)) {
            cell = c;
          } else {
            cell = -1;
            solid = true;
          }
        };
        Face f;
        f.axis = axis;
        f.left_pos = lp;
        bool ls = false, rs = false;
        int lside = -1, rside = -1;
        resolve(lp, f.left, ls, lside);
        resolve(rp, f.right, rs, rside);
        if (f.left < 0 && f.right < 0) continue;
        if (f.left < 0) {
          f.solid = ls;
          f.side = lside;
        } else if (f.right < 0) {
          f.solid = rs;
          f.side = rside;
        }
        faces_.push_back(f);
      }
    }
  }
}

inline StructuredGrid build_grid(const GridConfig& config) {
  if (config.dimension != 1 && config.dimension != 2) throw ConfigError("grid dimension must be 1 or 2");
  StructuredGrid g;
  g.dim_ = config.dimension;
  g.n_ = {config.cells[0], config.dimension == 2 ? config.cells[1] : 1};
  for (int a = 0; a < g.dim_; ++a) {
    if (g.n_[a] <= 0) throw ConfigError("cell counts must be positive");
    if (!(config.upper[a] > config.lower[a])) throw ConfigError("domain upper bound must exceed lower bound");
  }
  g.dx_ = (config.upper[0] - config.lower[0]) / g.n_[0];
  if (g.dim_ == 2) {
    const double dy = (config.upper[1] - config.lower[1]) / g.n_[1];
    if (std::abs(dy - g.dx_) > 1e-10 * g.dx_) throw ConfigError("2D grids require equal spacing in x and y");
  }
  g.origin_ = {config.lower[0], g.dim_ == 2 ? config.lower[1] : 0.0};
  g.sides_ = config.sides;
  for (int a = 0; a < g.dim_; ++a) {
    const bool lo = config.sides[2 * a].kind == BoundaryKind::periodic;
    const bool hi = config.sides[2 * a + 1].kind == BoundaryKind::periodic;
    if (lo != hi) throw ConfigError("periodic tag on " + std::string(kSideNames[2 * a + (lo ? 0 : 1)]) +
                                    " requires a periodic opposite side");
  }
  if (g.dim_ == 1) {
    g.sides_[y_lower] = SideSpec{};
    g.sides_[y_upper] = SideSpec{};
  }
  g.solid_.assign(g.num_cells(), 0);
  if (!config.solids.empty() && g.dim_ != 2) throw ConfigError("solid blocks are only supported in 2D");
  for (int c = 0; c < g.num_cells(); ++c) {
    const Vec2 x = g.center(c);
    for (const Box& b : config.solids) {
      if (x[0] > b.lower[0] && x[0] < b.upper[0] && x[1] > b.lower[1] && x[1] < b.upper[1]) {
        g.solid_[c] = 1;
        ++g.num_solid_;
        break;
      }
    }
  }
  if (g.num_solid_ == g.num_cells()) throw ConfigError("no fluid cells left after masking");
  g.build_faces();
  return g;
}

/// Interior values plus a ghost frame of width two (only along x in 1D).
template <class T>
class GhostedField {
public:
  GhostedField() = default;
  GhostedField(const StructuredGrid& grid, const T& fill)
      : nx_(grid.nx()), ny_(grid.ny()), gy_(grid.dimension() == 2 ? kGhostWidth : 0),
        data_(static_cast<std::size_t>(nx_ + 2 * kGhostWidth) * (ny_ + 2 * gy_), fill) {}

  T& at(int i, int j = 0) { return data_[offset(i, j)]; }
  const T& at(int i, int j = 0) const { return data_[offset(i, j)]; }
  T& at(const std::array<int, 2>& p) { return at(p[0], p[1]); }
  const T& at(const std::array<int, 2>& p) const { return at(p[0], p[1]); }

private:
  std::size_t offset(int i, int j) const {
    return static_cast<std::size_t>(j + gy_) * (nx_ + 2 * kGhostWidth) + (i + kGhostWidth);
  }
  int nx_ = 0, ny_ = 0, gy_ = 0;
  std::vector<T> data_;
};

/// Mirrors a cell state across a face normal to `axis`.
inline CellState mirror(CellState s, int axis) {
  s.cons.q[axis] = -s.cons.q[axis];
  s.prim.u[axis] = -s.prim.u[axis];
  return s;
}

inline void set_tangential_velocity(CellState& s, int tangential_axis, double value, double eps) {
  const double rho = s.cons.rho;
  const double ke_old = 0.5 * eps * eps * rho * norm2(s.prim.u);
  s.prim.u[tangential_axis] = value;
  s.cons.q[tangential_axis] = rho * value;
  const double ke_new = 0.5 * eps * eps * rho * norm2(s.prim.u);
  s.cons.W += ke_new - ke_old;
  s.H = s.prim.h + 0.5 * eps * eps * norm2(s.prim.u);
}

inline void require_side_data(const StructuredGrid& grid, const BoundaryData& bc) {
  for (int s = 0; s < grid.num_sides(); ++s) {
    const SideData& d = bc.sides[s];
    const std::string name(kSideNames[s]);
    switch (grid.side(s).kind) {
      case BoundaryKind::inlet:
        if (!d.velocity || !d.enthalpy) throw ConfigError("inlet on " + name + " needs velocity and enthalpy");
        break;
      case BoundaryKind::outlet:
        if (!d.pressure) throw ConfigError("outlet on " + name + " needs a pressure");
        break;
      case BoundaryKind::isothermal_wall:
        if (!d.enthalpy) throw ConfigError("isothermal wall on " + name + " needs a wall enthalpy");
        break;
      default: break;
    }
  }
}

/// Builds the ghosted field for `interior` (one entry per grid cell). Solid
/// cells are copied as-is; faces against them are handled by face_stencil.
template <EquationOfState E>
GhostedField<CellState> fill_ghosts(const StructuredGrid& grid, const std::vector<CellState>& interior,
                                    const BoundaryData& bc, const E& eos, double eps, double time = 0.0) {
  if (static_cast<int>(interior.size()) != grid.num_cells())
    throw ConfigError("state size does not match the grid");
  require_side_data(grid, bc);
  GhostedField<CellState> out(grid, interior.empty() ? CellState{} : interior.front());
  const int nx = grid.nx(), ny = grid.ny();
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) out.at(i, j) = interior[grid.index(i, j)];

  auto fill_side = [&](int side, int t_lo, int t_hi) {
    const int axis = side_axis(side);
    const int other = 1 - axis;
    const int n = grid.cells(axis);
    const int dir = side_direction(side);
    const SideSpec& spec = grid.side(side);
    const SideData& data = bc.sides[side];
    for (int t = t_lo; t < t_hi; ++t) {
      for (int layer = 1; layer <= kGhostWidth; ++layer) {
        std::array<int, 2> gp{0, 0}, bp{0, 0}, mp{0, 0};
        gp[other] = bp[other] = mp[other] = t;
        gp[axis] = dir < 0 ? -layer : n - 1 + layer;
        bp[axis] = dir < 0 ? 0 : n - 1;
        const int mirror_k = std::min(layer - 1, n - 1);
        mp[axis] = dir < 0 ? mirror_k : n - 1 - mirror_k;
        CellState& g = out.at(gp);
        if (spec.kind == BoundaryKind::periodic) {
          std::array<int, 2> wp = gp;
          wp[axis] = (gp[axis] + n) % n;
          g = out.at(wp);
          continue;
        }
        const CellState& b = out.at(bp);
        const CellState& m = (grid.dimension() == 1 || grid.in_domain(mp[0], mp[1])) &&
                                     grid.fluid(grid.index(mp[0], mp[1]))
                                 ? out.at(mp)
                                 : b;
        switch (spec.kind) {
          case BoundaryKind::neumann:
            g = b;
            break;
          case BoundaryKind::slip_wall:
          case BoundaryKind::isothermal_wall:
          case BoundaryKind::adiabatic_wall: {
            g = mirror(m, axis);
            const double uw = grid.wall_speed(side, time);
            if (uw != 0.0 && grid.dimension() == 2)
              set_tangential_velocity(g, other, 2.0 * uw - m.prim.u[other], eps);
            break;
          }
          case BoundaryKind::inlet: {
            Primitive prim{b.prim.p, *data.enthalpy, *data.velocity};
            g = make_cell_state(prim, eos, eps);
            break;
          }
          case BoundaryKind::outlet: {
            Primitive prim{*data.pressure, b.prim.h, b.prim.u};
            g = make_cell_state(prim, eos, eps);
            break;
          }
          case BoundaryKind::periodic: break;
        }
      }
    }
  };

  // x sides over interior rows first, then y sides over the full x extent so corners are defined.
  fill_side(x_lower, 0, ny);
  fill_side(x_upper, 0, ny);
  if (grid.dimension() == 2) {
    fill_side(y_lower, -kGhostWidth, nx + kGhostWidth);
    fill_side(y_upper, -kGhostWidth, nx + kGhostWidth);
  }
  return out;
}

/// Enthalpy seen across a boundary by the conduction operator.
inline double conduction_ghost_enthalpy(const StructuredGrid& grid, const BoundaryData& bc, int side,
                                        double h_inside, double h_flux_ghost) {
  if (side >= 0 && grid.side(side).kind == BoundaryKind::isothermal_wall)
    return 2.0 * *bc.sides[side].enthalpy - h_inside;
  return h_flux_ghost;
}

/// The four states (i-1, i, i+1, i+2) straddling a face along its axis.
/// Positions inside masked blocks are replaced by slip-wall reflections.
struct FaceStencil {
  std::array<CellState, 4> v;
};

inline FaceStencil face_stencil(const StructuredGrid& grid, const GhostedField<CellState>& field, const Face& f) {
  const int a = f.axis;
  auto pos = [&](int k) {
    std::array<int, 2> p = f.left_pos;
    p[a] += k;
    return p;
  };
  auto solid_at = [&](const std::array<int, 2>& p) {
    if (grid.dimension() == 2) {
      if (!grid.in_domain(p[0], p[1])) return false;
    } else if (p[0] < 0 || p[0] >= grid.nx()) {
      return false;
    }
    return !grid.fluid(grid.index(p[0], p[1]));
  };
  FaceStencil s;
  const bool solid_m1 = solid_at(pos(-1)), solid_0 = solid_at(pos(0));
  const bool solid_1 = solid_at(pos(1)), solid_2 = solid_at(pos(2));
  // Raw values first.
  for (int k = 0; k < 4; ++k) s.v[k] = field.at(pos(k - 1));
  if (!grid.has_solids()) return s;
  if (solid_0) {
    s.v[1] = mirror(s.v[2], a);
    s.v[0] = solid_2 ? s.v[1] : mirror(s.v[3], a);
  } else if (solid_m1) {
    s.v[0] = mirror(s.v[1], a);
  }
  if (solid_1) {
    s.v[2] = mirror(s.v[1], a);
    s.v[3] = solid_m1 ? s.v[2] : mirror(s.v[0], a);
  } else if (solid_2) {
    s.v[3] = mirror(s.v[2], a);
  }
  return s;
}

}  // namespace apflow
