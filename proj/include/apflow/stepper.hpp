#pragma once

// One time step of the all-speed scheme: explicit mass and momentum predictor,
// implicit pressure, momentum closure, conservative energy update.
// Also hosts the source terms, the time-step rule and a fully explicit
// Rusanov baseline for comparison.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "apflow/flux.hpp"
#include "apflow/pressure_solver.hpp"

namespace apflow {

struct StepConfig {
  double cfl = 0.5;
  double alpha = 0.0;
  double eps = 1.0;
  int order = 1;
  bool viscous = false;
  bool conduction = false;
  bool gravity = false;
  double reynolds = 0.0;
  double prandtl = 0.0;
  Vec2 f_ext{0.0, 0.0};
  double dt_max = std::numeric_limits<double>::infinity();
  NewtonOptions newton{};
  LinearSolverKind linear_solver = LinearSolverKind::automatic;

  double viscosity() const { return viscous ? 1.0 / reynolds : 0.0; }
  double conductivity() const { return conduction ? 1.0 / (reynolds * prandtl) : 0.0; }

  void validate() const {
    if (!(cfl > 0.0 && cfl <= 1.0)) throw ConfigError("CFL must lie in (0, 1]");
    if (order != 1 && order != 2) throw ConfigError("order must be 1 or 2");
    if (!(eps > 0.0)) throw ConfigError("epsilon must be positive");
    if (!(alpha >= 0.0)) throw ConfigError("alpha must be non-negative");
    if ((viscous || conduction) && !(reynolds > 0.0)) throw ConfigError("viscous terms need Re > 0");
    if (conduction && !(prandtl > 0.0)) throw ConfigError("conduction needs Pr > 0");
    if (!(dt_max > 0.0)) throw ConfigError("dt_max must be positive");
  }
};

struct SourceTerms {
  std::vector<double> rho;
  std::vector<Vec2> q;
  std::vector<double> W;

  explicit SourceTerms(std::size_t n = 0) : rho(n, 0.0), q(n, Vec2{0.0, 0.0}), W(n, 0.0) {}
};

struct StepReport {
  double dt = 0.0;
  int newton_iterations = 0;
  int linear_iterations = 0;
  double energy_residual = 0.0;  // |W - KE^n - rho e(p)| after the step
};

/// Per-cell explicit flux divergences (already divided by the cell size).
struct ExplicitResidual {
  std::vector<double> mass;
  std::vector<Vec2> momentum;
  std::vector<double> energy;       // centered H q . n plus dissipation
  std::vector<double> dissipation;  // D_W only

  explicit ExplicitResidual(std::size_t n)
      : mass(n, 0.0), momentum(n, Vec2{0.0, 0.0}), energy(n, 0.0), dissipation(n, 0.0) {}
};

namespace detail {

/// State seen from cell (i, j) one step along axis: fluid cell, ghost, or
/// slip reflection of the cell itself for masked blocks.
inline const CellState& neighbor_state(const StructuredGrid& grid, const GhostedField<CellState>& g,
                                       std::array<int, 2> pos, int axis, int dir, CellState& scratch,
                                       bool* interior = nullptr) {
  const std::array<int, 2> from = pos;
  pos[axis] += dir;
  const bool inside = grid.dimension() == 2 ? grid.in_domain(pos[0], pos[1]) : (pos[0] >= 0 && pos[0] < grid.nx());
  if (interior) *interior = inside;
  if (inside && !grid.fluid(grid.index(pos[0], pos[1]))) {
    scratch = mirror(g.at(from), axis);
    if (interior) *interior = false;
    return scratch;
  }
  if (!inside && grid.periodic(axis) && interior) *interior = true;
  return g.at(pos);
}

}  // namespace detail

/// Viscous, conduction and gravity sources at t^n.
inline SourceTerms evaluate_sources(const StructuredGrid& grid, const BoundaryData& bc,
                                    const GhostedField<CellState>& g, const StepConfig& cfg) {
  const int n = grid.num_cells();
  SourceTerms s(n);
  const double dx = grid.dx();
  const int dim = grid.dimension();
  const double mu = cfg.viscosity();
  const double kc = cfg.conductivity();
  const double e2 = cfg.eps * cfg.eps;
  CellState scratch, scratch2, scratch3;

  // Centered derivative of u along axis t at position pos.
  auto transverse = [&](std::array<int, 2> pos, int t) {
    const CellState& up = detail::neighbor_state(grid, g, pos, t, +1, scratch2);
    const CellState& um = detail::neighbor_state(grid, g, pos, t, -1, scratch3);
    return Vec2{(up.prim.u[0] - um.prim.u[0]) / (2.0 * dx), (up.prim.u[1] - um.prim.u[1]) / (2.0 * dx)};
  };

  for (int c = 0; c < n; ++c) {
    if (!grid.fluid(c)) continue;
    const auto pos = grid.coords(c);
    const CellState& me = g.at(pos);
    if (mu > 0.0) {
      Vec2 div{0.0, 0.0};
      for (int a = 0; a < dim; ++a) {
        const int t = 1 - a;
        const Vec2 dt_me = dim == 2 ? transverse(pos, t) : Vec2{0.0, 0.0};
        for (int dir = -1; dir <= 1; dir += 2) {
          bool interior = false;
          const CellState& nb = detail::neighbor_state(grid, g, pos, a, dir, scratch, &interior);
          Vec2 dt_face = dt_me;
          if (dim == 2 && interior) {
            auto npos = pos;
            npos[a] += dir;
            npos[a] = (npos[a] + grid.cells(a)) % grid.cells(a);
            const Vec2 dt_nb = transverse(npos, t);
            dt_face = {0.5 * (dt_me[0] + dt_nb[0]), 0.5 * (dt_me[1] + dt_nb[1])};
          }
          const double rho_f = 0.5 * (me.cons.rho + nb.cons.rho);
          Vec2 dn;  // d u_k / d x_a at the face
          for (int k = 0; k < 2; ++k) dn[k] = dir * (nb.prim.u[k] - me.prim.u[k]) / dx;
          // grad u at the face: d_a u_k = dn[k], d_t u_k = dt_face[k]
          const double div_u = dn[a] + (dim == 2 ? dt_face[t] : 0.0);
          Vec2 tau;  // tau_{k a}
          tau[a] = rho_f * (2.0 * dn[a] - 2.0 / 3.0 * div_u);
          tau[t] = dim == 2 ? rho_f * (dn[t] + dt_face[a]) : 0.0;
          div[0] += dir * tau[0] / dx;
          div[1] += dir * tau[1] / dx;
        }
      }
      s.q[c][0] += mu * div[0];
      s.q[c][1] += mu * div[1];
    }
    if (kc > 0.0) {
      double lap = 0.0;
      for (int a = 0; a < dim; ++a) {
        for (int dir = -1; dir <= 1; dir += 2) {
          auto npos = pos;
          npos[a] += dir;
          double hn;
          const bool inside =
              dim == 2 ? grid.in_domain(npos[0], npos[1]) : (npos[0] >= 0 && npos[0] < grid.nx());
          if (inside) {
            hn = grid.fluid(grid.index(npos[0], npos[1])) ? g.at(npos).prim.h : me.prim.h;
          } else if (grid.periodic(a)) {
            hn = g.at(npos).prim.h;
          } else {
            const int side = 2 * a + (dir > 0 ? 1 : 0);
            hn = conduction_ghost_enthalpy(grid, bc, side, me.prim.h, g.at(npos).prim.h);
          }
          lap += hn - me.prim.h;
        }
      }
      s.W[c] += kc * lap / (dx * dx);
    }
    if (cfg.gravity) {
      s.q[c][0] += me.cons.rho * cfg.f_ext[0];
      s.q[c][1] += me.cons.rho * cfg.f_ext[1];
      s.W[c] += e2 * me.cons.rho * dot(cfg.f_ext, me.prim.u);
    }
  }
  return s;
}

/// Drives the scheme on one grid. Holds the pressure operator, the linear
/// solver cache and the last primitive states (Newton guesses).
template <EquationOfState E>
class Stepper {
public:
  Stepper(StructuredGrid grid, BoundaryData bc, E eos, StepConfig cfg)
      : grid_(std::move(grid)), bc_(std::move(bc)), eos_(std::move(eos)), cfg_(cfg), op_(grid_, bc_),
        solver_(cfg.linear_solver) {
    cfg_.validate();
    require_side_data(grid_, bc_);
    frozen_.assign(grid_.num_cells(), 0);
    for (int c = 0; c < grid_.num_cells(); ++c) frozen_[c] = grid_.fluid(c) ? 0 : 1;
  }

  const StructuredGrid& grid() const { return grid_; }
  const BoundaryData& boundary() const { return bc_; }
  const E& eos() const { return eos_; }
  const StepConfig& config() const { return cfg_; }
  StepConfig& config() { return cfg_; }
  const ImplicitOperator& pressure_operator() const { return op_; }

  /// Intermediate fields of the last ap_step, for inspection.
  const std::vector<double>& last_phi() const { return phi_; }
  const std::vector<double>& last_pressure() const { return p_new_; }

  std::vector<CellState> cell_states(const ConservativeState& U) {
    const int n = grid_.num_cells();
    if (static_cast<int>(U.size()) != n) throw ConfigError("state size does not match the grid");
    std::vector<CellState> cells(n);
    const bool have_guess = static_cast<int>(prim_guess_.size()) == n;
    for (int c = 0; c < n; ++c) {
      try {
        cells[c] = make_cell_state(U[c], eos_, cfg_.eps, have_guess ? &prim_guess_[c] : nullptr);
      } catch (const std::exception& e) {
        throw StateError("cell " + std::to_string(c) + ": " + e.what());
      }
    }
    prim_guess_.resize(n);
    for (int c = 0; c < n; ++c) prim_guess_[c] = cells[c].prim;
    return cells;
  }

  GhostedField<CellState> ghosted(const std::vector<CellState>& cells, double t) const {
    return fill_ghosts(grid_, cells, bc_, eos_, cfg_.eps, t);
  }

  /// Face sweep of the explicit fluxes with the given pressure weight alpha.
  ExplicitResidual explicit_residual(const GhostedField<CellState>& g, double alpha) const {
    ExplicitResidual r(grid_.num_cells());
    const double inv = 1.0 / grid_.dx();
    for (const Face& f : grid_.faces()) {
      const FaceStencil s = face_stencil(grid_, g, f);
      const auto [L, R] = face_states(s, cfg_.order, eos_, cfg_.eps);
      const double lam = max_wave_speed(s.v[1], s.v[2], f.axis, alpha);
      const FaceFlux F = explicit_face_flux(L, R, f.axis, alpha, lam);
      auto add = [&](int c, double sign) {
        if (c < 0) return;
        r.mass[c] += sign * F.mass * inv;
        r.momentum[c][0] += sign * F.momentum[0] * inv;
        r.momentum[c][1] += sign * F.momentum[1] * inv;
        r.energy[c] += sign * F.energy * inv;
        r.dissipation[c] += sign * F.dissipation.W * inv;
      };
      add(f.left, 1.0);
      add(f.right, -1.0);
    }
    return r;
  }

  double max_face_speed(const GhostedField<CellState>& g, double alpha, double acoustic_scale) const {
    double lam = 0.0;
    for (const Face& f : grid_.faces()) {
      const FaceStencil s = face_stencil(grid_, g, f);
      double l = max_wave_speed(s.v[1], s.v[2], f.axis, alpha);
      if (acoustic_scale > 0.0) {
        l = std::max(std::abs(s.v[1].prim.u[f.axis]) + std::sqrt(s.v[1].am2) * acoustic_scale,
                     std::abs(s.v[2].prim.u[f.axis]) + std::sqrt(s.v[2].am2) * acoustic_scale);
      }
      lam = std::max(lam, l);
    }
    return lam;
  }

  /// Explicit stability limit of the diffusive sources.
  double diffusive_dt(const std::vector<CellState>& cells) const {
    const double mu = cfg_.viscosity(), kc = cfg_.conductivity();
    if (mu == 0.0 && kc == 0.0) return std::numeric_limits<double>::infinity();
    double rho_min = std::numeric_limits<double>::infinity();
    for (int c = 0; c < grid_.num_cells(); ++c)
      if (grid_.fluid(c)) rho_min = std::min(rho_min, cells[c].cons.rho);
    // Conduction acts on h through rho e, which for a perfect gas is rho h / gamma.
    const double diff = std::max(4.0 / 3.0 * mu, 2.0 * kc / rho_min);
    return 0.25 * grid_.dx() * grid_.dx() / (grid_.dimension() * diff);
  }

  /// Material CFL: dt = CFL dx / max(|u_n| + sqrt(alpha a^2)); independent of eps.
  double compute_dt(const ConservativeState& U, double t = 0.0) {
    const auto cells = cell_states(U);
    const auto g = ghosted(cells, t);
    const double lam = max_face_speed(g, cfg_.alpha, 0.0);
    double dt = lam > 0.0 ? cfg_.cfl * grid_.dx() / lam : cfg_.dt_max;
    dt = std::min({dt, cfg_.dt_max, diffusive_dt(cells)});
    return dt;
  }

  /// Acoustic CFL of the explicit baseline: dt = CFL dx / max(|u_n| + a/eps).
  double compute_explicit_dt(const ConservativeState& U, double t = 0.0) {
    const auto cells = cell_states(U);
    const auto g = ghosted(cells, t);
    const double lam = max_face_speed(g, 0.0, 1.0 / cfg_.eps);
    return std::min({cfg_.cfl * grid_.dx() / lam, cfg_.dt_max, diffusive_dt(cells)});
  }

  StepReport ap_step(ConservativeState& U, double t, double dt) {
    const int n = grid_.num_cells();
    const double eps = cfg_.eps, e2 = eps * eps, alpha = cfg_.alpha;
    const double c_imp = (1.0 - alpha * e2) / e2;
    const auto cells = cell_states(U);
    const auto g = ghosted(cells, t);
    const SourceTerms src = evaluate_sources(grid_, bc_, g, cfg_);
    const ExplicitResidual r = explicit_residual(g, alpha);
    const auto& faces = grid_.faces();
    const double inv = 1.0 / grid_.dx();

    // (1) mass, (2) momentum predictor.
    std::vector<double> rho_new(n);
    std::vector<Vec2> q_star(n);
    for (int c = 0; c < n; ++c) {
      const Conserved& u = cells[c].cons;
      if (frozen_[c]) {
        rho_new[c] = u.rho;
        q_star[c] = u.q;
        continue;
      }
      rho_new[c] = u.rho - dt * r.mass[c] + dt * src.rho[c];
      if (!(rho_new[c] > 0.0)) throw StateError("non-positive density at cell " + std::to_string(c));
      for (int k = 0; k < 2; ++k) q_star[c][k] = u.q[k] + dt * src.q[c][k] - dt * r.momentum[c][k];
    }

    // Boundary data of the implicit energy flux.
    std::vector<double> H(n), H_ghost(faces.size(), 0.0), q_const(faces.size(), 0.0);
    for (int c = 0; c < n; ++c) H[c] = cells[c].H;
    for (std::size_t f = 0; f < faces.size(); ++f) {
      const Face& fc = faces[f];
      if (!fc.boundary()) continue;
      const int in = fc.left >= 0 ? fc.left : fc.right;
      if (fc.solid) {
        H_ghost[f] = cells[in].H;
        continue;
      }
      auto pos = fc.left_pos;
      if (fc.right < 0) pos[fc.axis] += 1;
      const CellState& gs = g.at(pos);
      H_ghost[f] = gs.H;
      if (grid_.side(fc.side).kind == BoundaryKind::inlet) q_const[f] = gs.cons.q[fc.axis];
    }
    op_.update(H, H_ghost);
    const auto& closures = op_.closures();

    // Centered energy flux divergence for a momentum field.
    auto energy_divergence = [&](const std::vector<Vec2>& q) {
      std::vector<double> d(n, 0.0);
      for (std::size_t f = 0; f < faces.size(); ++f) {
        const Face& fc = faces[f];
        const int a = fc.axis;
        const int in = fc.left >= 0 ? fc.left : fc.right;
        const double ql = fc.left >= 0 ? q[fc.left][a] : closures[f].q_scale * q[in][a] + q_const[f];
        const double qr = fc.right >= 0 ? q[fc.right][a] : closures[f].q_scale * q[in][a] + q_const[f];
        const double hl = fc.left >= 0 ? H[fc.left] : H_ghost[f];
        const double hr = fc.right >= 0 ? H[fc.right] : H_ghost[f];
        const double F = 0.5 * (hl * ql + hr * qr) * inv;
        if (fc.left >= 0) d[fc.left] += F;
        if (fc.right >= 0) d[fc.right] -= F;
      }
      return d;
    };

    const std::vector<double> e_star = energy_divergence(q_star);
    phi_.assign(n, 0.0);
    std::vector<double> ke(n);
    for (int c = 0; c < n; ++c) {
      const Conserved& u = cells[c].cons;
      ke[c] = kinetic_energy(u, eps);
      phi_[c] = u.W - ke[c] - dt * (e_star[c] + r.dissipation[c] - src.W[c]);
    }

    // Pressure solve.
    StepReport rep;
    rep.dt = dt;
    std::vector<double> p_old(n), h_old(n);
    for (int c = 0; c < n; ++c) {
      p_old[c] = cells[c].prim.p;
      h_old[c] = cells[c].prim.h;
    }
    std::vector<double> rho_e(n);
    const bool solids = grid_.has_solids();
    if constexpr (LinearEnergyEos<E>) {
      const double factor = eos_.internal_energy_factor();
      const SparseSystem sys = assemble_elliptic(op_, factor, phi_, dt, alpha, eps, solids ? &frozen_ : nullptr, &p_old);
      const Eigen::VectorXd x = solver_.solve(sys.matrix, sys.rhs);
      rep.linear_iterations = solver_.last_report().iterations;
      p_new_.assign(x.data(), x.data() + n);
      for (int c = 0; c < n; ++c) rho_e[c] = factor * p_new_[c];
    } else {
      NewtonResult res = newton_solve(op_, solver_, rho_new, phi_, eos_, dt, alpha, eps, p_old, h_old, cfg_.newton,
                                      solids ? &frozen_ : nullptr);
      rep.newton_iterations = res.iterations;
      p_new_ = std::move(res.p);
      for (int c = 0; c < n; ++c) rho_e[c] = rho_new[c] * res.h[c] - p_new_[c];
    }

    // (3) momentum closure, (4) conservative energy update.
    std::vector<Vec2> q_new(n);
    for (int c = 0; c < n; ++c) {
      q_new[c] = q_star[c];
      if (frozen_[c]) continue;
      for (int a = 0; a < grid_.dimension(); ++a) q_new[c][a] -= dt * c_imp * op_.gradient(p_new_, c, a);
    }
    const std::vector<double> e_new = energy_divergence(q_new);
    for (int c = 0; c < n; ++c) {
      if (frozen_[c]) continue;
      Conserved& u = U[c];
      const double W_new = u.W - dt * (e_new[c] + r.dissipation[c] - src.W[c]);
      rep.energy_residual = std::max(rep.energy_residual, std::abs(W_new - ke[c] - rho_e[c]));
      u.rho = rho_new[c];
      u.q = q_new[c];
      u.W = W_new;
      if (!(internal_energy(u, eps) > 0.0))
        throw StateError("non-positive internal energy at cell " + std::to_string(c));
    }
    return rep;
  }

  /// Fully explicit Rusanov step: pressure weight 1/eps^2 and acoustic wave speeds.
  StepReport explicit_step(ConservativeState& U, double t, double dt) {
    const int n = grid_.num_cells();
    const auto cells = cell_states(U);
    const auto g = ghosted(cells, t);
    const SourceTerms src = evaluate_sources(grid_, bc_, g, cfg_);
    const ExplicitResidual r = explicit_residual(g, 1.0 / (cfg_.eps * cfg_.eps));
    for (int c = 0; c < n; ++c) {
      if (frozen_[c]) continue;
      Conserved& u = U[c];
      u.rho += dt * (src.rho[c] - r.mass[c]);
      for (int k = 0; k < 2; ++k) u.q[k] += dt * (src.q[c][k] - r.momentum[c][k]);
      u.W += dt * (src.W[c] - r.energy[c]);
      if (!(u.rho > 0.0)) throw StateError("non-positive density at cell " + std::to_string(c));
      if (!(internal_energy(u, cfg_.eps) > 0.0))
        throw StateError("non-positive internal energy at cell " + std::to_string(c));
    }
    StepReport rep;
    rep.dt = dt;
    return rep;
  }

private:
  StructuredGrid grid_;
  BoundaryData bc_;
  E eos_;
  StepConfig cfg_;
  ImplicitOperator op_;
  LinearSolver solver_;
  std::vector<unsigned char> frozen_;
  std::vector<Primitive> prim_guess_;
  std::vector<double> phi_;
  std::vector<double> p_new_;
};

/// Single AP step without a persistent solver object.
template <EquationOfState E>
StepReport ap_step(ConservativeState& U, const StructuredGrid& grid, const BoundaryData& bc, const StepConfig& cfg,
                   const E& eos, double dt, double t = 0.0) {
  Stepper<E> s(grid, bc, eos, cfg);
  return s.ap_step(U, t, dt);
}

template <EquationOfState E>
StepReport explicit_baseline_step(ConservativeState& U, const StructuredGrid& grid, const BoundaryData& bc,
                                  const StepConfig& cfg, const E& eos, double dt, double t = 0.0) {
  Stepper<E> s(grid, bc, eos, cfg);
  return s.explicit_step(U, t, dt);
}

template <EquationOfState E>
double compute_dt(const ConservativeState& U, const StructuredGrid& grid, const BoundaryData& bc,
                  const StepConfig& cfg, const E& eos) {
  Stepper<E> s(grid, bc, eos, cfg);
  return s.compute_dt(U);
}

}  // namespace apflow
