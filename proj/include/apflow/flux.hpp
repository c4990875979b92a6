#pragma once

// Explicit face fluxes: centered convective and alpha-pressure parts with
// Rusanov dissipation, plus minmod MUSCL reconstruction.

#include <algorithm>
#include <cmath>

#include "apflow/mesh.hpp"

namespace apflow {

inline double minmod(double x, double y) {
  const double s = 0.5 * ((x > 0.0) - (x < 0.0) + (y > 0.0) - (y < 0.0));
  return s * std::min(std::abs(x), std::abs(y));
}

inline Conserved minmod(const Conserved& x, const Conserved& y) {
  return {minmod(x.rho, y.rho), {minmod(x.q[0], y.q[0]), minmod(x.q[1], y.q[1])}, minmod(x.W, y.W)};
}

struct ReconstructedPair {
  Conserved left;
  Conserved right;
};

/// Limited face values from the stencil (V_{i-1}, V_i, V_{i+1}, V_{i+2}).
inline ReconstructedPair reconstruct(const Conserved& vm1, const Conserved& v0, const Conserved& v1,
                                     const Conserved& v2) {
  return {v0 + 0.5 * minmod(v0 - vm1, v1 - v0), v1 - 0.5 * minmod(v1 - v0, v2 - v1)};
}

inline ReconstructedPair reconstruct(const FaceStencil& s) {
  return reconstruct(s.v[0].cons, s.v[1].cons, s.v[2].cons, s.v[3].cons);
}

inline double max_wave_speed(const CellState& a, const CellState& b, int axis, double alpha) {
  const double la = std::abs(a.prim.u[axis]) + std::sqrt(alpha * a.am2);
  const double lb = std::abs(b.prim.u[axis]) + std::sqrt(alpha * b.am2);
  return std::max(la, lb);
}

struct FaceFlux {
  double mass = 0.0;  // includes D_rho
  Vec2 momentum{0.0, 0.0};  // beta . n, includes D_q
  double energy = 0.0;      // centered H q . n plus D_W
  Conserved dissipation;    // -lambda/2 (V^R - V^L)
};

/// Flux along +e_axis between left and right states.
inline FaceFlux explicit_face_flux(const CellState& L, const CellState& R, int axis, double alpha, double lambda) {
  FaceFlux f;
  f.dissipation = (-0.5 * lambda) * (R.cons - L.cons);
  const double qnL = L.cons.q[axis], qnR = R.cons.q[axis];
  f.mass = 0.5 * (qnL + qnR) + f.dissipation.rho;
  for (int k = 0; k < 2; ++k) {
    double beta = 0.5 * (L.cons.q[k] * qnL / L.cons.rho + R.cons.q[k] * qnR / R.cons.rho);
    if (k == axis) beta += alpha * 0.5 * (L.prim.p + R.prim.p);
    f.momentum[k] = beta + f.dissipation.q[k];
  }
  f.energy = 0.5 * (L.H * qnL + R.H * qnR) + f.dissipation.W;
  return f;
}

/// Face states used by the explicit flux. Order 2 reconstructs conservative
/// variables and falls back to the cell values when a face state is not admissible.
template <EquationOfState E>
std::pair<CellState, CellState> face_states(const FaceStencil& s, int order, const E& eos, double eps) {
  if (order < 2) return {s.v[1], s.v[2]};
  const ReconstructedPair r = reconstruct(s);
  try {
    return {make_cell_state(r.left, eos, eps, &s.v[1].prim), make_cell_state(r.right, eos, eps, &s.v[2].prim)};
  } catch (const std::exception&) {
    return {s.v[1], s.v[2]};
  }
}

}  // namespace apflow
