#pragma once

// Conservative (rho, q, W) and primitive (p, h, u) cell states, the scaled
// energy relation W = eps^2/2 rho |u|^2 + rho h - p, and SI -> scaled maps.

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "apflow/eos.hpp"

namespace apflow {

using Vec2 = std::array<double, 2>;

inline double dot(const Vec2& a, const Vec2& b) { return a[0] * b[0] + a[1] * b[1]; }
inline double norm2(const Vec2& a) { return dot(a, a); }

struct Conserved {
  double rho = 0.0;
  Vec2 q{0.0, 0.0};
  double W = 0.0;

  Conserved& operator+=(const Conserved& o) {
    rho += o.rho;
    q[0] += o.q[0];
    q[1] += o.q[1];
    W += o.W;
    return *this;
  }
  Conserved& operator-=(const Conserved& o) {
    rho -= o.rho;
    q[0] -= o.q[0];
    q[1] -= o.q[1];
    W -= o.W;
    return *this;
  }
  Conserved& operator*=(double s) {
    rho *= s;
    q[0] *= s;
    q[1] *= s;
    W *= s;
    return *this;
  }
  friend Conserved operator+(Conserved a, const Conserved& b) { return a += b; }
  friend Conserved operator-(Conserved a, const Conserved& b) { return a -= b; }
  friend Conserved operator*(double s, Conserved a) { return a *= s; }
  friend bool operator==(const Conserved&, const Conserved&) = default;
};

struct Primitive {
  double p = 0.0;
  double h = 0.0;
  Vec2 u{0.0, 0.0};
  friend bool operator==(const Primitive&, const Primitive&) = default;
};

/// Everything the flux and pressure stages read at one cell (interior or ghost).
struct CellState {
  Conserved cons;
  Primitive prim;
  double H = 0.0;    // total enthalpy h + eps^2 |u|^2 / 2
  double am2 = 0.0;  // squared mixture sound speed
};

struct ConservativeState {
  std::vector<Conserved> cells;

  ConservativeState() = default;
  explicit ConservativeState(std::size_t n) : cells(n) {}
  std::size_t size() const { return cells.size(); }
  Conserved& operator[](std::size_t i) { return cells[i]; }
  const Conserved& operator[](std::size_t i) const { return cells[i]; }
};

struct PrimitiveState {
  std::vector<Primitive> cells;

  PrimitiveState() = default;
  explicit PrimitiveState(std::size_t n) : cells(n) {}
  std::size_t size() const { return cells.size(); }
  Primitive& operator[](std::size_t i) { return cells[i]; }
  const Primitive& operator[](std::size_t i) const { return cells[i]; }
};

class StateError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline double kinetic_energy(const Conserved& c, double eps) {
  return 0.5 * eps * eps * norm2(c.q) / c.rho;
}

/// W - eps^2 |q|^2 / (2 rho), i.e. rho*e.
inline double internal_energy(const Conserved& c, double eps) { return c.W - kinetic_energy(c, eps); }

template <EquationOfState E>
Conserved conservative_from_primitive(const Primitive& prim, const E& eos, double eps) {
  const double rho = density(eos, prim.p, prim.h);
  Conserved c;
  c.rho = rho;
  c.q = {rho * prim.u[0], rho * prim.u[1]};
  c.W = 0.5 * eps * eps * rho * norm2(prim.u) + rho * prim.h - prim.p;
  return c;
}

/// Solves rho h - p = rho e, rho(p, h) = rho for (p, h).
/// The guess is used only by general equations of state.
template <EquationOfState E>
Primitive primitive_from_conservative(const Conserved& c, const E& eos, double eps,
                                      const Primitive* guess = nullptr) {
  if (!(c.rho > 0.0)) throw StateError("non-positive density");
  const double rho_e = internal_energy(c, eps);
  if (!(rho_e > 0.0)) throw StateError("non-positive internal energy");
  Primitive prim;
  prim.u = {c.q[0] / c.rho, c.q[1] / c.rho};
  if constexpr (LinearEnergyEos<E>) {
    prim.p = rho_e / eos.internal_energy_factor();
    prim.h = enthalpy_from_density(eos, prim.p, c.rho);
    return prim;
  } else {
    double p = guess ? guess->p : rho_e;
    double h = guess ? guess->h : 2.0 * rho_e / c.rho;
    for (int it = 0; it < 100; ++it) {
      const double r1 = c.rho * h - p - rho_e;
      const double r2 = eos.density(p, h) - c.rho;
      if (std::abs(r1) <= 1e-13 * rho_e && std::abs(r2) <= 1e-13 * c.rho) {
        prim.p = p;
        prim.h = h;
        return prim;
      }
      // [[-1, rho], [rho_p, rho_h]] (dp, dh) = -(r1, r2)
      const double a = -1.0, b = c.rho, cc = eos.drho_dp(p, h), d = eos.drho_dh(p, h);
      const double det = a * d - b * cc;
      if (det == 0.0) throw StateError("singular primitive recovery Jacobian");
      double dp = (-r1 * d + b * r2) / det;
      double dh = (-a * r2 + cc * r1) / det;
      double step = 1.0;
      while ((p + step * dp <= 0.0 || h + step * dh <= 0.0) && step > 1e-8) step *= 0.5;
      p += step * dp;
      h += step * dh;
    }
    throw StateError("primitive recovery did not converge");
  }
}

template <EquationOfState E>
CellState make_cell_state(const Conserved& c, const E& eos, double eps, const Primitive* guess = nullptr) {
  CellState s;
  s.cons = c;
  s.prim = primitive_from_conservative(c, eos, eps, guess);
  s.H = s.prim.h + 0.5 * eps * eps * norm2(s.prim.u);
  s.am2 = sound_speed_squared(eos, s.prim.p, s.prim.h, c.rho);
  return s;
}

template <EquationOfState E>
CellState make_cell_state(const Primitive& prim, const E& eos, double eps) {
  CellState s;
  s.cons = conservative_from_primitive(prim, eos, eps);
  s.prim = prim;
  s.H = prim.h + 0.5 * eps * eps * norm2(prim.u);
  s.am2 = sound_speed_squared(eos, prim.p, prim.h, s.cons.rho);
  return s;
}

template <EquationOfState E>
PrimitiveState primitive_from_conservative(const ConservativeState& cons, const E& eos, double eps) {
  PrimitiveState out(cons.size());
  for (std::size_t i = 0; i < cons.size(); ++i) out[i] = primitive_from_conservative(cons[i], eos, eps);
  return out;
}

template <EquationOfState E>
ConservativeState conservative_from_primitive(const PrimitiveState& prim, const E& eos, double eps) {
  ConservativeState out(prim.size());
  for (std::size_t i = 0; i < prim.size(); ++i) out[i] = conservative_from_primitive(prim[i], eos, eps);
  return out;
}

/// Reference values for the nondimensionalization and the derived groups.
struct ScalingParameters {
  double rho0 = 1.0;  // kg/m^3
  double p0 = 1.0;    // Pa
  double u0 = 1.0;    // m/s
  double x0 = 1.0;    // m

  double epsilon() const { return std::sqrt(rho0 * u0 * u0 / p0); }
  double time_scale() const { return x0 / u0; }
  double reynolds(double nu) const { return u0 * x0 / nu; }
  double prandtl(double nu, double cp, double conductivity) const { return rho0 * nu * cp / conductivity; }

  void validate() const {
    if (!(rho0 > 0.0 && p0 > 0.0 && u0 > 0.0 && x0 > 0.0))
      throw std::invalid_argument("scaling reference values must be positive");
  }

  double density(double rho) const { return rho / rho0; }
  double pressure(double p) const { return p / p0; }
  double enthalpy(double h) const { return rho0 * h / p0; }
  double velocity(double u) const { return u / u0; }
  double length(double x) const { return x / x0; }
  double time(double t) const { return t * u0 / x0; }
  double acceleration(double a) const { return a * x0 / (u0 * u0); }
};

/// SI flow description of one uniform state plus transport data.
struct SiFlowData {
  double rho = 1.0;
  double p = 1.0;
  double h = 1.0;
  Vec2 u{0.0, 0.0};
  double nu = 0.0;            // m^2/s, 0 = inviscid
  double conductivity = 0.0;  // W/m/K
  double cp = 1.0;            // J/kg/K
  Vec2 f_ext{0.0, 0.0};       // m/s^2
};

struct ScaledFlowData {
  double rho = 1.0;
  double p = 1.0;
  double h = 1.0;
  Vec2 u{0.0, 0.0};
  double epsilon = 1.0;
  double reynolds = 0.0;        // 0 = inviscid
  double prandtl = 0.0;         // 0 when undefined
  double conduction = 0.0;      // 1 / (Re Pr); 0 = no conduction
  Vec2 f_ext{0.0, 0.0};
};

inline ScaledFlowData nondimensionalize(const SiFlowData& si, const ScalingParameters& s) {
  s.validate();
  ScaledFlowData out;
  out.rho = s.density(si.rho);
  out.p = s.pressure(si.p);
  out.h = s.enthalpy(si.h);
  out.u = {s.velocity(si.u[0]), s.velocity(si.u[1])};
  out.epsilon = s.epsilon();
  out.reynolds = si.nu > 0.0 ? s.reynolds(si.nu) : 0.0;
  out.prandtl = si.conductivity > 0.0 && si.nu > 0.0 ? s.prandtl(si.nu, si.cp, si.conductivity) : 0.0;
  out.conduction = si.conductivity / (s.rho0 * si.cp * s.u0 * s.x0);
  out.f_ext = {s.acceleration(si.f_ext[0]), s.acceleration(si.f_ext[1])};
  return out;
}

}  // namespace apflow
