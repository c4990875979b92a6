#pragma once

// Equations of state rho(p, h) in scaled variables.

#include <cmath>
#include <concepts>
#include <functional>
#include <stdexcept>
#include <string>

namespace apflow {

class EosDomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// Anything that can evaluate rho(p, h) and its two partial derivatives.
template <class E>
concept EquationOfState = requires(const E& eos, double p, double h) {
  { eos.density(p, h) } -> std::convertible_to<double>;
  { eos.drho_dp(p, h) } -> std::convertible_to<double>;
  { eos.drho_dh(p, h) } -> std::convertible_to<double>;
};

/// EOS whose internal energy is linear in pressure, rho*e = p * internal_energy_factor().
/// The implicit pressure equation is then linear and needs no Newton loop.
template <class E>
concept LinearEnergyEos = EquationOfState<E> && requires(const E& eos) {
  { eos.internal_energy_factor() } -> std::convertible_to<double>;
};

/// Polytropic perfect gas, rho = gamma/(gamma-1) * p/h.
class EosPerfectGas {
public:
  explicit EosPerfectGas(double gamma = 1.4) : gamma_(gamma) {
    if (!(gamma > 1.0)) throw EosDomainError("perfect gas requires gamma > 1");
  }

  double gamma() const { return gamma_; }
  double kappa() const { return gamma_ / (gamma_ - 1.0); }
  double internal_energy_factor() const { return 1.0 / (gamma_ - 1.0); }

  double density(double p, double h) const {
    check(p, h);
    return kappa() * p / h;
  }
  double drho_dp(double p, double h) const {
    check(p, h);
    return kappa() / h;
  }
  double drho_dh(double p, double h) const {
    check(p, h);
    return -kappa() * p / (h * h);
  }

private:
  static void check(double p, double h) {
    if (!(p > 0.0) || !(h > 0.0))
      throw EosDomainError("perfect gas evaluated outside p > 0, h > 0 (p=" + std::to_string(p) +
                           ", h=" + std::to_string(h) + ")");
  }

  double gamma_;
};

/// Type-erased EOS for user-supplied laws. Always takes the Newton pressure path.
class FunctionalEos {
public:
  using Fn = std::function<double(double, double)>;

  FunctionalEos(Fn density, Fn drho_dp, Fn drho_dh)
      : density_(std::move(density)), drho_dp_(std::move(drho_dp)), drho_dh_(std::move(drho_dh)) {}

  /// Routes any EOS through the general interface.
  template <EquationOfState E>
  static FunctionalEos wrap(E eos) {
    return FunctionalEos([eos](double p, double h) { return eos.density(p, h); },
                         [eos](double p, double h) { return eos.drho_dp(p, h); },
                         [eos](double p, double h) { return eos.drho_dh(p, h); });
  }

  double density(double p, double h) const { return density_(p, h); }
  double drho_dp(double p, double h) const { return drho_dp_(p, h); }
  double drho_dh(double p, double h) const { return drho_dh_(p, h); }

private:
  Fn density_;
  Fn drho_dp_;
  Fn drho_dh_;
};

template <EquationOfState E>
double density(const E& eos, double p, double h) {
  const double rho = eos.density(p, h);
  if (!(rho > 0.0)) throw EosDomainError("non-positive density from equation of state");
  return rho;
}

/// Squared mixture sound speed a_m^2 = (drho/dp + drho/dh / rho)^-1.
template <EquationOfState E>
double sound_speed_squared(const E& eos, double p, double h, double rho) {
  const double bracket = eos.drho_dp(p, h) + eos.drho_dh(p, h) / rho;
  if (!(bracket > 0.0))
    throw EosDomainError("sound speed undefined: drho/dp + drho/dh / rho <= 0");
  return 1.0 / bracket;
}

/// Solves density(p, h) = rho for h at fixed p.
template <EquationOfState E>
double enthalpy_from_density(const E& eos, double p, double rho, double h_guess = 0.0) {
  if (!(p > 0.0) || !(rho > 0.0)) throw EosDomainError("enthalpy inversion needs p > 0, rho > 0");
  if constexpr (std::same_as<E, EosPerfectGas>) {
    return eos.kappa() * p / rho;
  } else {
    // Newton with a bracket kept on the monotone branch.
    double h = h_guess > 0.0 ? h_guess : p / rho;
    double lo = 0.0;
    double hi = 0.0;
    for (int it = 0; it < 200; ++it) {
      const double f = eos.density(p, h) - rho;
      if (std::abs(f) <= 1e-14 * rho) return h;
      const double df = eos.drho_dh(p, h);
      if (df == 0.0) throw EosDomainError("enthalpy inversion: drho/dh vanishes");
      // rho decreasing in h is the usual case; keep track of a bracket either way.
      if ((f > 0.0) == (df < 0.0)) lo = h; else hi = h;
      double next = h - f / df;
      if (!(next > 0.0) || (hi > 0.0 && next >= hi) || next <= lo)
        next = hi > 0.0 ? 0.5 * (lo + hi) : 2.0 * h;
      h = next;
    }
    throw EosDomainError("enthalpy inversion did not converge");
  }
}

}  // namespace apflow
