#pragma once

// Exact solution of the 1D Riemann problem for a polytropic gas (SI-like
// variables rho, u, p with sound speed sqrt(gamma p / rho)).

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace apflow {

struct RiemannState {
  double rho;
  double u;
  double p;
};

class RiemannExact {
public:
  enum class Wave { shock, rarefaction };

  RiemannExact(RiemannState left, RiemannState right, double gamma)
      : l_(left), r_(right), g_(gamma) {
    if (!(l_.rho > 0 && r_.rho > 0 && l_.p > 0 && r_.p > 0)) throw std::invalid_argument("Riemann states must be positive");
    cl_ = std::sqrt(g_ * l_.p / l_.rho);
    cr_ = std::sqrt(g_ * r_.p / r_.rho);
    if (2.0 / (g_ - 1.0) * (cl_ + cr_) <= r_.u - l_.u) throw std::domain_error("Riemann data generate vacuum");
    solve_star();
  }

  double p_star() const { return p_star_; }
  double u_star() const { return u_star_; }
  Wave left_wave() const { return p_star_ > l_.p ? Wave::shock : Wave::rarefaction; }
  Wave right_wave() const { return p_star_ > r_.p ? Wave::shock : Wave::rarefaction; }

  /// Pressure function f_L(p) + f_R(p) + u_R - u_L whose root is p*.
  double pressure_function(double p) const {
    double fl, fr, d;
    branch(p, l_, cl_, fl, d);
    branch(p, r_, cr_, fr, d);
    return fl + fr + r_.u - l_.u;
  }

  /// Density of the star region on the given side.
  double rho_star(bool left) const {
    const RiemannState& s = left ? l_ : r_;
    const double ratio = p_star_ / s.p;
    if (p_star_ > s.p) {
      const double gr = (g_ - 1.0) / (g_ + 1.0);
      return s.rho * (ratio + gr) / (ratio * gr + 1.0);
    }
    return s.rho * std::pow(ratio, 1.0 / g_);
  }

  /// Shock speed on one side (meaningful only when that wave is a shock).
  double shock_speed(bool left) const {
    const RiemannState& s = left ? l_ : r_;
    const double c = left ? cl_ : cr_;
    const double m = std::sqrt((g_ + 1.0) / (2.0 * g_) * p_star_ / s.p + (g_ - 1.0) / (2.0 * g_));
    return left ? s.u - c * m : s.u + c * m;
  }

  /// Solution at similarity coordinate xi = (x - x0) / t.
  RiemannState sample(double xi) const {
    const double g = g_;
    if (xi <= u_star_) {
      const RiemannState& s = l_;
      const double c = cl_;
      if (p_star_ > s.p) {
        return xi <= shock_speed(true) ? s : RiemannState{rho_star(true), u_star_, p_star_};
      }
      const double c_star = c * std::pow(p_star_ / s.p, (g - 1.0) / (2.0 * g));
      if (xi <= s.u - c) return s;
      if (xi >= u_star_ - c_star) return {rho_star(true), u_star_, p_star_};
      const double k = 2.0 / (g + 1.0) + (g - 1.0) / ((g + 1.0) * c) * (s.u - xi);
      return {s.rho * std::pow(k, 2.0 / (g - 1.0)), 2.0 / (g + 1.0) * (c + (g - 1.0) / 2.0 * s.u + xi),
              s.p * std::pow(k, 2.0 * g / (g - 1.0))};
    }
    const RiemannState& s = r_;
    const double c = cr_;
    if (p_star_ > s.p) {
      return xi >= shock_speed(false) ? s : RiemannState{rho_star(false), u_star_, p_star_};
    }
    const double c_star = c * std::pow(p_star_ / s.p, (g - 1.0) / (2.0 * g));
    if (xi >= s.u + c) return s;
    if (xi <= u_star_ + c_star) return {rho_star(false), u_star_, p_star_};
    const double k = 2.0 / (g + 1.0) - (g - 1.0) / ((g + 1.0) * c) * (s.u - xi);
    return {s.rho * std::pow(k, 2.0 / (g - 1.0)), 2.0 / (g + 1.0) * (-c + (g - 1.0) / 2.0 * s.u + xi),
            s.p * std::pow(k, 2.0 * g / (g - 1.0))};
  }

  RiemannState sample(double x, double x0, double t) const {
    if (!(t > 0.0)) throw std::invalid_argument("Riemann sampling needs t > 0");
    return sample((x - x0) / t);
  }

private:
  void branch(double p, const RiemannState& s, double c, double& f, double& df) const {
    if (p > s.p) {
      const double a = 2.0 / ((g_ + 1.0) * s.rho);
      const double b = (g_ - 1.0) / (g_ + 1.0) * s.p;
      const double q = std::sqrt(a / (p + b));
      f = (p - s.p) * q;
      df = q * (1.0 - 0.5 * (p - s.p) / (b + p));
    } else {
      const double r = p / s.p;
      f = 2.0 * c / (g_ - 1.0) * (std::pow(r, (g_ - 1.0) / (2.0 * g_)) - 1.0);
      df = 1.0 / (s.rho * c) * std::pow(r, -(g_ + 1.0) / (2.0 * g_));
    }
  }

  void solve_star() {
    // Guarded Newton: keep a bracket [lo, hi] with f(lo) < 0 < f(hi).
    double lo = 1e-14 * std::min(l_.p, r_.p), hi = std::max(l_.p, r_.p);
    while (pressure_function(hi) < 0.0) hi *= 2.0;
    double p = std::max(lo, 0.5 * (l_.p + r_.p) - 0.125 * (r_.u - l_.u) * (l_.rho + r_.rho) * (cl_ + cr_));
    for (int it = 0; it < 200; ++it) {
      double fl, fr, dl, dr;
      branch(p, l_, cl_, fl, dl);
      branch(p, r_, cr_, fr, dr);
      const double f = fl + fr + r_.u - l_.u;
      if (f < 0.0) lo = p; else hi = p;
      if (std::abs(f) <= 1e-14 * (1.0 + std::abs(r_.u - l_.u) + cl_ + cr_) || hi - lo <= 1e-15 * hi) break;
      double next = p - f / (dl + dr);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      p = next;
    }
    p_star_ = p;
    double fl, fr, d;
    branch(p, l_, cl_, fl, d);
    branch(p, r_, cr_, fr, d);
    u_star_ = 0.5 * (l_.u + r_.u) + 0.5 * (fr - fl);
  }

  RiemannState l_, r_;
  double g_;
  double cl_ = 0.0, cr_ = 0.0;
  double p_star_ = 0.0, u_star_ = 0.0;
};

}  // namespace apflow
