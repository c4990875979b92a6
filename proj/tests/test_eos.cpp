#include <gtest/gtest.h>

#include <random>

#include "apflow/eos.hpp"

using namespace apflow;

static_assert(LinearEnergyEos<EosPerfectGas>);
static_assert(EquationOfState<FunctionalEos>);
static_assert(!LinearEnergyEos<FunctionalEos>);

TEST(Eos, DensityOfTheShockTubeStates) {
  const EosPerfectGas gas(1.4);
  EXPECT_NEAR(density(gas, 1.0, 3.5), 1.0, 1e-15);
  EXPECT_NEAR(density(gas, 0.1, 2.8), 0.125, 1e-15);
  // 3.5 * 0.571 / 3.3997 evaluated in 30-digit arithmetic.
  EXPECT_NEAR(density(gas, 0.571, 3.3997), 0.587845986410565568, 1e-15);
}

TEST(Eos, SoundSpeedMatchesGammaPOverRho) {
  const EosPerfectGas gas(1.4);
  EXPECT_NEAR(sound_speed_squared(gas, 1.0, 3.5, 1.0), 1.4, 1e-14);
  EXPECT_NEAR(sound_speed_squared(gas, 0.1, 2.8, 0.125), 1.12, 1e-14);
}

TEST(Eos, SoundSpeedIdentityCase) {
  const FunctionalEos unit([](double p, double) { return p; }, [](double, double) { return 1.0; },
                           [](double, double) { return 0.0; });
  EXPECT_DOUBLE_EQ(sound_speed_squared(unit, 2.0, 1.0, 2.0), 1.0);
}

TEST(Eos, EnthalpyFromDensityInvertsTheLaw) {
  const EosPerfectGas gas(1.4);
  EXPECT_DOUBLE_EQ(enthalpy_from_density(gas, 1.0, 1.0), 3.5);
  EXPECT_NEAR(enthalpy_from_density(gas, 0.1, 0.125), 2.8, 1e-15);
  // The iterative branch used by general laws lands on the same value.
  const auto wrapped = FunctionalEos::wrap(gas);
  EXPECT_NEAR(enthalpy_from_density(wrapped, 1.0, 1.0), 3.5, 1e-13);
  EXPECT_NEAR(enthalpy_from_density(wrapped, 0.1, 0.125), 2.8, 1e-13);
  EXPECT_NEAR(enthalpy_from_density(wrapped, 0.571, 0.587845986410565568), 3.3997, 1e-12);
}

TEST(Eos, DomainErrors) {
  EXPECT_THROW(EosPerfectGas(1.0), EosDomainError);
  const EosPerfectGas gas(1.4);
  EXPECT_THROW(density(gas, -1.0, 3.5), EosDomainError);
  EXPECT_THROW(density(gas, 1.0, 0.0), EosDomainError);
  EXPECT_THROW(enthalpy_from_density(gas, 1.0, -2.0), EosDomainError);
  const FunctionalEos bad([](double, double) { return 1.0; }, [](double, double) { return -1.0; },
                          [](double, double) { return 0.0; });
  EXPECT_THROW(sound_speed_squared(bad, 1.0, 1.0, 1.0), EosDomainError);
}

class EosProperties : public ::testing::Test {
protected:
  std::mt19937_64 rng{20240611};
  double draw(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
};

TEST_F(EosProperties, SoundSpeedOracleOnRandomStates) {
  for (int k = 0; k < 1000; ++k) {
    const EosPerfectGas gas(draw(1.05, 3.0));
    const double p = std::exp(draw(-8.0, 8.0)), h = std::exp(draw(-4.0, 6.0));
    const double rho = density(gas, p, h);
    const double a2 = sound_speed_squared(gas, p, h, rho);
    EXPECT_LE(std::abs(a2 - gas.gamma() * p / rho) / a2, 1e-12);
  }
}

TEST_F(EosProperties, DensityIsHomogeneousOfDegreeZero) {
  const EosPerfectGas gas(1.4);
  for (int k = 0; k < 200; ++k) {
    const double p = draw(0.01, 10.0), h = draw(0.1, 20.0), lam = std::exp(draw(-5.0, 5.0));
    EXPECT_NEAR(density(gas, lam * p, lam * h), density(gas, p, h), 1e-13 * density(gas, p, h));
  }
}

TEST_F(EosProperties, DerivativesMatchFourthOrderDifferences) {
  const EosPerfectGas gas(1.4);
  auto d4 = [](auto&& f, double x, double s) {
    return (-f(x + 2 * s) + 8 * f(x + s) - 8 * f(x - s) + f(x - 2 * s)) / (12 * s);
  };
  for (int k = 0; k < 200; ++k) {
    const double p = draw(0.1, 10.0), h = draw(0.5, 20.0);
    const double fp = d4([&](double x) { return gas.density(x, h); }, p, 1e-3 * p);
    const double fh = d4([&](double x) { return gas.density(p, x); }, h, 1e-3 * h);
    EXPECT_LE(std::abs(fp - gas.drho_dp(p, h)) / std::abs(fp), 1e-8);
    EXPECT_LE(std::abs(fh - gas.drho_dh(p, h)) / std::abs(fh), 1e-8);
  }
}

TEST_F(EosProperties, WrappedGasIsIndistinguishable) {
  const EosPerfectGas gas(1.4);
  const auto wrapped = FunctionalEos::wrap(gas);
  for (int k = 0; k < 100; ++k) {
    const double p = draw(0.1, 10.0), h = draw(0.5, 20.0);
    EXPECT_EQ(wrapped.density(p, h), gas.density(p, h));
    EXPECT_EQ(wrapped.drho_dp(p, h), gas.drho_dp(p, h));
    EXPECT_EQ(wrapped.drho_dh(p, h), gas.drho_dh(p, h));
  }
}
