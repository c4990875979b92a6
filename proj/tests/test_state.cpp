#include <gtest/gtest.h>

#include <random>

#include "support.hpp"

using namespace apflow;

TEST(State, PrimitiveFromConservativeClosedForm) {
  const EosPerfectGas gas(1.4);
  const Primitive a = primitive_from_conservative(Conserved{1.0, {0.0, 0.0}, 2.5}, gas, 1.0);
  EXPECT_NEAR(a.p, 1.0, 1e-15);
  EXPECT_NEAR(a.h, 3.5, 1e-15);
  const Primitive b = primitive_from_conservative(Conserved{0.125, {0.0, 0.0}, 0.25}, gas, 1.0);
  EXPECT_NEAR(b.p, 0.1, 1e-15);
  EXPECT_NEAR(b.h, 2.8, 1e-14);
}

TEST(State, ConservativeFromPrimitive) {
  const EosPerfectGas gas(1.4);
  const Conserved a = conservative_from_primitive(Primitive{1.0, 3.5, {0.0, 0.0}}, gas, 1.0);
  EXPECT_NEAR(a.rho, 1.0, 1e-15);
  EXPECT_EQ(a.q[0], 0.0);
  EXPECT_NEAR(a.W, 2.5, 1e-15);
  // W = rho h - p = p / (gamma - 1) for any h.
  const Conserved b = conservative_from_primitive(Primitive{0.571, 3.3997, {0.0, 0.0}}, gas, 1.0);
  EXPECT_NEAR(b.W, 1.4275, 1e-14);
}

TEST(State, KineticEnergyCarriesEpsilonSquared) {
  const EosPerfectGas gas(1.4);
  const Conserved c = conservative_from_primitive(Primitive{1.0, 3.5, {2.0, -1.0}}, gas, 0.1);
  EXPECT_NEAR(c.W, 0.5 * 0.01 * 1.0 * 5.0 + 2.5, 1e-15);
  const CellState s = make_cell_state(c, gas, 0.1);
  EXPECT_NEAR(s.H, 3.5 + 0.5 * 0.01 * 5.0, 1e-14);
  EXPECT_NEAR(s.am2, 1.4, 1e-14);
}

TEST(State, RejectsInadmissibleStates) {
  const EosPerfectGas gas(1.4);
  EXPECT_THROW(primitive_from_conservative(Conserved{-1.0, {0.0, 0.0}, 1.0}, gas, 1.0), StateError);
  EXPECT_THROW(primitive_from_conservative(Conserved{1.0, {3.0, 0.0}, 1.0}, gas, 1.0), StateError);
  EXPECT_THROW(primitive_from_conservative(Conserved{1.0, {3.0, 0.0}, 1.0}, FunctionalEos::wrap(gas), 1.0), StateError);
}

TEST(State, NondimensionalizationGivesEpsilon) {
  ScalingParameters s{1.0, 121.0, 1.0, 1.0};
  EXPECT_NEAR(s.epsilon(), 1.0 / 11.0, 1e-16);
  SiFlowData si;
  si.rho = 2.0;
  si.p = 242.0;
  si.h = 121.0;
  si.u = {3.0, 0.0};
  si.nu = 0.5;
  const ScaledFlowData d = nondimensionalize(si, s);
  EXPECT_DOUBLE_EQ(d.rho, 2.0);
  EXPECT_DOUBLE_EQ(d.p, 2.0);
  EXPECT_DOUBLE_EQ(d.h, 1.0);
  EXPECT_DOUBLE_EQ(d.u[0], 3.0);
  EXPECT_DOUBLE_EQ(d.reynolds, 2.0);
  EXPECT_THROW(nondimensionalize(si, ScalingParameters{0.0, 1.0, 1.0, 1.0}), std::invalid_argument);
}

class RoundTrip : public ::testing::TestWithParam<double> {};

TEST_P(RoundTrip, ConservativePrimitiveConservative) {
  const double eps = GetParam();
  const EosPerfectGas gas(1.4);
  const auto general = FunctionalEos::wrap(gas);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int k = 0; k < 1000; ++k) {
    const Primitive prim{0.05 + 5.0 * U(rng), 0.5 + 10.0 * U(rng), {4.0 * U(rng) - 2.0, 4.0 * U(rng) - 2.0}};
    const Conserved c = conservative_from_primitive(prim, gas, eps);
    for (const Conserved& back : {conservative_from_primitive(primitive_from_conservative(c, gas, eps), gas, eps),
                                  conservative_from_primitive(primitive_from_conservative(c, general, eps), gas, eps)}) {
      EXPECT_LE(test::relative(back.rho, c.rho), 1e-10);
      EXPECT_LE(std::abs(back.q[0] - c.q[0]), 1e-10 * (1.0 + std::abs(c.q[0])));
      EXPECT_LE(std::abs(back.q[1] - c.q[1]), 1e-10 * (1.0 + std::abs(c.q[1])));
      EXPECT_LE(test::relative(back.W, c.W), 1e-10);
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Epsilons, RoundTrip, ::testing::Values(1.0, 1e-2, 1e-4));

TEST(State, TotalsAreBitReproducible) {
  const StructuredGrid g = build_grid(test::line(257, 0.0, 1.0));
  const ConservativeState U = test::sod_state(g);
  const double a = total(g, [&](int c) { return U[c].W; });
  const double b = total(g, [&](int c) { return U[c].W; });
  EXPECT_EQ(a, b);
}
