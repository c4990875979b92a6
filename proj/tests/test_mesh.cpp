#include <gtest/gtest.h>

#include "support.hpp"

using namespace apflow;

namespace {

const EosPerfectGas kGas(1.4);

std::vector<CellState> states_with_pressure(const StructuredGrid& g, const std::vector<double>& p) {
  std::vector<CellState> s;
  for (int c = 0; c < g.num_cells(); ++c) s.push_back(make_cell_state(Primitive{p[c], 3.5, {0.0, 0.0}}, kGas, 1.0));
  return s;
}

bool same(const CellState& a, const CellState& b) {
  return a.cons == b.cons && a.prim == b.prim && a.H == b.H && a.am2 == b.am2;
}

}  // namespace

TEST(Mesh, SpacingOfTheBenchmarkGrids) {
  EXPECT_NEAR(build_grid(test::line(220, -22.0, 22.0)).dx(), 0.2, 1e-15);
  EXPECT_NEAR(build_grid(test::line(100, 0.0, 1.0)).dx(), 0.01, 1e-17);
  const StructuredGrid g = build_grid(test::square(50, 0.0, 1.0, BoundaryKind::slip_wall));
  EXPECT_NEAR(g.dx(), 1.0 / 50.0, 1e-17);
  EXPECT_EQ(g.num_cells(), 2500);
  EXPECT_NEAR(g.volume(), 4e-4, 1e-18);
}

TEST(Mesh, ValidationRejectsBadConfigs) {
  EXPECT_THROW(build_grid(test::line(0, 0.0, 1.0)), ConfigError);
  EXPECT_THROW(build_grid(test::line(10, 1.0, 0.0)), ConfigError);
  GridConfig mixed = test::line(10, 0.0, 1.0);
  mixed.sides[x_upper].kind = BoundaryKind::neumann;
  EXPECT_THROW(build_grid(mixed), ConfigError);
  GridConfig rect = test::square(10, 0.0, 1.0);
  rect.cells = {10, 7};
  EXPECT_THROW(build_grid(rect), ConfigError);
  GridConfig all_solid = test::square(4, 0.0, 1.0, BoundaryKind::slip_wall);
  all_solid.solids.push_back({{-1.0, -1.0}, {2.0, 2.0}});
  EXPECT_THROW(build_grid(all_solid), ConfigError);
  EXPECT_THROW(boundary_kind_from_string("sticky"), ConfigError);
}

TEST(Mesh, FaceEnumeration) {
  const StructuredGrid per = build_grid(test::line(5, 0.0, 1.0));
  EXPECT_EQ(per.faces().size(), 5u);
  for (const Face& f : per.faces()) EXPECT_FALSE(f.boundary());
  const StructuredGrid wall = build_grid(test::line(5, 0.0, 1.0, BoundaryKind::slip_wall));
  ASSERT_EQ(wall.faces().size(), 6u);
  EXPECT_EQ(wall.faces().front().side, x_lower);
  EXPECT_EQ(wall.faces().back().side, x_upper);
  const StructuredGrid sq = build_grid(test::square(4, 0.0, 1.0, BoundaryKind::slip_wall));
  EXPECT_EQ(sq.faces().size(), 2u * 4u * 5u);
}

TEST(Mesh, ControlVolumesAreClosed) {
  GridConfig cfg = test::square(8, 0.0, 8.0, BoundaryKind::slip_wall);
  cfg.sides[x_lower].kind = cfg.sides[x_upper].kind = BoundaryKind::periodic;
  cfg.solids.push_back({{0.0, 0.0}, {3.0, 3.0}});
  const StructuredGrid g = build_grid(cfg);
  std::vector<Vec2> sum(g.num_cells(), Vec2{0.0, 0.0});
  for (const Face& f : g.faces()) {
    if (f.left >= 0) sum[f.left][f.axis] += g.face_area();
    if (f.right >= 0) sum[f.right][f.axis] -= g.face_area();
  }
  for (int c = 0; c < g.num_cells(); ++c) {
    if (!g.fluid(c)) continue;
    EXPECT_EQ(sum[c][0], 0.0);
    EXPECT_EQ(sum[c][1], 0.0);
  }
}

TEST(Mesh, SolidMaskByCellCenter) {
  GridConfig cfg = test::square(4, 0.0, 4.0, BoundaryKind::slip_wall);
  cfg.solids.push_back({{0.0, 0.0}, {2.0, 2.0}});
  const StructuredGrid g = build_grid(cfg);
  EXPECT_EQ(g.num_fluid_cells(), 12);
  EXPECT_FALSE(g.fluid(g.index(1, 1)));
  EXPECT_TRUE(g.fluid(g.index(2, 1)));
  EXPECT_EQ(g.neighbor(g.index(2, 1), 0, -1).kind, Neighbor::Kind::solid);
  EXPECT_EQ(g.neighbor(g.index(3, 1), 0, +1).kind, Neighbor::Kind::boundary);
  EXPECT_EQ(g.neighbor(g.index(3, 1), 0, +1).side, x_upper);
}

TEST(Mesh, PeriodicGhostsWrap) {
  const StructuredGrid g = build_grid(test::line(3, 0.0, 3.0));
  const auto s = states_with_pressure(g, {1.0, 2.0, 3.0});
  const auto gh = fill_ghosts(g, s, BoundaryData{}, kGas, 1.0);
  EXPECT_EQ(gh.at(-2).prim.p, 2.0);
  EXPECT_EQ(gh.at(-1).prim.p, 3.0);
  EXPECT_EQ(gh.at(3).prim.p, 1.0);
  EXPECT_EQ(gh.at(4).prim.p, 2.0);
}

TEST(Mesh, SlipWallMirrorsTheNormalComponent) {
  GridConfig cfg = test::square(3, 0.0, 3.0, BoundaryKind::slip_wall);
  const StructuredGrid g = build_grid(cfg);
  std::vector<CellState> s(g.num_cells(), make_cell_state(Primitive{1.0, 3.5, {0.3, 0.5}}, kGas, 1.0));
  const auto gh = fill_ghosts(g, s, BoundaryData{}, kGas, 1.0);
  EXPECT_EQ(gh.at(-1, 1).prim.u[0], -0.3);
  EXPECT_EQ(gh.at(-1, 1).prim.u[1], 0.5);
  EXPECT_EQ(gh.at(1, 3).prim.u[0], 0.3);
  EXPECT_EQ(gh.at(1, 3).prim.u[1], -0.5);
  EXPECT_EQ(gh.at(-1, 1).cons.q[0], -s[0].cons.q[0]);
}

TEST(Mesh, NeumannCopiesTheBoundaryCell) {
  const StructuredGrid g = build_grid(test::line(4, 0.0, 1.0, BoundaryKind::neumann));
  const auto s = states_with_pressure(g, {7.2, 1.0, 2.0, 3.0});
  const auto gh = fill_ghosts(g, s, BoundaryData{}, kGas, 1.0);
  EXPECT_EQ(gh.at(-1).prim.p, 7.2);
  EXPECT_EQ(gh.at(-2).prim.p, 7.2);
  EXPECT_EQ(gh.at(4).prim.p, 3.0);
}

TEST(Mesh, InletAndOutletImposeTheirData) {
  GridConfig cfg = test::line(4, 0.0, 1.0, BoundaryKind::neumann);
  cfg.sides[x_lower].kind = BoundaryKind::inlet;
  cfg.sides[x_upper].kind = BoundaryKind::outlet;
  const StructuredGrid g = build_grid(cfg);
  BoundaryData bc;
  EXPECT_THROW(fill_ghosts(g, states_with_pressure(g, {1, 1, 1, 1}), bc, kGas, 1.0), ConfigError);
  bc.sides[x_lower].velocity = Vec2{0.4, 0.0};
  bc.sides[x_lower].enthalpy = 3.0;
  bc.sides[x_upper].pressure = 0.9;
  const auto gh = fill_ghosts(g, states_with_pressure(g, {1.1, 1.0, 1.0, 1.2}), bc, kGas, 1.0);
  EXPECT_EQ(gh.at(-1).prim.u[0], 0.4);
  EXPECT_EQ(gh.at(-1).prim.h, 3.0);
  EXPECT_EQ(gh.at(-1).prim.p, 1.1);
  EXPECT_EQ(gh.at(4).prim.p, 0.9);
  EXPECT_EQ(gh.at(4).prim.h, 3.5);
}

TEST(Mesh, MovingLidRampsLinearly) {
  GridConfig cfg = test::square(4, 0.0, 1.0, BoundaryKind::slip_wall);
  cfg.sides[y_upper].wall_speed = 1.0;
  cfg.sides[y_upper].wall_ramp_time = 1.0;
  const StructuredGrid g = build_grid(cfg);
  EXPECT_EQ(g.wall_speed(y_upper, 0.0), 0.0);
  EXPECT_EQ(g.wall_speed(y_upper, 0.5), 0.5);
  EXPECT_EQ(g.wall_speed(y_upper, 3.0), 1.0);
  EXPECT_EQ(g.wall_speed(y_lower, 3.0), 0.0);
  std::vector<CellState> s(g.num_cells(), make_cell_state(Primitive{1.0, 3.5, {0.0, 0.0}}, kGas, 0.1));
  const auto gh = fill_ghosts(g, s, BoundaryData{}, kGas, 0.1, 0.5);
  // The ghost tangential velocity puts the wall speed on the face.
  EXPECT_DOUBLE_EQ(0.5 * (gh.at(2, 4).prim.u[0] + s[g.index(2, 3)].prim.u[0]), 0.5);
  EXPECT_DOUBLE_EQ(gh.at(2, 4).H, 3.5 + 0.5 * 0.01 * 1.0);
}

TEST(Mesh, IsothermalConductionGhost) {
  GridConfig cfg = test::line(4, 0.0, 1.0, BoundaryKind::isothermal_wall);
  const StructuredGrid g = build_grid(cfg);
  BoundaryData bc;
  bc.sides[x_lower].enthalpy = 2.0;
  bc.sides[x_upper].enthalpy = 2.0;
  EXPECT_EQ(conduction_ghost_enthalpy(g, bc, x_lower, 3.0, 99.0), 1.0);
  const StructuredGrid n = build_grid(test::line(4, 0.0, 1.0, BoundaryKind::adiabatic_wall));
  EXPECT_EQ(conduction_ghost_enthalpy(n, bc, x_lower, 3.0, 99.0), 99.0);
}

class GhostInvariants : public ::testing::TestWithParam<BoundaryKind> {};

TEST_P(GhostInvariants, ConstantStateIsPreservedAndFillIsIdempotent) {
  const StructuredGrid g = build_grid(test::square(5, 0.0, 1.0, GetParam()));
  const CellState c = make_cell_state(Primitive{0.7, 2.1, {0.0, 0.0}}, kGas, 0.01);
  std::vector<CellState> s(g.num_cells(), c);
  const auto a = fill_ghosts(g, s, BoundaryData{}, kGas, 0.01);
  for (int j = -kGhostWidth; j < 5 + kGhostWidth; ++j)
    for (int i = -kGhostWidth; i < 5 + kGhostWidth; ++i) EXPECT_TRUE(same(a.at(i, j), c)) << i << ',' << j;

  // Varying state: filling twice gives the same frame.
  std::vector<CellState> v;
  for (int k = 0; k < g.num_cells(); ++k)
    v.push_back(make_cell_state(Primitive{1.0 + 0.1 * k, 3.0 + 0.01 * k, {0.1 * (k % 3), -0.05 * k}}, kGas, 0.5));
  const auto b1 = fill_ghosts(g, v, BoundaryData{}, kGas, 0.5);
  std::vector<CellState> interior;
  for (int k = 0; k < g.num_cells(); ++k) interior.push_back(b1.at(g.coords(k)));
  const auto b2 = fill_ghosts(g, interior, BoundaryData{}, kGas, 0.5);
  for (int j = -kGhostWidth; j < 5 + kGhostWidth; ++j)
    for (int i = -kGhostWidth; i < 5 + kGhostWidth; ++i) EXPECT_TRUE(same(b1.at(i, j), b2.at(i, j)));
}

INSTANTIATE_TEST_SUITE_P(Tags, GhostInvariants,
                         ::testing::Values(BoundaryKind::periodic, BoundaryKind::neumann, BoundaryKind::slip_wall,
                                           BoundaryKind::adiabatic_wall));

TEST(Mesh, FaceStencilReflectsSolids) {
  GridConfig cfg = test::square(4, 0.0, 4.0, BoundaryKind::slip_wall);
  cfg.solids.push_back({{0.0, 0.0}, {2.0, 2.0}});
  const StructuredGrid g = build_grid(cfg);
  std::vector<CellState> s;
  for (int c = 0; c < g.num_cells(); ++c)
    s.push_back(make_cell_state(Primitive{1.0 + c, 3.5, {0.2, 0.1}}, kGas, 1.0));
  const auto gh = fill_ghosts(g, s, BoundaryData{}, kGas, 1.0);
  for (const Face& f : g.faces()) {
    if (!f.solid) continue;
    const FaceStencil st = face_stencil(g, gh, f);
    const int in = f.left >= 0 ? f.left : f.right;
    const CellState& solid_side = f.left >= 0 ? st.v[2] : st.v[1];
    EXPECT_EQ(solid_side.prim.p, s[in].prim.p);
    EXPECT_EQ(solid_side.prim.u[f.axis], -s[in].prim.u[f.axis]);
  }
}
