#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "support.hpp"

using namespace apflow;

namespace {

const EosPerfectGas kGas(1.4);

/// Independent dense construction of the implicit energy operator on a fully
/// periodic grid: G = centered gradient, face flux (H_L G_L + H_R G_R)/2,
/// divergence over the cell.
Eigen::MatrixXd periodic_operator_oracle(const StructuredGrid& g, const std::vector<double>& H) {
  const int n = g.num_cells();
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
  const double dx = g.dx();
  auto shift = [&](int c, int axis, int d) {
    auto p = g.coords(c);
    p[axis] = (p[axis] + d + g.cells(axis)) % g.cells(axis);
    return g.index(p[0], p[1]);
  };
  for (int col = 0; col < n; ++col) {
    Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
    p[col] = 1.0;
    for (int c = 0; c < n; ++c) {
      for (int a = 0; a < g.dimension(); ++a) {
        auto G = [&](int k) { return (p[shift(k, a, 1)] - p[shift(k, a, -1)]) / (2.0 * dx); };
        const int r = shift(c, a, 1), l = shift(c, a, -1);
        const double f_hi = 0.5 * (H[c] * G(c) + H[r] * G(r));
        const double f_lo = 0.5 * (H[l] * G(l) + H[c] * G(c));
        L(c, col) += (f_hi - f_lo) / dx;
      }
    }
  }
  return L;
}

ImplicitOperator updated_operator(const StructuredGrid& g, const BoundaryData& bc, const std::vector<double>& H,
                                  double h_ghost = 1.0) {
  ImplicitOperator op(g, bc);
  op.update(H, std::vector<double>(g.faces().size(), h_ghost));
  return op;
}

std::vector<double> random_positive(int n, unsigned seed, double lo = 0.5, double hi = 4.0) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> U(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = U(rng);
  return v;
}

}  // namespace

TEST(PressureSolver, ThreeCellPeriodicRow) {
  const StructuredGrid g = build_grid(test::line(3, 0.0, 3.0));
  const ImplicitOperator op = updated_operator(g, {}, {1.0, 1.0, 1.0});
  // k = (gamma - 1) dt^2 = 0.4: row [1 + k/(2 dx^2), -k/(4 dx^2), -k/(4 dx^2)].
  const SparseSystem sys = assemble_elliptic(op, 1.0 / 0.4, {0.0, 0.0, 0.0}, 1.0, 0.0, 1.0);
  const Eigen::MatrixXd A(sys.matrix);
  for (int r = 0; r < 3; ++r) {
    EXPECT_NEAR(A(r, r), 1.2, 1e-15);
    EXPECT_NEAR(A(r, (r + 1) % 3), -0.1, 1e-15);
    EXPECT_NEAR(A(r, (r + 2) % 3), -0.1, 1e-15);
  }
}

TEST(PressureSolver, OperatorMatchesDenseOracle) {
  for (const GridConfig& cfg : {test::line(9, 0.0, 1.3), test::square(6, 0.0, 2.0)}) {
    const StructuredGrid g = build_grid(cfg);
    const auto H = random_positive(g.num_cells(), 17);
    const ImplicitOperator op = updated_operator(g, {}, H);
    const Eigen::MatrixXd L(op.operator_matrix());
    const Eigen::MatrixXd oracle = periodic_operator_oracle(g, H);
    EXPECT_LE((L - oracle).cwiseAbs().maxCoeff(), 1e-12 * oracle.cwiseAbs().maxCoeff());
    for (double v : op.l0()) EXPECT_EQ(v, 0.0);
  }
}

TEST(PressureSolver, ZeroTimeStepGivesScaledIdentity) {
  const StructuredGrid g = build_grid(test::square(5, 0.0, 1.0));
  const auto H = random_positive(g.num_cells(), 3);
  const ImplicitOperator op = updated_operator(g, {}, H);
  const std::vector<double> phi = random_positive(g.num_cells(), 4);
  const double eps = 0.01;
  const SparseSystem sys = assemble_elliptic(op, 2.5, phi, 0.0, 0.0, eps);
  const Eigen::MatrixXd A = Eigen::MatrixXd(sys.matrix) / (eps * eps);
  EXPECT_LE((A - Eigen::MatrixXd::Identity(g.num_cells(), g.num_cells())).cwiseAbs().maxCoeff(), 1e-15);
  LinearSolver solver;
  const Eigen::VectorXd x = solver.solve(sys.matrix, sys.rhs);
  for (int c = 0; c < g.num_cells(); ++c) EXPECT_NEAR(x[c], 0.4 * phi[c], 1e-14);
}

TEST(PressureSolver, ConstantsAreAnnihilated) {
  for (BoundaryKind kind : {BoundaryKind::periodic, BoundaryKind::neumann, BoundaryKind::slip_wall}) {
    const StructuredGrid g = build_grid(test::square(7, 0.0, 1.0, kind));
    const ImplicitOperator op = updated_operator(g, {}, random_positive(g.num_cells(), 8), 2.0);
    const auto y = op.apply(std::vector<double>(g.num_cells(), 3.7));
    for (double v : y) EXPECT_NEAR(v, 0.0, 1e-11);
  }
}

TEST(PressureSolver, OutletPressureEntersTheRightHandSide) {
  GridConfig cfg = test::line(6, 0.0, 1.0, BoundaryKind::slip_wall);
  cfg.sides[x_upper].kind = BoundaryKind::outlet;
  const StructuredGrid g = build_grid(cfg);
  BoundaryData bc;
  bc.sides[x_upper].pressure = 0.8;
  const ImplicitOperator op = updated_operator(g, bc, std::vector<double>(6, 1.5), 1.5);
  double l0 = 0.0;
  for (double v : op.l0()) l0 += std::abs(v);
  EXPECT_GT(l0, 0.0);
  // A uniform field at the outlet pressure is in equilibrium.
  for (double v : op.apply(std::vector<double>(6, 0.8))) EXPECT_NEAR(v, 0.0, 1e-13);
  const double dt = 0.1, k = 0.4 * dt * dt;
  const SparseSystem sys = assemble_elliptic(op, 2.5, std::vector<double>(6, 0.0), dt, 0.0, 1.0);
  for (int c = 0; c < 6; ++c) EXPECT_NEAR(sys.rhs[c], k * op.l0()[c], 1e-15);
}

TEST(PressureSolver, SymmetricForConstantEnthalpy) {
  const StructuredGrid g = build_grid(test::square(8, 0.0, 1.0));
  const ImplicitOperator op = updated_operator(g, {}, std::vector<double>(g.num_cells(), 2.3));
  const SparseSystem sys = assemble_elliptic(op, 2.5, std::vector<double>(g.num_cells(), 1.0), 0.05, 1.0, 0.1);
  const Eigen::MatrixXd A(sys.matrix);
  EXPECT_LE((A - A.transpose()).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(PressureSolver, MMatrixStructure) {
  const StructuredGrid g = build_grid(test::square(8, 0.0, 1.0));
  const ImplicitOperator op = updated_operator(g, {}, random_positive(g.num_cells(), 21));
  const double eps = 0.05;
  const SparseSystem sys = assemble_elliptic(op, 2.5, std::vector<double>(g.num_cells(), 1.0), 0.01, 0.0, eps);
  const Eigen::MatrixXd A(sys.matrix);
  for (int r = 0; r < A.rows(); ++r) {
    double off = 0.0;
    EXPECT_GT(A(r, r), 0.0);
    for (int c = 0; c < A.cols(); ++c) {
      if (c == r) continue;
      EXPECT_LE(A(r, c), 0.0);
      off += A(r, c);
    }
    // Rows sum to eps^2: strict diagonal dominance.
    EXPECT_NEAR(A(r, r) + off, eps * eps, 1e-12);
  }
}

TEST(PressureSolver, FiniteAtTinyEpsilon) {
  const StructuredGrid g = build_grid(test::square(6, 0.0, 1.0));
  const ImplicitOperator op = updated_operator(g, {}, random_positive(g.num_cells(), 2));
  const SparseSystem sys = assemble_elliptic(op, 2.5, random_positive(g.num_cells(), 5), 0.01, 1.0, 1e-8);
  EXPECT_TRUE(Eigen::MatrixXd(sys.matrix).allFinite());
  EXPECT_TRUE(sys.rhs.allFinite());
}

class Solvers : public ::testing::TestWithParam<LinearSolverKind> {};

TEST_P(Solvers, RecoverManufacturedSolution) {
  const StructuredGrid g = build_grid(test::square(16, 0.0, 1.0, BoundaryKind::slip_wall));
  const ImplicitOperator op = updated_operator(g, {}, random_positive(g.num_cells(), 9), 2.0);
  const SparseSystem sys = assemble_elliptic(op, 2.5, std::vector<double>(g.num_cells(), 0.0), 0.02, 0.0, 0.01);
  const auto p = random_positive(g.num_cells(), 10);
  const Eigen::VectorXd x_true = Eigen::Map<const Eigen::VectorXd>(p.data(), g.num_cells());
  const Eigen::VectorXd b = sys.matrix * x_true;
  LinearSolver solver(GetParam());
  const Eigen::VectorXd x = solver.solve(sys.matrix, b);
  EXPECT_LE((x - x_true).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LE(solver.last_report().relative_residual, 1e-10);
  // Identity system returns the right-hand side.
  SparseMatrix I(5, 5);
  I.setIdentity();
  const Eigen::VectorXd r = Eigen::VectorXd::LinSpaced(5, 1.0, 5.0);
  EXPECT_LE((LinearSolver(GetParam()).solve(I, r) - r).norm(), 1e-14);
}

INSTANTIATE_TEST_SUITE_P(Kinds, Solvers,
                         ::testing::Values(LinearSolverKind::automatic, LinearSolverKind::sparse_lu,
                                           LinearSolverKind::bicgstab, LinearSolverKind::dense));

TEST(PressureSolver, DimensionMismatchIsAnError) {
  SparseMatrix I(3, 3);
  I.setIdentity();
  LinearSolver s;
  EXPECT_THROW(s.solve(I, Eigen::VectorXd::Ones(4)), SolverError);
}

TEST(PressureSolver, NonPositiveEnthalpyIsAnError) {
  const StructuredGrid g = build_grid(test::line(4, 0.0, 1.0));
  ImplicitOperator op(g, {});
  EXPECT_THROW(op.update({1.0, -1.0, 1.0, 1.0}, std::vector<double>(4, 1.0)), SolverError);
}

TEST(PressureSolver, TripletDump) {
  SparseMatrix m(2, 2);
  m.insert(0, 0) = 1.5;
  m.insert(1, 0) = -2.0;
  std::ostringstream os;
  write_triplets(os, m);
  EXPECT_EQ(os.str(), "0 0 1.5\n1 0 -2\n");
}

namespace {

struct NewtonSetup {
  StructuredGrid g = build_grid(test::line(40, 0.0, 1.0, BoundaryKind::neumann));
  ImplicitOperator op{g, {}};
  std::vector<double> rho, phi, p0, h0;
  double dt = 2e-3, eps = 1.0, alpha = 0.0;

  NewtonSetup() {
    const ConservativeState U = test::sod_state(g);
    std::vector<double> H;
    for (int c = 0; c < g.num_cells(); ++c) {
      const Primitive pr = primitive_from_conservative(U[c], kGas, eps);
      rho.push_back(U[c].rho * (1.0 + 0.01 * std::sin(c)));
      phi.push_back(U[c].W * (1.0 + 0.02 * std::cos(c)));
      p0.push_back(pr.p);
      h0.push_back(pr.h);
      H.push_back(pr.h);
    }
    op.update(H, std::vector<double>(g.faces().size(), 3.0));
  }
};

}  // namespace

TEST(Newton, MatchesTheLinearPerfectGasSystem) {
  NewtonSetup s;
  LinearSolver lin, nl;
  const SparseSystem sys = assemble_elliptic(s.op, kGas.internal_energy_factor(), s.phi, s.dt, s.alpha, s.eps);
  const Eigen::VectorXd p_lin = lin.solve(sys.matrix, sys.rhs);
  const NewtonResult res = newton_solve(s.op, nl, s.rho, s.phi, FunctionalEos::wrap(kGas), s.dt, s.alpha, s.eps, s.p0,
                                        s.h0);
  EXPECT_LE(res.iterations, 5);
  for (int c = 0; c < s.g.num_cells(); ++c) {
    EXPECT_LE(test::relative(res.p[c], p_lin[c]), 1e-8);
    EXPECT_LE(test::relative(res.h[c], kGas.kappa() * p_lin[c] / s.rho[c]), 1e-8);
  }
}

TEST(Newton, ExactGuessNeedsNoIteration) {
  NewtonSetup s;
  LinearSolver lin;
  const SparseSystem sys = assemble_elliptic(s.op, kGas.internal_energy_factor(), s.phi, s.dt, s.alpha, s.eps);
  const Eigen::VectorXd x = lin.solve(sys.matrix, sys.rhs);
  std::vector<double> p(x.data(), x.data() + x.size()), h;
  for (int c = 0; c < s.g.num_cells(); ++c) h.push_back(kGas.kappa() * p[c] / s.rho[c]);
  const NewtonResult res = newton_solve(s.op, lin, s.rho, s.phi, FunctionalEos::wrap(kGas), s.dt, s.alpha, s.eps, p, h);
  EXPECT_EQ(res.iterations, 0);
  EXPECT_LE(res.residual, 1e-10);
}

TEST(Newton, IterationCapIsASolverError) {
  NewtonSetup s;
  LinearSolver lin;
  NewtonOptions opt;
  opt.max_iterations = 0;
  EXPECT_THROW(newton_solve(s.op, lin, s.rho, s.phi, FunctionalEos::wrap(kGas), s.dt, s.alpha, s.eps, s.p0, s.h0, opt),
               SolverError);
}
