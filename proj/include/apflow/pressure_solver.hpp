#pragma once

// Implicit pressure stage. The momentum closure q = q* - dt (1 - alpha eps^2)/eps^2 G p
// is substituted into the energy flux H q . n, giving an operator L with
//   div(H q^{n+1}) = div(H q*) - dt (1 - alpha eps^2)/eps^2 (L p + l0).
// Systems are always multiplied through by eps^2 so nothing divides by it.

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "apflow/mesh.hpp"

namespace apflow {

class SolverError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

using SparseMatrix = Eigen::SparseMatrix<double>;

struct SparseSystem {
  SparseMatrix matrix;
  Eigen::VectorXd rhs;
};

/// Writes "row col value" lines with 0-based indices.
inline void write_triplets(std::ostream& os, const SparseMatrix& m) {
  os.precision(17);
  for (int j = 0; j < m.outerSize(); ++j)
    for (SparseMatrix::InnerIterator it(m, j); it; ++it) os << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
}

struct AffineTerm {
  int col;
  double coef;
};

struct AffineRow {
  std::vector<AffineTerm> terms;
  double constant = 0.0;

  double eval(const std::vector<double>& p) const {
    double s = constant;
    for (const auto& t : terms) s += t.coef * p[t.col];
    return s;
  }
};

/// How the missing side of a boundary face sees pressure and normal momentum:
/// p_ghost = p_scale p_in + p_const, q_ghost = q_scale q_in + (per-step constant).
struct FaceClosure {
  double p_scale = 1.0;
  double p_const = 0.0;
  double q_scale = 1.0;
};

inline FaceClosure face_closure(const StructuredGrid& grid, const BoundaryData& bc, const Face& f) {
  if (f.solid) return {1.0, 0.0, -1.0};
  switch (grid.side(f.side).kind) {
    case BoundaryKind::slip_wall:
    case BoundaryKind::isothermal_wall:
    case BoundaryKind::adiabatic_wall: return {1.0, 0.0, -1.0};
    case BoundaryKind::neumann: return {1.0, 0.0, 1.0};
    case BoundaryKind::inlet: return {1.0, 0.0, 0.0};
    case BoundaryKind::outlet: return {0.0, *bc.sides[f.side].pressure, 1.0};
    case BoundaryKind::periodic: break;
  }
  throw ConfigError("periodic side produced a boundary face");
}

/// Energy-flux operator L on a fixed sparsity pattern. Coefficients depend on
/// the frozen H^n and are refreshed by update().
class ImplicitOperator {
public:
  ImplicitOperator(const StructuredGrid& grid, const BoundaryData& bc) : n_(grid.num_cells()), dx_(grid.dx()) {
    require_side_data(grid, bc);
    const auto& faces = grid.faces();
    closures_.resize(faces.size());
    std::vector<std::array<std::array<int, 2>, 2>> cell_face(n_, {{{-1, -1}, {-1, -1}}});
    for (std::size_t f = 0; f < faces.size(); ++f) {
      const Face& fc = faces[f];
      if (fc.boundary()) closures_[f] = face_closure(grid, bc, fc);
      if (fc.left >= 0) cell_face[fc.left][fc.axis][1] = static_cast<int>(f);
      if (fc.right >= 0) cell_face[fc.right][fc.axis][0] = static_cast<int>(f);
    }
    // Face pressure P_f = (p_L + p_R)/2 with boundary closures.
    auto face_pressure = [&](int f) {
      const Face& fc = faces[f];
      AffineRow r;
      if (!fc.boundary()) {
        r.terms = {{fc.left, 0.5}, {fc.right, 0.5}};
      } else {
        const int in = fc.left >= 0 ? fc.left : fc.right;
        r.terms = {{in, 0.5 * (1.0 + closures_[f].p_scale)}};
        r.constant = 0.5 * closures_[f].p_const;
      }
      return r;
    };
    grad_.resize(static_cast<std::size_t>(n_) * 2);
    for (int c = 0; c < n_; ++c) {
      if (!grid.fluid(c)) continue;
      for (int a = 0; a < grid.dimension(); ++a) {
        const AffineRow hi = face_pressure(cell_face[c][a][1]);
        const AffineRow lo = face_pressure(cell_face[c][a][0]);
        std::map<int, double> acc;
        for (const auto& t : hi.terms) acc[t.col] += t.coef / dx_;
        for (const auto& t : lo.terms) acc[t.col] -= t.coef / dx_;
        AffineRow g;
        for (const auto& [col, coef] : acc)
          if (coef != 0.0) g.terms.push_back({col, coef});
        g.constant = (hi.constant - lo.constant) / dx_;
        grad_[2 * c + a] = std::move(g);
      }
    }
    // Face flux terms: 0.5 (H_L Q_L + H_R Q_R), Q = gradient of the side's cell
    // or the closure-scaled gradient of the interior cell for a ghost side.
    std::vector<Eigen::Triplet<double>> pattern;
    for (int c = 0; c < n_; ++c) pattern.emplace_back(c, c, 0.0);
    face_terms_.resize(faces.size());
    face_const_.resize(faces.size());
    for (std::size_t f = 0; f < faces.size(); ++f) {
      const Face& fc = faces[f];
      const int in = fc.left >= 0 ? fc.left : fc.right;
      const AffineRow& gl = grad_[2 * (fc.left >= 0 ? fc.left : in) + fc.axis];
      const AffineRow& gr = grad_[2 * (fc.right >= 0 ? fc.right : in) + fc.axis];
      const double sl = fc.left >= 0 ? 1.0 : closures_[f].q_scale;
      const double sr = fc.right >= 0 ? 1.0 : closures_[f].q_scale;
      std::map<int, std::array<double, 2>> acc;
      for (const auto& t : gl.terms) acc[t.col][0] += sl * t.coef;
      for (const auto& t : gr.terms) acc[t.col][1] += sr * t.coef;
      face_const_[f] = {sl * gl.constant, sr * gr.constant};
      for (const auto& [col, g] : acc) {
        face_terms_[f].push_back({col, g[0], g[1], -1, -1});
        if (fc.left >= 0) pattern.emplace_back(fc.left, col, 0.0);
        if (fc.right >= 0) pattern.emplace_back(fc.right, col, 0.0);
      }
    }
    pattern_.resize(n_, n_);
    pattern_.setFromTriplets(pattern.begin(), pattern.end());
    pattern_.makeCompressed();
    auto slot = [&](int row, int col) {
      const int* inner = pattern_.innerIndexPtr();
      const int b = pattern_.outerIndexPtr()[col], e = pattern_.outerIndexPtr()[col + 1];
      const int* it = std::lower_bound(inner + b, inner + e, row);
      return static_cast<int>(it - inner);
    };
    diag_slot_.resize(n_);
    for (int c = 0; c < n_; ++c) diag_slot_[c] = slot(c, c);
    for (std::size_t f = 0; f < faces.size(); ++f) {
      for (auto& t : face_terms_[f]) {
        if (faces[f].left >= 0) t.slot_left = slot(faces[f].left, t.col);
        if (faces[f].right >= 0) t.slot_right = slot(faces[f].right, t.col);
      }
    }
    faces_ = faces;
    values_.assign(pattern_.nonZeros(), 0.0);
    l0_.assign(n_, 0.0);
  }

  int size() const { return n_; }
  const std::vector<FaceClosure>& closures() const { return closures_; }
  const AffineRow& gradient_row(int cell, int axis) const { return grad_[2 * cell + axis]; }
  double gradient(const std::vector<double>& p, int cell, int axis) const { return grad_[2 * cell + axis].eval(p); }

  /// Refreshes L for cell enthalpies H (one per grid cell) and ghost enthalpies
  /// per face (read only on boundary faces).
  void update(const std::vector<double>& H_cell, const std::vector<double>& H_ghost) {
    std::fill(values_.begin(), values_.end(), 0.0);
    std::fill(l0_.begin(), l0_.end(), 0.0);
    for (std::size_t f = 0; f < faces_.size(); ++f) {
      const Face& fc = faces_[f];
      const double hl = fc.left >= 0 ? H_cell[fc.left] : H_ghost[f];
      const double hr = fc.right >= 0 ? H_cell[fc.right] : H_ghost[f];
      if (!(hl > 0.0) || !(hr > 0.0)) throw SolverError("non-positive enthalpy at a face of the pressure operator");
      for (const auto& t : face_terms_[f]) {
        const double v = 0.5 * (hl * t.gl + hr * t.gr) / dx_;
        if (t.slot_left >= 0) values_[t.slot_left] += v;
        if (t.slot_right >= 0) values_[t.slot_right] -= v;
      }
      const double v0 = 0.5 * (hl * face_const_[f][0] + hr * face_const_[f][1]) / dx_;
      if (fc.left >= 0) l0_[fc.left] += v0;
      if (fc.right >= 0) l0_[fc.right] -= v0;
    }
  }

  const std::vector<double>& l0() const { return l0_; }

  /// L p + l0.
  std::vector<double> apply(const std::vector<double>& p) const {
    std::vector<double> y = l0_;
    const int* outer = pattern_.outerIndexPtr();
    const int* inner = pattern_.innerIndexPtr();
    for (int j = 0; j < n_; ++j)
      for (int k = outer[j]; k < outer[j + 1]; ++k) y[inner[k]] += values_[k] * p[j];
    return y;
  }

  /// diag(d) - k L on the fixed pattern.
  SparseMatrix matrix(const std::vector<double>& diag, double k) const {
    SparseMatrix a = pattern_;
    double* v = a.valuePtr();
    for (std::size_t s = 0; s < values_.size(); ++s) v[s] = -k * values_[s];
    for (int c = 0; c < n_; ++c) v[diag_slot_[c]] += diag[c];
    return a;
  }

  SparseMatrix operator_matrix() const {
    SparseMatrix a = pattern_;
    std::copy(values_.begin(), values_.end(), a.valuePtr());
    return a;
  }

private:
  struct FaceTerm {
    int col;
    double gl, gr;
    int slot_left, slot_right;
  };
  int n_;
  double dx_;
  std::vector<Face> faces_;
  std::vector<FaceClosure> closures_;
  std::vector<AffineRow> grad_;
  std::vector<std::vector<FaceTerm>> face_terms_;
  std::vector<std::array<double, 2>> face_const_;
  SparseMatrix pattern_;
  std::vector<int> diag_slot_;
  std::vector<double> values_;
  std::vector<double> l0_;
};

/// Perfect-gas pressure system:
///   (eps^2 I - (gamma-1)(1 - alpha eps^2) dt^2 L) p = eps^2 (gamma-1) phi + (gamma-1)(1 - alpha eps^2) dt^2 l0
/// with rho e = p/(gamma-1). Cells in `frozen` (solids) get identity rows holding p_frozen.
inline SparseSystem assemble_elliptic(const ImplicitOperator& op, double energy_factor, const std::vector<double>& phi,
                                      double dt, double alpha, double eps,
                                      const std::vector<unsigned char>* frozen = nullptr,
                                      const std::vector<double>* p_frozen = nullptr) {
  const double e2 = eps * eps;
  const double gm1 = 1.0 / energy_factor;
  const double k = gm1 * (1.0 - alpha * e2) * dt * dt;
  const int n = op.size();
  std::vector<double> diag(n, e2);
  SparseSystem sys;
  sys.rhs.resize(n);
  for (int c = 0; c < n; ++c) sys.rhs[c] = e2 * gm1 * phi[c] + k * op.l0()[c];
  if (frozen) {
    for (int c = 0; c < n; ++c)
      if ((*frozen)[c]) sys.rhs[c] = e2 * (*p_frozen)[c];
  }
  sys.matrix = op.matrix(diag, k);
  if (frozen) {
    // Solid rows carry no operator entries; only the diagonal survives.
    for (int j = 0; j < sys.matrix.outerSize(); ++j)
      for (SparseMatrix::InnerIterator it(sys.matrix, j); it; ++it)
        if ((*frozen)[it.row()] && it.row() != it.col()) it.valueRef() = 0.0;
  }
  return sys;
}

enum class LinearSolverKind { automatic, sparse_lu, bicgstab, dense };

struct LinearSolveReport {
  LinearSolverKind used = LinearSolverKind::sparse_lu;
  int iterations = 0;
  double relative_residual = 0.0;
};

inline double relative_residual(const SparseMatrix& a, const Eigen::VectorXd& x, const Eigen::VectorXd& b) {
  const double nb = b.norm();
  const double nr = (a * x - b).norm();
  return nb > 0.0 ? nr / nb : nr;
}

/// Rounding floor of the residual: the error of evaluating A x - b in double
/// precision. Direct solves that reach it cannot be improved further.
inline double residual_floor(const SparseMatrix& a, const Eigen::VectorXd& x, const Eigen::VectorXd& b) {
  const Eigen::VectorXd mag = a.cwiseAbs() * x.cwiseAbs() + b.cwiseAbs();
  return 16.0 * std::numeric_limits<double>::epsilon() * mag.norm();
}

/// Dense LU oracle for small systems.
inline Eigen::VectorXd solve_dense(const SparseMatrix& a, const Eigen::VectorXd& b) {
  const Eigen::MatrixXd d(a);
  return d.partialPivLu().solve(b);
}

/// Solves A x = b to a relative residual of 1e-10. The automatic mode tries a
/// Jacobi-preconditioned BiCGSTAB and switches to sparse LU for good once that fails.
class LinearSolver {
public:
  explicit LinearSolver(LinearSolverKind kind = LinearSolverKind::automatic, double tolerance = 1e-10)
      : kind_(kind), tol_(tolerance) {}

  LinearSolverKind kind() const { return kind_; }
  const LinearSolveReport& last_report() const { return report_; }

  Eigen::VectorXd solve(const SparseMatrix& a, const Eigen::VectorXd& b) {
    if (a.rows() != a.cols() || a.rows() != b.size()) throw SolverError("linear system dimensions do not match");
    if (b.norm() == 0.0) {
      report_ = {kind_, 0, 0.0};
      return Eigen::VectorXd::Zero(b.size());
    }
    Eigen::VectorXd x;
    LinearSolverKind mode = kind_;
    if (mode == LinearSolverKind::automatic) mode = lu_fallback_ ? LinearSolverKind::sparse_lu : LinearSolverKind::bicgstab;
    if (mode == LinearSolverKind::bicgstab) {
      Eigen::BiCGSTAB<SparseMatrix, Eigen::DiagonalPreconditioner<double>> it;
      it.setTolerance(0.1 * tol_);
      it.setMaxIterations(kind_ == LinearSolverKind::automatic ? 40 : 2000);
      it.compute(a);
      x = it.solve(b);
      const double rr = relative_residual(a, x, b);
      report_ = {LinearSolverKind::bicgstab, static_cast<int>(it.iterations()), rr};
      if (rr <= tol_ && x.allFinite()) return x;
      if (kind_ != LinearSolverKind::automatic) throw SolverError("BiCGSTAB did not reach the residual tolerance");
      lu_fallback_ = true;
      mode = LinearSolverKind::sparse_lu;
    }
    if (mode == LinearSolverKind::dense) {
      x = solve_dense(a, b);
      report_ = {mode, 1, relative_residual(a, x, b)};
    } else {
      if (!lu_ || lu_rows_ != a.rows() || lu_nnz_ != a.nonZeros()) {
        lu_ = std::make_unique<Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>>>();
        lu_->analyzePattern(a);
        lu_rows_ = a.rows();
        lu_nnz_ = a.nonZeros();
      }
      lu_->factorize(a);
      if (lu_->info() != Eigen::Success) throw SolverError("sparse LU factorization failed");
      x = lu_->solve(b);
      // Stiff systems (eps^2 shift on a near-singular operator) can land just
      // above the tolerance; a few refinement sweeps reuse the factorization.
      double rr = relative_residual(a, x, b);
      for (int k = 0; k < 3 && rr > tol_ && x.allFinite(); ++k) {
        x += lu_->solve(b - a * x);
        rr = relative_residual(a, x, b);
      }
      report_ = {LinearSolverKind::sparse_lu, 1, rr};
    }
    const bool at_floor = x.allFinite() && (a * x - b).norm() <= residual_floor(a, x, b);
    if (!x.allFinite() || (report_.relative_residual > tol_ && !at_floor)) {
      std::ostringstream msg;
      msg << "linear solve missed the residual tolerance (" << std::scientific << report_.relative_residual << ")";
      throw SolverError(msg.str());
    }
    return x;
  }

private:
  LinearSolverKind kind_;
  double tol_;
  bool lu_fallback_ = false;
  std::unique_ptr<Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>>> lu_;
  Eigen::Index lu_rows_ = -1, lu_nnz_ = -1;
  LinearSolveReport report_;
};

struct NewtonOptions {
  double tolerance = 1e-10;
  int max_iterations = 50;
};

struct NewtonResult {
  std::vector<double> p;
  std::vector<double> h;
  int iterations = 0;
  double residual = 0.0;
};

/// Newton iteration on
///   f1 = eps^2 (rho h - p - phi) - (1 - alpha eps^2) dt^2 (L p + l0)
///   f2 = rho - rho(p, h)
/// eliminating dh per cell, so every step is one sparse solve in dp.
/// Convergence is tested on relative errors: f1 over eps^2 rho e (the energy
/// balance in its own units) and f2 over rho. The raw f1 carries a factor eps^2
/// and would pass any tolerance at entry when eps is small. The relative energy
/// error has a rounding floor near u k |L| / eps^2, so a full Newton step smaller
/// than the tolerance also ends the iteration.
template <EquationOfState E>
NewtonResult newton_solve(const ImplicitOperator& op, LinearSolver& solver, const std::vector<double>& rho_new,
                          const std::vector<double>& phi, const E& eos, double dt, double alpha, double eps,
                          std::vector<double> p, std::vector<double> h, const NewtonOptions& opt = {},
                          const std::vector<unsigned char>* frozen = nullptr) {
  const int n = op.size();
  const double e2 = eps * eps;
  const double k = (1.0 - alpha * e2) * dt * dt;
  auto is_frozen = [&](int c) { return frozen && (*frozen)[c]; };

  std::vector<double> f1(n), f2(n);
  auto residual = [&](const std::vector<double>& pp, const std::vector<double>& hh) {
    const std::vector<double> lp = op.apply(pp);
    double norm = 0.0;
    for (int c = 0; c < n; ++c) {
      if (is_frozen(c)) {
        f1[c] = f2[c] = 0.0;
        continue;
      }
      f1[c] = e2 * (rho_new[c] * hh[c] - pp[c] - phi[c]) - k * lp[c];
      f2[c] = rho_new[c] - eos.density(pp[c], hh[c]);
      const double energy = e2 * std::abs(rho_new[c] * hh[c] - pp[c]);
      norm = std::max({norm, std::abs(f1[c]) / energy, std::abs(f2[c]) / rho_new[c]});
    }
    if (!std::isfinite(norm)) throw SolverError("non-finite Newton residual");
    return norm;
  };

  NewtonResult out;
  double norm = residual(p, h);
  std::vector<double> diag(n), dp(n), dh(n), p_try(n), h_try(n);
  Eigen::VectorXd rhs(n);
  while (norm > opt.tolerance) {
    if (out.iterations >= opt.max_iterations)
      throw SolverError("Newton iteration did not converge in " + std::to_string(opt.max_iterations) +
                        " iterations (residual " + std::to_string(norm) + ")");
    for (int c = 0; c < n; ++c) {
      if (is_frozen(c)) {
        diag[c] = e2;
        rhs[c] = 0.0;
        continue;
      }
      const double rp = eos.drho_dp(p[c], h[c]);
      const double rh = eos.drho_dh(p[c], h[c]);
      if (rh == 0.0) throw SolverError("singular Newton block: drho/dh = 0");
      diag[c] = e2 * (-rho_new[c] * rp / rh - 1.0);
      rhs[c] = -f1[c] - e2 * rho_new[c] * f2[c] / rh;
    }
    SparseMatrix a = op.matrix(diag, k);
    if (frozen) {
      for (int j = 0; j < a.outerSize(); ++j)
        for (SparseMatrix::InnerIterator it(a, j); it; ++it)
          if ((*frozen)[it.row()] && it.row() != it.col()) it.valueRef() = 0.0;
    }
    const Eigen::VectorXd x = solver.solve(a, rhs);
    for (int c = 0; c < n; ++c) {
      dp[c] = x[c];
      if (is_frozen(c)) {
        dh[c] = 0.0;
        continue;
      }
      dh[c] = (f2[c] - eos.drho_dp(p[c], h[c]) * dp[c]) / eos.drho_dh(p[c], h[c]);
    }
    double size = 0.0;
    for (int c = 0; c < n; ++c)
      if (!is_frozen(c)) size = std::max({size, std::abs(dp[c] / p[c]), std::abs(dh[c] / h[c])});
    if (size <= opt.tolerance) {
      for (int c = 0; c < n; ++c) {
        p[c] += dp[c];
        h[c] += dh[c];
      }
      norm = residual(p, h);
      ++out.iterations;
      break;
    }
    // Damped update: the residual must decrease, otherwise the step is halved.
    double step = 1.0;
    double trial = std::numeric_limits<double>::infinity();
    for (int halving = 0; halving < 30; ++halving, step *= 0.5) {
      bool admissible = true;
      for (int c = 0; c < n; ++c) {
        p_try[c] = p[c] + step * dp[c];
        h_try[c] = h[c] + step * dh[c];
        if (!is_frozen(c) && (!(p_try[c] > 0.0) || !(h_try[c] > 0.0))) admissible = false;
      }
      if (!admissible) continue;
      try {
        trial = residual(p_try, h_try);
      } catch (const EosDomainError&) {
        continue;
      }
      if (trial < norm) break;
    }
    if (!(trial < norm)) throw SolverError("Newton step failed to reduce the residual");
    p.swap(p_try);
    h.swap(h_try);
    norm = trial;
    ++out.iterations;
  }
  out.p = std::move(p);
  out.h = std::move(h);
  out.residual = norm;
  return out;
}

}  // namespace apflow
