#pragma once

// CSV and legacy VTK snapshots. Numbers are written with 17 significant
// digits, so CSV files read back to the same doubles.

#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "apflow/diagnostics.hpp"

namespace apflow {

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// 1D: x,rho,u,p,h. 2D: x,y,rho,u,v,p,h,fluid.
inline void write_csv(std::ostream& os, const StructuredGrid& grid, const std::vector<CellState>& cells) {
  os << std::setprecision(17);
  const bool two = grid.dimension() == 2;
  os << (two ? "x,y,rho,u,v,p,h,fluid\n" : "x,rho,u,p,h\n");
  for (int c = 0; c < grid.num_cells(); ++c) {
    const Vec2 x = grid.center(c);
    const CellState& s = cells[c];
    os << x[0] << ',';
    if (two) os << x[1] << ',';
    os << s.cons.rho << ',' << s.prim.u[0] << ',';
    if (two) os << s.prim.u[1] << ',';
    os << s.prim.p << ',' << s.prim.h;
    if (two) os << ',' << (grid.fluid(c) ? 1 : 0);
    os << '\n';
  }
}

inline void write_csv(const std::string& path, const StructuredGrid& grid, const std::vector<CellState>& cells) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write '" + path + "'");
  write_csv(os, grid, cells);
  if (!os) throw IoError("write failed for '" + path + "'");
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;

  const std::vector<double>& column(const std::string& name) const {
    for (std::size_t k = 0; k < header.size(); ++k)
      if (header[k] == name) return columns[k];
    throw IoError("no column '" + name + "'");
  }
  std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
};

inline CsvTable read_csv(std::istream& is) {
  CsvTable t;
  std::string line;
  if (!std::getline(is, line)) throw IoError("empty CSV");
  std::stringstream hs(line);
  for (std::string cell; std::getline(hs, cell, ',');) t.header.push_back(cell);
  t.columns.resize(t.header.size());
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::size_t k = 0;
    for (std::string cell; std::getline(ls, cell, ','); ++k) {
      if (k >= t.columns.size()) throw IoError("CSV row wider than header");
      t.columns[k].push_back(std::stod(cell));
    }
    if (k != t.columns.size()) throw IoError("CSV row narrower than header");
  }
  return t;
}

inline CsvTable read_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read '" + path + "'");
  return read_csv(is);
}

/// Legacy VTK structured points with one point per cell center (2D grids).
inline void write_vtk(std::ostream& os, const StructuredGrid& grid, const std::vector<CellState>& cells, double eps,
                      const std::string& title = "apflow") {
  if (grid.dimension() != 2) throw IoError("VTK output is for 2D grids");
  os << std::setprecision(17);
  const int n = grid.num_cells();
  const double dx = grid.dx();
  os << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET STRUCTURED_POINTS\n";
  os << "DIMENSIONS " << grid.nx() << ' ' << grid.ny() << " 1\n";
  os << "ORIGIN " << grid.origin()[0] + 0.5 * dx << ' ' << grid.origin()[1] + 0.5 * dx << " 0\n";
  os << "SPACING " << dx << ' ' << dx << " 1\n";
  os << "POINT_DATA " << n << '\n';
  auto scalar = [&](const char* name, auto&& f) {
    os << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (int c = 0; c < n; ++c) os << f(c) << '\n';
  };
  const std::vector<double> mach = local_mach(cells, eps);
  scalar("rho", [&](int c) { return cells[c].cons.rho; });
  scalar("p", [&](int c) { return cells[c].prim.p; });
  scalar("h", [&](int c) { return cells[c].prim.h; });
  scalar("mach", [&](int c) { return mach[c]; });
  scalar("fluid", [&](int c) { return grid.fluid(c) ? 1.0 : 0.0; });
  os << "VECTORS velocity double\n";
  for (int c = 0; c < n; ++c) os << cells[c].prim.u[0] << ' ' << cells[c].prim.u[1] << " 0\n";
}

inline void write_vtk(const std::string& path, const StructuredGrid& grid, const std::vector<CellState>& cells,
                      double eps) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write '" + path + "'");
  write_vtk(os, grid, cells, eps);
  if (!os) throw IoError("write failed for '" + path + "'");
}

}  // namespace apflow
