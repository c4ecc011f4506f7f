#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "wflow/errors.hpp"

namespace wflow {

/// Uniform cell-centred grid. Cell (i, j) has its centre at
/// origin + ((i + 1/2) h, (j + 1/2) h); storage is row-major, i fastest.
struct Grid2D {
  int nx = 0;
  int ny = 0;
  double h = 0.0;
  double origin_x = 0.0;
  double origin_y = 0.0;

  Grid2D() = default;
  Grid2D(int nx_, int ny_, double h_, double ox = 0.0, double oy = 0.0)
      : nx(nx_), ny(ny_), h(h_), origin_x(ox), origin_y(oy) {
    if (nx < 3 || ny < 3) throw ShapeError("grid needs at least 3 cells per axis");
    if (!(h > 0.0) || !std::isfinite(h)) throw ShapeError("grid spacing must be positive");
  }

  /// Square grid centred on (cx, cy) whose cells cover the disc of radius r
  /// plus a two-cell collar on every side.
  static Grid2D covering_disc(double r, double h, double cx = 0.0, double cy = 0.0) {
    const int n = static_cast<int>(std::ceil(2.0 * r / h - 1e-9)) + 4;
    return Grid2D(n, n, h, cx - 0.5 * n * h, cy - 0.5 * n * h);
  }

  std::size_t size() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(nx) + static_cast<std::size_t>(i);
  }
  double x(int i) const { return origin_x + (i + 0.5) * h; }
  double y(int j) const { return origin_y + (j + 0.5) * h; }
  std::pair<double, double> center(int i, int j) const { return {x(i), y(j)}; }

  friend bool operator==(const Grid2D&, const Grid2D&) = default;
};

/// Cells whose centre lies in the computational domain. Every inside cell
/// keeps two layers of cells around it inside the array; the region outside
/// the mask carries the exterior phase u = -1.
class DomainMask {
 public:
  DomainMask() = default;
  DomainMask(Grid2D grid, std::vector<std::uint8_t> inside)
      : grid_(grid), inside_(std::move(inside)) {
    if (inside_.size() != grid_.size()) throw ShapeError("mask size does not match grid");
    for (int j = 0; j < grid_.ny; ++j) {
      for (int i = 0; i < grid_.nx; ++i) {
        if (!inside_[grid_.index(i, j)]) continue;
        if (i < 2 || j < 2 || i > grid_.nx - 3 || j > grid_.ny - 3)
          throw DomainError("inside cell (" + std::to_string(i) + "," + std::to_string(j) +
                            ") lacks a two-cell exterior collar");
        cells_.push_back(static_cast<std::uint32_t>(grid_.index(i, j)));
      }
    }
  }

  static DomainMask disc(const Grid2D& g, double radius, double cx = 0.0, double cy = 0.0) {
    std::vector<std::uint8_t> in(g.size(), 0);
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        const double dx = g.x(i) - cx, dy = g.y(j) - cy;
        in[g.index(i, j)] = dx * dx + dy * dy < radius * radius;
      }
    return DomainMask(g, std::move(in));
  }

  static DomainMask rectangle(const Grid2D& g, double x0, double x1, double y0, double y1) {
    std::vector<std::uint8_t> in(g.size(), 0);
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i)
        in[g.index(i, j)] = g.x(i) > x0 && g.x(i) < x1 && g.y(j) > y0 && g.y(j) < y1;
    return DomainMask(g, std::move(in));
  }

  /// Everything except the two-cell collar along the array border.
  static DomainMask interior(const Grid2D& g) {
    std::vector<std::uint8_t> in(g.size(), 0);
    for (int j = 2; j < g.ny - 2; ++j)
      for (int i = 2; i < g.nx - 2; ++i) in[g.index(i, j)] = 1;
    return DomainMask(g, std::move(in));
  }

  const Grid2D& grid() const { return grid_; }
  bool inside(std::size_t k) const { return inside_[k] != 0; }
  bool inside(int i, int j) const { return inside_[grid_.index(i, j)] != 0; }
  /// Linear indices of inside cells in row-major order.
  std::span<const std::uint32_t> cells() const { return cells_; }
  std::span<const std::uint8_t> flags() const { return inside_; }

 private:
  Grid2D grid_;
  std::vector<std::uint8_t> inside_;
  std::vector<std::uint32_t> cells_;
};

struct ScalarField {
  Grid2D grid;
  std::vector<double> values;

  ScalarField() = default;
  explicit ScalarField(const Grid2D& g, double fill = 0.0) : grid(g), values(g.size(), fill) {}
  ScalarField(const Grid2D& g, std::vector<double> v) : grid(g), values(std::move(v)) {
    if (values.size() != grid.size()) throw ShapeError("field size does not match grid");
  }

  double& operator()(int i, int j) { return values[grid.index(i, j)]; }
  double operator()(int i, int j) const { return values[grid.index(i, j)]; }
  double& operator[](std::size_t k) { return values[k]; }
  double operator[](std::size_t k) const { return values[k]; }
  std::size_t size() const { return values.size(); }
};

inline void require_same_grid(const Grid2D& a, const Grid2D& b) {
  if (!(a == b)) throw ShapeError("grid mismatch between field and mask");
}

/// Resets every outside cell to the exterior phase -1.
inline void clamp_exterior(ScalarField& u, const DomainMask& mask) {
  require_same_grid(u.grid, mask.grid());
  for (std::size_t k = 0; k < u.size(); ++k)
    if (!mask.inside(k)) u[k] = -1.0;
}

/// 5-point Laplacian of `in` written to `out` on inside cells; outside cells
/// of `out` are left untouched. Neighbours outside the mask read `exterior`.
inline void laplacian_into(std::span<const double> in, std::span<double> out, const DomainMask& mask,
                           double exterior) {
  const auto nx = static_cast<std::size_t>(mask.grid().nx);
  const double inv_h2 = 1.0 / (mask.grid().h * mask.grid().h);
  const auto flag = mask.flags();
  const double* v = in.data();
  for (const std::uint32_t c : mask.cells()) {
    const double e = flag[c + 1] ? v[c + 1] : exterior;
    const double w = flag[c - 1] ? v[c - 1] : exterior;
    const double n = flag[c + nx] ? v[c + nx] : exterior;
    const double s = flag[c - nx] ? v[c - nx] : exterior;
    out[c] = (e + w + n + s - 4.0 * v[c]) * inv_h2;
  }
}

/// 5-point Laplacian on inside cells, 0 outside. Neighbours outside the mask
/// read `exterior` (-1 for a phase field, 0 when the input is itself a
/// Laplacian or any quantity that vanishes outside).
inline ScalarField laplacian(const ScalarField& u, const DomainMask& mask, double exterior = -1.0) {
  require_same_grid(u.grid, mask.grid());
  ScalarField out(u.grid, 0.0);
  laplacian_into(u.values, out.values, mask, exterior);
  return out;
}

/// |grad u|^2 as the mean of squared forward and backward differences per
/// axis. A difference across the domain boundary belongs to this cell alone
/// and counts in full, so the cell sum is exactly the 5-point Dirichlet form
/// and the discrete first variation of the gradient energy is the 5-point
/// Laplacian used everywhere else.
inline ScalarField grad_norm_sq(const ScalarField& u, const DomainMask& mask, double exterior = -1.0) {
  require_same_grid(u.grid, mask.grid());
  const Grid2D& g = u.grid;
  const auto nx = static_cast<std::size_t>(g.nx);
  const double inv_h2 = 1.0 / (g.h * g.h);
  const auto in = mask.flags();
  const double* v = u.values.data();
  ScalarField out(g, 0.0);
  for (const std::uint32_t c : mask.cells()) {
    const double uc = v[c];
    double sum = 0.0;
    const std::size_t k = c;
    for (const std::size_t nb : {k + 1, k - 1, k + nx, k - nx}) {
      const double d = (in[nb] ? v[nb] : exterior) - uc;
      sum += (in[nb] ? 0.5 : 1.0) * d * d;
    }
    out[c] = sum * inv_h2;
  }
  return out;
}

/// Midpoint rule over inside cells.
inline double integrate(const ScalarField& f, const DomainMask& mask) {
  require_same_grid(f.grid, mask.grid());
  double sum = 0.0;
  for (const std::uint32_t c : mask.cells()) sum += f[c];
  return sum * f.grid.h * f.grid.h;
}

/// L2 inner product over inside cells, including the cell area.
inline double inner(const ScalarField& a, const ScalarField& b, const DomainMask& mask) {
  require_same_grid(a.grid, mask.grid());
  require_same_grid(b.grid, mask.grid());
  double sum = 0.0;
  for (const std::uint32_t c : mask.cells()) sum += a[c] * b[c];
  return sum * a.grid.h * a.grid.h;
}

}  // namespace wflow
