#pragma once

#include <cmath>
#include <functional>
#include <queue>
#include <random>
#include <string>
#include <vector>

#include "wflow/grid.hpp"
#include "wflow/profile.hpp"

namespace wflow::testing {

// Collects warnings for the lifetime of the object.
struct WarningCapture {
  std::vector<std::string> messages;
  WarningHandler saved;
  WarningCapture() : saved(warning_handler()) {
    warning_handler() = [this](std::string_view m) { messages.emplace_back(m); };
  }
  ~WarningCapture() { warning_handler() = saved; }
};

// Cells at graph distance >= depth from every outside cell (4-neighbour steps).
inline std::vector<std::uint32_t> cells_at_depth(const DomainMask& m, int depth) {
  const Grid2D& g = m.grid();
  std::vector<int> dist(g.size(), -1);
  std::queue<std::size_t> q;
  for (std::size_t k = 0; k < g.size(); ++k)
    if (!m.inside(k)) {
      dist[k] = 0;
      q.push(k);
    }
  while (!q.empty()) {
    const std::size_t k = q.front();
    q.pop();
    const int i = static_cast<int>(k % g.nx), j = static_cast<int>(k / g.nx);
    const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
    for (int n = 0; n < 4; ++n) {
      const int a = i + di[n], b = j + dj[n];
      if (a < 0 || b < 0 || a >= g.nx || b >= g.ny) continue;
      const std::size_t kk = g.index(a, b);
      if (dist[kk] >= 0) continue;
      dist[kk] = dist[k] + 1;
      q.push(kk);
    }
  }
  std::vector<std::uint32_t> out;
  for (auto c : m.cells())
    if (dist[c] >= depth) out.push_back(c);
  return out;
}

// Smooth random field: a few random Fourier modes scaled into [-amp, amp],
// -1 outside the mask.
inline ScalarField smooth_random_field(const DomainMask& m, std::mt19937& rng, double amp = 1.2) {
  const Grid2D& g = m.grid();
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  struct Mode {
    double a, kx, ky, ph;
  };
  std::vector<Mode> modes;
  for (int n = 0; n < 5; ++n) modes.push_back({U(rng), 3.0 * U(rng), 3.0 * U(rng), 3.0 * U(rng)});
  ScalarField u(g, -1.0);
  const double lx = g.nx * g.h, ly = g.ny * g.h;
  std::vector<double> raw(g.size(), 0.0);
  double peak = 0.0;
  for (auto c : m.cells()) {
    const int i = static_cast<int>(c % g.nx), j = static_cast<int>(c / g.nx);
    const double x = (g.x(i) - g.origin_x) / lx, y = (g.y(j) - g.origin_y) / ly;
    double s = 0.0;
    for (const Mode& md : modes) s += md.a * std::sin(2.0 * M_PI * (md.kx * x + md.ky * y) + md.ph);
    raw[c] = s;
    peak = std::max(peak, std::abs(s));
  }
  for (auto c : m.cells()) u[c] = amp * raw[c] / peak;
  return u;
}

// Random perturbation supported on cells at depth >= 1 (strictly inside).
inline ScalarField random_direction(const DomainMask& m, std::mt19937& rng, int depth = 1) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  ScalarField d(m.grid(), 0.0);
  for (auto c : cells_at_depth(m, depth)) d[c] = U(rng);
  return d;
}

inline ScalarField axpy(const ScalarField& u, double t, const ScalarField& d) {
  ScalarField out = u;
  for (std::size_t k = 0; k < out.size(); ++k) out[k] += t * d[k];
  return out;
}

// Central difference (f(u + t d) - f(u - t d)) / 2t.
inline double directional_fd(const std::function<double(const ScalarField&)>& f, const ScalarField& u,
                             const ScalarField& d, double t) {
  return (f(axpy(u, t, d)) - f(axpy(u, -t, d))) / (2.0 * t);
}

// Disc domain of radius R on a grid of spacing h, centred at the origin.
struct DiscSetup {
  Grid2D grid;
  DomainMask mask;
  DiscSetup(double R, double h) : grid(Grid2D::covering_disc(R, h)), mask(DomainMask::disc(grid, R)) {}
};

}  // namespace wflow::testing
