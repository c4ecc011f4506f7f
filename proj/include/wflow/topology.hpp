#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <limits>
#include <numbers>
#include <queue>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "wflow/energy.hpp"
#include "wflow/errors.hpp"
#include "wflow/grid.hpp"

namespace wflow {

/// Geodesic weight F: zero on [rho1, rho2], quadratic ramps up to `plateau`
/// at u = +-1 and constant beyond.
struct WeightSpec {
  double rho1 = 0.2;
  double rho2 = 0.8;
  double plateau = 1.0;

  double operator()(double u) const {
    const double v = std::clamp(u, -1.0, 1.0);
    if (v > rho2) {
      const double s = (v - rho2) / (1.0 - rho2);
      return plateau * s * s;
    }
    if (v < rho1) {
      const double s = (rho1 - v) / (1.0 + rho1);
      return plateau * s * s;
    }
    return 0.0;
  }

  double derivative(double u) const {
    if (u >= 1.0 || u <= -1.0) return 0.0;
    if (u > rho2) return 2.0 * plateau * (u - rho2) / ((1.0 - rho2) * (1.0 - rho2));
    if (u < rho1) return -2.0 * plateau * (rho1 - u) / ((1.0 + rho1) * (1.0 + rho1));
    return 0.0;
  }
};

/// Bump phi = N ((u - rho1)(rho2 - u))_+^2, normalised to peak value 1.
struct BumpSpec {
  double rho1 = 0.2;
  double rho2 = 0.8;

  double normalization() const {
    const double half = 0.5 * (rho2 - rho1);
    return 1.0 / (half * half * half * half);
  }
  double operator()(double u) const {
    if (!(u > rho1 && u < rho2)) return 0.0;
    const double g = (u - rho1) * (rho2 - u);
    return normalization() * g * g;
  }
  double derivative(double u) const {
    if (!(u > rho1 && u < rho2)) return 0.0;
    const double g = (u - rho1) * (rho2 - u);
    return 2.0 * normalization() * g * (rho1 + rho2 - 2.0 * u);
  }
};

/// A weight and bump sharing one interface band [rho1, rho2].
struct BandPair {
  WeightSpec weight;
  BumpSpec bump;

  BandPair() = default;
  BandPair(double rho1, double rho2, double plateau = 1.0)
      : weight{rho1, rho2, plateau}, bump{rho1, rho2} {
    validate();
  }

  double rho1() const { return weight.rho1; }
  double rho2() const { return weight.rho2; }
  bool in_band(double u) const { return u >= weight.rho1 && u <= weight.rho2; }

  void validate() const {
    if (!(weight.rho1 > -1.0 && weight.rho1 < weight.rho2 && weight.rho2 < 1.0))
      throw std::invalid_argument("band limits must satisfy -1 < rho1 < rho2 < 1");
    if (!(weight.plateau > 0.0)) throw std::invalid_argument("plateau must be positive");
    if (bump.rho1 != weight.rho1 || bump.rho2 != weight.rho2)
      throw std::invalid_argument("weight and bump must share one band");
  }
};

/// FNV-1a over the raw values; ties derived data to the field it came from.
inline std::uint64_t fingerprint(const ScalarField& u) {
  std::uint64_t hash = 1469598103934665603ULL;
  for (const double v : u.values) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    for (int b = 0; b < 8; ++b) {
      hash ^= (bits >> (8 * b)) & 0xffU;
      hash *= 1099511628211ULL;
    }
  }
  return hash;
}

struct ComponentLabeling {
  Grid2D grid;
  std::vector<std::int32_t> label;  // 0 outside the band, k >= 1 component id
  int n_components = 0;
  std::vector<double> mass;  // mass[k-1] = sum of phi(u) h^2 over component k
  std::uint64_t source = 0;
};

/// 8-connected components of {inside cells with rho1 <= u <= rho2}, numbered
/// in order of their first cell in row-major order.
inline ComponentLabeling label_components(const ScalarField& u, const DomainMask& mask, const BandPair& band) {
  require_same_grid(u.grid, mask.grid());
  const Grid2D& g = u.grid;
  ComponentLabeling lab;
  lab.grid = g;
  lab.label.assign(g.size(), 0);
  lab.source = fingerprint(u);
  const double cell_area = g.h * g.h;

  std::vector<std::uint32_t> stack;
  for (const std::uint32_t seed : mask.cells()) {
    if (lab.label[seed] != 0 || !band.in_band(u[seed])) continue;
    const int id = ++lab.n_components;
    double mass = 0.0;
    lab.label[seed] = id;
    stack.push_back(seed);
    while (!stack.empty()) {
      const std::uint32_t c = stack.back();
      stack.pop_back();
      mass += band.bump(u[c]) * cell_area;
      const int ci = static_cast<int>(c % g.nx), cj = static_cast<int>(c / g.nx);
      for (int dj = -1; dj <= 1; ++dj)
        for (int di = -1; di <= 1; ++di) {
          if (di == 0 && dj == 0) continue;
          // Inside cells keep a two-cell collar, so neighbours are in range.
          const auto n = static_cast<std::uint32_t>(g.index(ci + di, cj + dj));
          if (lab.label[n] == 0 && mask.inside(n) && band.in_band(u[n])) {
            lab.label[n] = id;
            stack.push_back(n);
          }
        }
    }
    lab.mass.push_back(mass);
  }
  return lab;
}

/// Weight F(u) at every cell, including the exterior.
inline ScalarField weight_field(const ScalarField& u, const WeightSpec& spec) {
  ScalarField f(u.grid, 0.0);
  for (std::size_t k = 0; k < u.size(); ++k) f[k] = spec(u[k]);
  return f;
}

struct GeodesicField {
  int component = 0;
  std::vector<double> d;
  std::vector<std::int32_t> predecessor;  // -1 on sources
  std::vector<std::uint32_t> order;       // settle order, sources first
  std::uint64_t source = 0;
};

namespace detail {
struct Neighbor {
  int di, dj;
  double length;  // in units of h
};
inline constexpr Neighbor kNeighbors[8] = {
    {1, 0, 1.0},  {-1, 0, 1.0},  {0, 1, 1.0},  {0, -1, 1.0},
    {1, 1, std::numbers::sqrt2}, {-1, 1, std::numbers::sqrt2}, {1, -1, std::numbers::sqrt2}, {-1, -1, std::numbers::sqrt2},
};
}  // namespace detail

/// Weighted graph distance from component k over the 8-neighbour grid graph.
/// An edge a-b costs (F_a + F_b)/2 times the centre distance. Ties between
/// equal keys settle the lower cell index first.
inline GeodesicField geodesic_from_component(int k, const ComponentLabeling& lab, const ScalarField& weights) {
  if (k < 1 || k > lab.n_components)
    throw std::out_of_range("component " + std::to_string(k) + " out of range 1.." +
                            std::to_string(lab.n_components));
  require_same_grid(lab.grid, weights.grid);
  const Grid2D& g = lab.grid;
  const std::size_t n = g.size();
  GeodesicField out;
  out.component = k;
  out.source = lab.source;
  out.d.assign(n, std::numeric_limits<double>::infinity());
  out.predecessor.assign(n, -1);
  out.order.reserve(n);

  using Key = std::pair<double, std::uint32_t>;
  std::priority_queue<Key, std::vector<Key>, std::greater<>> heap;
  for (std::size_t c = 0; c < n; ++c)
    if (lab.label[c] == k) {
      out.d[c] = 0.0;
      heap.emplace(0.0, static_cast<std::uint32_t>(c));
    }

  std::vector<std::uint8_t> done(n, 0);
  while (!heap.empty()) {
    const auto [dist, c] = heap.top();
    heap.pop();
    if (done[c]) continue;
    done[c] = 1;
    out.order.push_back(c);
    const int ci = static_cast<int>(c % g.nx), cj = static_cast<int>(c / g.nx);
    for (const auto& nb : detail::kNeighbors) {
      const int ni = ci + nb.di, nj = cj + nb.dj;
      if (ni < 0 || nj < 0 || ni >= g.nx || nj >= g.ny) continue;
      const auto m = static_cast<std::uint32_t>(g.index(ni, nj));
      if (done[m]) continue;
      const double cand = dist + 0.5 * (weights[c] + weights[m]) * nb.length * g.h;
      if (cand < out.d[m]) {
        out.d[m] = cand;
        out.predecessor[m] = static_cast<std::int32_t>(c);
        heap.emplace(cand, m);
      }
    }
  }
  return out;
}

inline std::vector<GeodesicField> all_geodesics(const ComponentLabeling& lab, const ScalarField& weights) {
  std::vector<GeodesicField> out;
  out.reserve(static_cast<std::size_t>(lab.n_components));
  for (int k = 1; k <= lab.n_components; ++k) out.push_back(geodesic_from_component(k, lab, weights));
  return out;
}

namespace detail {
inline void check_consistent(const ScalarField& u, const ComponentLabeling& lab,
                             std::span<const GeodesicField> geo) {
  const std::uint64_t fp = fingerprint(u);
  if (lab.source != fp) throw ConsistencyError("component labeling was built for a different field");
  if (geo.size() != static_cast<std::size_t>(lab.n_components))
    throw ConsistencyError("expected one geodesic field per component");
  for (std::size_t k = 0; k < geo.size(); ++k)
    if (geo[k].source != fp || geo[k].component != static_cast<int>(k) + 1)
      throw ConsistencyError("geodesic field was built for a different field or component");
}
}  // namespace detail

/// Connectedness penalty eps^-2 sum_k m_k sum_y phi(u_y) d_k(y) h^2. Since F
/// vanishes on each component, this equals the full double integral of
/// phi(u(x)) phi(u(y)) d(x, y).
inline double c_eps(const ScalarField& u, const DomainMask& mask, const ModelParams& p, const BandPair& band,
                    const ComponentLabeling& lab, std::span<const GeodesicField> geo) {
  detail::check_consistent(u, lab, geo);
  const double cell_area = u.grid.h * u.grid.h;
  double total = 0.0;
  for (std::size_t k = 0; k < geo.size(); ++k) {
    double sum = 0.0;
    for (const std::uint32_t y : mask.cells()) {
      const double phi = band.bump(u[y]);
      if (phi > 0.0) sum += phi * geo[k].d[y];
    }
    total += lab.mass[k] * sum * cell_area;
  }
  return total / (p.eps * p.eps);
}

enum class SubgradientMode { frozen, full };

/// L2 (sub)gradient of c_eps. `frozen` differentiates the phi factors with the
/// distance fields held fixed; `full` adds the variation of each distance
/// through F(u) along the shortest-path trees.
inline ScalarField c_eps_subgradient(const ScalarField& u, const DomainMask& mask, const ModelParams& p,
                                     const BandPair& band, const ComponentLabeling& lab,
                                     std::span<const GeodesicField> geo,
                                     SubgradientMode mode = SubgradientMode::full) {
  detail::check_consistent(u, lab, geo);
  const Grid2D& gr = u.grid;
  const double cell_area = gr.h * gr.h;
  const double inv_eps2 = 1.0 / (p.eps * p.eps);
  ScalarField grad(gr, 0.0);
  if (geo.empty()) return grad;

  // source_sum[k] = sum_y phi(u_y) d_k(y) h^2
  std::vector<double> source_sum(geo.size(), 0.0);
  for (std::size_t k = 0; k < geo.size(); ++k) {
    double s = 0.0;
    for (const std::uint32_t y : mask.cells()) {
      const double phi = band.bump(u[y]);
      if (phi > 0.0) s += phi * geo[k].d[y];
    }
    source_sum[k] = s * cell_area;
  }

  for (const std::uint32_t z : mask.cells()) {
    const double dphi = band.bump.derivative(u[z]);
    if (dphi == 0.0) continue;
    double target = 0.0;
    for (std::size_t k = 0; k < geo.size(); ++k) target += lab.mass[k] * geo[k].d[z];
    const int own = lab.label[z];
    const double source = own > 0 ? source_sum[static_cast<std::size_t>(own - 1)] : 0.0;
    grad[z] = inv_eps2 * dphi * (target + source);
  }

  if (mode == SubgradientMode::full) {
    // Push each target's weight m_k phi(u_y) h^2 up the shortest-path tree;
    // every tree edge then carries the total weight of the paths using it.
    std::vector<double> carried(gr.size());
    ScalarField path(gr, 0.0);
    for (std::size_t k = 0; k < geo.size(); ++k) {
      std::fill(carried.begin(), carried.end(), 0.0);
      for (const std::uint32_t y : mask.cells()) {
        const double phi = band.bump(u[y]);
        if (phi > 0.0 && lab.label[y] != static_cast<int>(k) + 1) carried[y] = lab.mass[k] * phi * cell_area;
      }
      const auto& order = geo[k].order;
      for (auto it = order.rbegin(); it != order.rend(); ++it) {
        const std::uint32_t c = *it;
        const std::int32_t parent = geo[k].predecessor[c];
        if (parent < 0 || carried[c] == 0.0) continue;
        const auto pc = static_cast<std::uint32_t>(parent);
        const bool diagonal = (c % gr.nx != pc % gr.nx) && (c / gr.nx != pc / gr.nx);
        const double half_len = 0.5 * gr.h * (diagonal ? std::numbers::sqrt2 : 1.0);
        path[c] += carried[c] * half_len;
        path[pc] += carried[c] * half_len;
        carried[pc] += carried[c];
      }
    }
    for (const std::uint32_t z : mask.cells())
      grad[z] += inv_eps2 * band.weight.derivative(u[z]) * path[z] / cell_area;
  }
  return grad;
}

/// Labeling plus per-component distances of one band for one field.
struct BandAnalysis {
  ComponentLabeling labeling;
  std::vector<GeodesicField> geodesics;
};

/// Distances are only needed with two or more components; a connected band
/// has zero penalty and zero subgradient.
inline BandAnalysis analyze_band(const ScalarField& u, const DomainMask& mask, const BandPair& band) {
  BandAnalysis a{label_components(u, mask, band), {}};
  if (a.labeling.n_components >= 2) a.geodesics = all_geodesics(a.labeling, weight_field(u, band.weight));
  return a;
}

inline double c_eps(const ScalarField& u, const DomainMask& mask, const ModelParams& p, const BandPair& band,
                    const BandAnalysis& a) {
  if (a.labeling.n_components < 2) return 0.0;
  return c_eps(u, mask, p, band, a.labeling, a.geodesics);
}

inline ScalarField c_eps_subgradient(const ScalarField& u, const DomainMask& mask, const ModelParams& p,
                                     const BandPair& band, const BandAnalysis& a,
                                     SubgradientMode mode = SubgradientMode::full) {
  if (a.labeling.n_components < 2) return ScalarField(u.grid, 0.0);
  return c_eps_subgradient(u, mask, p, band, a.labeling, a.geodesics, mode);
}

}  // namespace wflow
