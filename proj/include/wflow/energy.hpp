#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "wflow/errors.hpp"
#include "wflow/grid.hpp"

namespace wflow {

// W(u) = (u^2 - 1)^2 / 4 and its first two derivatives.
constexpr double double_well(double u) {
  const double a = u * u - 1.0;
  return 0.25 * a * a;
}
constexpr double double_well_d1(double u) { return u * u * u - u; }
constexpr double double_well_d2(double u) { return 3.0 * u * u - 1.0; }

/// Normalisation of the diffuse perimeter, integral of sqrt(2 W) over [-1, 1].
inline const double kC0 = 2.0 * std::sqrt(2.0) / 3.0;

struct ModelParams {
  double eps = 1.5e-2;
  double sigma = 2.0;
  double kappa = 1.0;
  double target_area = 1.0;  // S; a length in two dimensions
  double c0 = kC0;

  ModelParams() = default;
  ModelParams(double eps_, double sigma_, double kappa_, double target)
      : eps(eps_), sigma(sigma_), kappa(kappa_), target_area(target) {
    validate();
  }

  void validate() const {
    std::ostringstream err;
    if (!(eps > 0.0)) err << "eps must be positive; ";
    if (!(sigma > 0.0 && sigma < 4.0)) err << "sigma must lie in (0,4); ";
    if (!(kappa > 0.0)) err << "kappa must be positive; ";
    if (!(target_area > 0.0)) err << "target_area must be positive; ";
    // Simpson's rule is exact here: sqrt(2 W(s)) = (1 - s^2)/sqrt(2).
    const auto g = [](double s) { return std::sqrt(2.0 * double_well(s)); };
    const double simpson = (2.0 / 6.0) * (g(-1.0) + 4.0 * g(0.0) + g(1.0));
    if (std::abs(simpson - c0) > 1e-14) err << "c0 must equal 2*sqrt(2)/3; ";
    if (!err.str().empty()) throw std::invalid_argument(err.str());
  }
};

/// Warns when the interface is resolved by fewer than two cells.
inline bool check_resolution(const ModelParams& p, const Grid2D& g) {
  if (p.eps < 2.0 * g.h) {
    warn("eps = " + std::to_string(p.eps) + " is below 2h = " + std::to_string(2.0 * g.h) +
         "; the transition layer is under-resolved");
    return false;
  }
  return true;
}

/// Chemical potential v = -eps Lap u + W'(u)/eps (diffuse mean curvature).
inline ScalarField chemical_potential(const ScalarField& u, const DomainMask& mask, const ModelParams& p) {
  ScalarField v = laplacian(u, mask);
  const double inv_eps = 1.0 / p.eps;
  for (const std::uint32_t c : mask.cells()) v[c] = -p.eps * v[c] + double_well_d1(u[c]) * inv_eps;
  return v;
}

inline ScalarField s_eps_density(const ScalarField& u, const DomainMask& mask, const ModelParams& p) {
  ScalarField d = grad_norm_sq(u, mask);
  for (const std::uint32_t c : mask.cells())
    d[c] = (0.5 * p.eps * d[c] + double_well(u[c]) / p.eps) / p.c0;
  return d;
}

/// Diffuse perimeter (Modica-Mortola functional).
inline double s_eps(const ScalarField& u, const DomainMask& mask, const ModelParams& p) {
  return integrate(s_eps_density(u, mask, p), mask);
}

inline double w_eps_from_potential(const ScalarField& v, const DomainMask& mask, const ModelParams& p) {
  double sum = 0.0;
  for (const std::uint32_t c : mask.cells()) sum += v[c] * v[c];
  return sum * v.grid.h * v.grid.h / (p.c0 * p.eps);
}

/// Diffuse Willmore energy.
inline double w_eps(const ScalarField& u, const DomainMask& mask, const ModelParams& p) {
  return w_eps_from_potential(chemical_potential(u, mask, p), mask, p);
}

struct Discrepancy {
  double signed_value = 0.0;
  double positive = 0.0;
  double absolute = 0.0;
};

/// Integrals of eps/2 |grad u|^2 - W(u)/eps, its positive part and its modulus,
/// each divided by c0.
inline Discrepancy discrepancy(const ScalarField& u, const DomainMask& mask, const ModelParams& p) {
  const ScalarField g2 = grad_norm_sq(u, mask);
  Discrepancy d;
  for (const std::uint32_t c : mask.cells()) {
    const double xi = 0.5 * p.eps * g2[c] - double_well(u[c]) / p.eps;
    d.signed_value += xi;
    d.positive += std::max(xi, 0.0);
    d.absolute += std::abs(xi);
  }
  const double w = u.grid.h * u.grid.h / p.c0;
  d.signed_value *= w;
  d.positive *= w;
  d.absolute *= w;
  return d;
}

/// L2 gradient of s_eps: v / c0.
inline ScalarField grad_s_eps(const ScalarField& u, const DomainMask& mask, const ModelParams& p) {
  ScalarField g = chemical_potential(u, mask, p);
  for (const std::uint32_t c : mask.cells()) g[c] /= p.c0;
  return g;
}

/// L2 gradient of w_eps given the chemical potential v of u.
inline ScalarField grad_w_eps_from_potential(const ScalarField& u, const ScalarField& v,
                                             const DomainMask& mask, const ModelParams& p) {
  // With w = eps Lap u - W'(u)/eps = -v the variation is
  // 2/(c0 eps) (eps Lap w - W''(u) w / eps); w vanishes outside the mask.
  ScalarField lap_v = laplacian(v, mask, 0.0);
  const double scale = 2.0 / (p.c0 * p.eps);
  for (const std::uint32_t c : mask.cells())
    lap_v[c] = scale * (-p.eps * lap_v[c] + double_well_d2(u[c]) * v[c] / p.eps);
  return lap_v;
}

inline ScalarField grad_w_eps(const ScalarField& u, const DomainMask& mask, const ModelParams& p) {
  return grad_w_eps_from_potential(u, chemical_potential(u, mask, p), mask, p);
}

struct AreaPenalty {
  double value = 0.0;
  ScalarField gradient;
};

/// eps^-sigma (s_eps - S)^2 and its L2 gradient.
inline AreaPenalty area_penalty_from(double s, const ScalarField& v, const DomainMask& mask,
                                     const ModelParams& p) {
  const double scale = std::pow(p.eps, -p.sigma);
  const double excess = s - p.target_area;
  AreaPenalty out{scale * excess * excess, ScalarField(v.grid, 0.0)};
  const double coef = 2.0 * scale * excess / p.c0;
  for (const std::uint32_t c : mask.cells()) out.gradient[c] = coef * v[c];
  return out;
}

inline AreaPenalty area_penalty(const ScalarField& u, const DomainMask& mask, const ModelParams& p) {
  return area_penalty_from(s_eps(u, mask, p), chemical_potential(u, mask, p), mask, p);
}

/// Largest |u| over inside cells; warns past 1.5, where bounded-energy fields
/// should never go.
inline double check_bounded(const ScalarField& u, const DomainMask& mask) {
  double m = 0.0;
  for (const std::uint32_t c : mask.cells()) m = std::max(m, std::abs(u[c]));
  if (m > 1.5) warn("phase field reaches |u| = " + std::to_string(m) + " > 1.5");
  return m;
}

}  // namespace wflow
