#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <type_traits>
#include <variant>

#include "wflow/energy.hpp"
#include "wflow/errors.hpp"
#include "wflow/grid.hpp"

namespace wflow {

/// q(t) = tanh(t / sqrt 2), the optimal one-dimensional transition of the
/// double well, with q' = (1 - q^2)/sqrt 2 and q'' = -sqrt 2 q q'.
inline double optimal_profile(double t) { return std::tanh(t / std::numbers::sqrt2); }
inline double optimal_profile_d1(double t) {
  const double q = optimal_profile(t);
  return (1.0 - q * q) / std::numbers::sqrt2;
}
inline double optimal_profile_d2(double t) {
  const double q = optimal_profile(t);
  return -std::numbers::sqrt2 * q * (1.0 - q * q) / std::numbers::sqrt2;
}

/// Odd, monotone profile equal to q on |t| <= delta/(3 eps) and to +-1 for
/// |t| >= delta/(2 eps). In between a quintic Hermite blend matches value,
/// slope and curvature of q at the inner knot and (1, 0, 0) at the outer one.
class ClippedProfile {
 public:
  ClippedProfile(double eps, double delta) {
    if (!(eps > 0.0) || !(delta > 0.0)) throw std::invalid_argument("eps and delta must be positive");
    inner_ = delta / (3.0 * eps);
    outer_ = delta / (2.0 * eps);
    len_ = outer_ - inner_;
    const double p0 = optimal_profile(inner_);
    const double d0 = optimal_profile_d1(inner_) * len_;
    const double dd0 = optimal_profile_d2(inner_) * len_ * len_;
    // Quintic Hermite basis in s = (t - inner)/len with end data (1, 0, 0).
    c_ = {p0,
          d0,
          0.5 * dd0,
          -10.0 * p0 - 6.0 * d0 - 1.5 * dd0 + 10.0,
          15.0 * p0 + 8.0 * d0 + 1.5 * dd0 - 15.0,
          -6.0 * p0 - 3.0 * d0 - 0.5 * dd0 + 6.0};
    monotone_ = true;
    constexpr int kSamples = 4096;
    for (int k = 0; k < kSamples; ++k) {
      const double s = (k + 0.5) / kSamples;
      if (!(blend_d1(s) > 0.0)) {
        monotone_ = false;
        break;
      }
    }
    if (!monotone_)
      warn("clipped profile blend is not monotone for delta/eps = " + std::to_string(delta / eps));
  }

  double operator()(double t) const {
    const double a = std::abs(t);
    double v;
    if (a <= inner_)
      v = optimal_profile(a);
    else if (a >= outer_)
      v = 1.0;
    else
      v = blend((a - inner_) / len_);
    return t < 0.0 ? -v : v;
  }

  double derivative(double t) const {
    const double a = std::abs(t);
    if (a <= inner_) return optimal_profile_d1(a);
    if (a >= outer_) return 0.0;
    return blend_d1((a - inner_) / len_) / len_;
  }

  double inner_knot() const { return inner_; }
  double outer_knot() const { return outer_; }
  bool monotone() const { return monotone_; }

 private:
  double blend(double s) const {
    return c_[0] + s * (c_[1] + s * (c_[2] + s * (c_[3] + s * (c_[4] + s * c_[5]))));
  }
  double blend_d1(double s) const {
    return c_[1] + s * (2.0 * c_[2] + s * (3.0 * c_[3] + s * (4.0 * c_[4] + s * 5.0 * c_[5])));
  }

  double inner_ = 0.0, outer_ = 0.0, len_ = 0.0;
  std::array<double, 6> c_{};
  bool monotone_ = true;
};

inline double clipped_profile(double t, double eps, double delta) { return ClippedProfile(eps, delta)(t); }

struct Circle {
  double cx = 0.0, cy = 0.0, r = 0.5;
};
struct TwoCircles {
  double c1x = -0.25, c1y = 0.0, r1 = 0.15;
  double c2x = 0.25, c2y = 0.0, r2 = 0.15;
};
/// Band {|n.x - offset| < width/2}; extends across the whole domain, so it
/// is only usable through sample_recovery.
struct Stripe {
  double nx = 0.0, ny = 1.0, offset = 0.0, width = 0.5;
};
/// Two discs joined by a straight neck of half-width neck along the segment
/// between their centres.
struct Dumbbell {
  double c1x = -0.35, c1y = 0.0, r1 = 0.2;
  double c2x = 0.35, c2y = 0.0, r2 = 0.2;
  double neck = 0.05;
};

using ShapeVariant = std::variant<Circle, TwoCircles, Stripe, Dumbbell>;

class Shape {
 public:
  Shape() : Shape(Circle{}) {}
  Shape(ShapeVariant v) : v_(v) {  // NOLINT(google-explicit-constructor)
    validate();
  }
  const ShapeVariant& variant() const { return v_; }

  /// Largest tube half-width on which the signed distance stays smooth.
  double injectivity_scale() const {
    return std::visit(
        [](const auto& s) -> double {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, Circle>) {
            return s.r;
          } else if constexpr (std::is_same_v<T, TwoCircles>) {
            return std::min({s.r1, s.r2, 0.5 * gap(s.c1x, s.c1y, s.r1, s.c2x, s.c2y, s.r2)});
          } else if constexpr (std::is_same_v<T, Stripe>) {
            return 0.5 * s.width;
          } else {
            // The neck is a thin feature of the approximate distance, not a
            // limit on the tube; inside it u simply stays below 1.
            return std::min(s.r1, s.r2);
          }
        },
        v_);
  }

  /// Default clipping scale: 0.8 of the injectivity scale, capped at 0.2.
  double default_delta() const { return std::min(0.2, 0.8 * injectivity_scale()); }

  double signed_distance(double x, double y) const {
    return std::visit(
        [x, y](const auto& s) -> double {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, Circle>) {
            return disc(s.cx, s.cy, s.r, x, y);
          } else if constexpr (std::is_same_v<T, TwoCircles>) {
            return std::max(disc(s.c1x, s.c1y, s.r1, x, y), disc(s.c2x, s.c2y, s.r2, x, y));
          } else if constexpr (std::is_same_v<T, Stripe>) {
            return 0.5 * s.width - std::abs(s.nx * x + s.ny * y - s.offset);
          } else {
            return std::max({disc(s.c1x, s.c1y, s.r1, x, y), disc(s.c2x, s.c2y, s.r2, x, y),
                             neck_box(s, x, y)});
          }
        },
        v_);
  }

 private:
  static double gap(double ax, double ay, double ar, double bx, double by, double br) {
    return std::hypot(bx - ax, by - ay) - ar - br;
  }
  static double disc(double cx, double cy, double r, double x, double y) {
    return r - std::hypot(x - cx, y - cy);
  }
  // Positive inside the rectangle spanned by the centre segment.
  static double neck_box(const Dumbbell& s, double x, double y) {
    const double len = std::hypot(s.c2x - s.c1x, s.c2y - s.c1y);
    const double ux = (s.c2x - s.c1x) / len, uy = (s.c2y - s.c1y) / len;
    const double mx = 0.5 * (s.c1x + s.c2x), my = 0.5 * (s.c1y + s.c2y);
    const double along = std::abs((x - mx) * ux + (y - my) * uy) - 0.5 * len;
    const double across = std::abs(-(x - mx) * uy + (y - my) * ux) - s.neck;
    const double outside = std::hypot(std::max(along, 0.0), std::max(across, 0.0));
    const double inside = std::min(std::max(along, across), 0.0);
    return -(outside + inside);
  }

  void validate() const {
    std::visit(
        [](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, Circle>) {
            if (!(s.r > 0.0)) throw ShapeError("circle radius must be positive");
          } else if constexpr (std::is_same_v<T, TwoCircles>) {
            if (!(s.r1 > 0.0 && s.r2 > 0.0)) throw ShapeError("radii must be positive");
            if (!(gap(s.c1x, s.c1y, s.r1, s.c2x, s.c2y, s.r2) > 0.0))
              throw ShapeError("two_circles discs must be disjoint");
          } else if constexpr (std::is_same_v<T, Stripe>) {
            if (!(s.width > 0.0)) throw ShapeError("stripe width must be positive");
            const double n = std::hypot(s.nx, s.ny);
            if (std::abs(n - 1.0) > 1e-12) throw ShapeError("stripe normal must be a unit vector");
          } else {
            if (!(s.r1 > 0.0 && s.r2 > 0.0 && s.neck > 0.0))
              throw ShapeError("dumbbell radii and neck must be positive");
            if (!(s.neck < std::min(s.r1, s.r2))) throw ShapeError("dumbbell neck must be thinner than both discs");
            if (!(gap(s.c1x, s.c1y, s.r1, s.c2x, s.c2y, s.r2) > 0.0))
              throw ShapeError("dumbbell discs must be disjoint; the neck joins them");
          }
        },
        v_);
  }

  ShapeVariant v_;
};

inline double signed_distance(const Shape& shape, double x, double y) { return shape.signed_distance(x, y); }

/// q_eps(d(x)/eps) sampled at every cell centre, no masking.
inline ScalarField sample_recovery(const Shape& shape, double eps, double delta, const Grid2D& g) {
  const ClippedProfile q(eps, delta);
  ScalarField u(g, 0.0);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) u(i, j) = q(shape.signed_distance(g.x(i), g.y(j)) / eps);
  return u;
}

/// Recovery-sequence phase field u = q_eps(sdist/eps) on the masked domain.
/// Throws DomainError if the shape with its transition layer is not
/// contained in the domain.
inline ScalarField build_recovery(const Shape& shape, const ModelParams& p, const DomainMask& mask,
                                  double delta) {
  if (!(delta > 0.0 && delta < shape.injectivity_scale()))
    throw std::invalid_argument("delta must lie in (0, " + std::to_string(shape.injectivity_scale()) + ")");
  ScalarField u = sample_recovery(shape, p.eps, delta, mask.grid());
  for (std::size_t k = 0; k < u.size(); ++k) {
    if (mask.inside(k)) continue;
    if (u[k] > -1.0) throw DomainError("shape and its transition layer are not contained in the domain");
    u[k] = -1.0;
  }
  return u;
}

inline ScalarField build_recovery(const Shape& shape, const ModelParams& p, const DomainMask& mask) {
  return build_recovery(shape, p, mask, shape.default_delta());
}

}  // namespace wflow
