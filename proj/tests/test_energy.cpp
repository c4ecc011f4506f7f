#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "support.hpp"
#include "wflow/energy.hpp"
#include "wflow/profile.hpp"
#include "wflow/report.hpp"

using namespace wflow;
using namespace wflow::testing;

namespace {

struct CircleCase {
  double eps;
  DiscSetup dom;
  ModelParams p;
  ScalarField u;
  CircleCase(double eps_, double r, double target = 1.0)
      : eps(eps_), dom(1.0, eps_ / 4.0), p(eps_, 2.0, 1.0, target),
        u(build_recovery(Shape(Circle{0.0, 0.0, r}), p, dom.mask, 0.2)) {}
};

}  // namespace

TEST(DoubleWell, Values) {
  EXPECT_EQ(double_well(1.0), 0.0);
  EXPECT_EQ(double_well(-1.0), 0.0);
  EXPECT_EQ(double_well_d1(1.0), 0.0);
  EXPECT_EQ(double_well_d1(-1.0), 0.0);
  EXPECT_EQ(double_well(0.0), 0.25);
  EXPECT_EQ(double_well_d1(0.0), 0.0);
  EXPECT_EQ(double_well_d2(0.0), -1.0);
  EXPECT_EQ(double_well(2.0), 2.25);
  EXPECT_EQ(double_well_d1(2.0), 6.0);
}

TEST(ModelParams, ValidatesRanges) {
  EXPECT_NEAR(ModelParams().c0, 2.0 * std::sqrt(2.0) / 3.0, 1e-15);
  try {
    ModelParams(0.015, 5.0, 1.0, 1.0);
    FAIL() << "sigma outside (0,4) accepted";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("sigma must lie in (0,4)"), std::string::npos);
  }
  EXPECT_THROW(ModelParams(0.0, 2.0, 1.0, 1.0), std::invalid_argument);
  EXPECT_THROW(ModelParams(0.01, 2.0, 0.0, 1.0), std::invalid_argument);
  ModelParams bad;
  bad.c0 = 1.0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(ModelParams, WarnsWhenUnderResolved) {
  WarningCapture cap;
  EXPECT_FALSE(check_resolution(ModelParams(0.01, 2, 1, 1), Grid2D(10, 10, 0.01)));
  EXPECT_TRUE(check_resolution(ModelParams(0.02, 2, 1, 1), Grid2D(10, 10, 0.01)));
  EXPECT_EQ(cap.messages.size(), 1u);
}

TEST(ChemicalPotential, VanishesOnPurePhasesAwayFromTheWall) {
  const Grid2D g(16, 16, 0.05);
  const auto m = DomainMask::interior(g);
  const ModelParams p;
  for (double c : {1.0, 0.0}) {
    ScalarField u(g, -1.0);
    for (auto k : m.cells()) u[k] = c;
    const auto v = chemical_potential(u, m, p);
    for (auto k : cells_at_depth(m, 2)) EXPECT_EQ(v[k], 0.0);
  }
}

TEST(ChemicalPotential, StripeProfileConvergesToStationary) {
  // A straight layer solves -q'' + W'(q) = 0, so v -> 0 as h -> 0 at fixed eps.
  const double eps = 0.05;
  double prev = 0.0;
  for (int level = 0; level < 3; ++level) {
    const double h = eps / (4 << level);
    const int n = static_cast<int>(std::ceil(1.2 / h)) + 4;
    const Grid2D g(n, 21, h, -0.5 * n * h, -10.5 * h);
    const auto m = DomainMask::rectangle(g, -0.6, 0.6, -8.0 * h, 8.0 * h);
    const ModelParams p(eps, 2, 1, 1);
    const auto u = sample_recovery(Shape(Stripe{1.0, 0.0, 0.0, 0.8}), eps, 0.3, g);
    ScalarField adm = u;
    clamp_exterior(adm, m);
    const auto v = chemical_potential(adm, m, p);
    const ClippedProfile q(eps, 0.3);
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
      const double t = (0.4 - std::abs(g.x(i))) / eps;
      if (std::abs(t) + 1.5 * h / eps < q.inner_knot()) worst = std::max(worst, std::abs(v(i, 10)));
    }
    if (level > 0) EXPECT_GT(prev / worst, 3.5) << "level " << level;
    prev = worst;
  }
  EXPECT_LT(prev, 0.05);
}

TEST(SEps, ZeroForExteriorPhase) {
  const DiscSetup d(1.0, 0.05);
  EXPECT_EQ(s_eps(ScalarField(d.grid, -1.0), d.mask, ModelParams()), 0.0);
}

TEST(SEps, CircleRecoveryApproximatesPerimeter) {
  const CircleCase c(0.01, 0.25);
  const double exact = 2.0 * std::numbers::pi * 0.25;
  EXPECT_NEAR(s_eps(c.u, c.dom.mask, c.p), exact, 0.02 * exact);
}

TEST(SEps, StripeRecoveryApproximatesLength) {
  // Horizontal band of width 0.5 across a tall masked strip; measure the two
  // layers over a window clear of the strip's side walls.
  const double eps = 0.01, h = eps / 4;
  const int nx = 408, ny = 328;
  const Grid2D g(nx, ny, h, -0.5 * nx * h, -0.5 * ny * h);
  const auto m = DomainMask::rectangle(g, -0.5, 0.5, -0.25 - 0.15, 0.25 + 0.15);
  const ModelParams p(eps, 2, 1, 1);
  ScalarField u = sample_recovery(Shape(Stripe{0.0, 1.0, 0.0, 0.5}), eps, 0.2, g);
  clamp_exterior(u, m);
  const auto dens = s_eps_density(u, m, p);
  double sum = 0.0;
  for (auto k : m.cells())
    if (std::abs(g.x(static_cast<int>(k % nx))) < 0.4) sum += dens[k];
  EXPECT_NEAR(sum * h * h, 2 * 0.8, 0.02 * 2 * 0.8);
}

TEST(WEps, VanishesOnPurePhasesAwayFromTheWall) {
  const Grid2D g(16, 16, 0.05);
  const auto m = DomainMask::interior(g);
  ScalarField u(g, -1.0);
  for (auto k : m.cells()) u[k] = 1.0;
  const auto v = chemical_potential(u, m, ModelParams());
  double deep = 0.0;
  for (auto k : cells_at_depth(m, 2)) deep += v[k] * v[k];
  EXPECT_EQ(deep, 0.0);
  EXPECT_EQ(w_eps(ScalarField(g, -1.0), m, ModelParams()), 0.0);
}

TEST(WEps, CircleRecoveryApproximatesWillmore) {
  const CircleCase c(0.01, 0.25);
  const double exact = 2.0 * std::numbers::pi / 0.25;
  EXPECT_NEAR(w_eps(c.u, c.dom.mask, c.p), exact, 0.1 * exact);
}

TEST(WEps, FlatLayerCarriesLittleBending) {
  const double eps = 0.01, h = eps / 4;
  const int nx = 408, ny = 328;
  const Grid2D g(nx, ny, h, -0.5 * nx * h, -0.5 * ny * h);
  const auto m = DomainMask::rectangle(g, -0.5, 0.5, -0.4, 0.4);
  const ModelParams p(eps, 2, 1, 1);
  ScalarField u = sample_recovery(Shape(Stripe{0.0, 1.0, 0.0, 0.5}), eps, 0.2, g);
  clamp_exterior(u, m);
  const auto v = chemical_potential(u, m, p);
  double sum = 0.0;
  for (auto k : m.cells())
    if (std::abs(g.x(static_cast<int>(k % nx))) < 0.4) sum += v[k] * v[k];
  const double w_window = sum * h * h / (p.c0 * eps);
  EXPECT_LE(w_window, 0.1 * 2.0 * std::numbers::pi / 0.25);
}

TEST(Discrepancy, PureMixtureRegion) {
  const Grid2D g(24, 24, 0.05);
  const auto m = DomainMask::interior(g);
  const ModelParams p(0.05, 2, 1, 1);
  ScalarField u(g, -1.0);
  for (auto k : m.cells()) u[k] = 0.0;
  const auto xi = discrepancy(u, m, p);
  const double area = static_cast<double>(m.cells().size()) * g.h * g.h;
  const double grad_part = 0.5 * p.eps * integrate(grad_norm_sq(u, m), m) / p.c0;
  EXPECT_NEAR(xi.signed_value, grad_part - area / (4.0 * p.eps * p.c0), 1e-10);
}

TEST(Discrepancy, OrderingOnRandomFields) {
  std::mt19937 rng(3);
  const Grid2D g(20, 20, 0.05);
  const auto m = DomainMask::interior(g);
  const ModelParams p(0.1, 2, 1, 1);
  for (int trial = 0; trial < 10; ++trial) {
    const auto u = smooth_random_field(m, rng);
    const auto xi = discrepancy(u, m, p);
    EXPECT_GE(xi.absolute, xi.positive);
    EXPECT_GE(xi.positive, std::max(xi.signed_value, 0.0));
    EXPECT_GE(xi.absolute, std::abs(xi.signed_value));
  }
}

TEST(Discrepancy, SmallOnCircleRecovery) {
  const CircleCase c(0.01, 0.25);
  const auto xi = discrepancy(c.u, c.dom.mask, c.p);
  EXPECT_LE(xi.absolute / s_eps(c.u, c.dom.mask, c.p), 0.05);
}

TEST(Equipartition, OptimalProfile) {
  double worst = 0.0;
  for (int k = 0; k < 10000; ++k) {
    const double t = -10.0 + 20.0 * k / 9999.0;
    const double d = optimal_profile_d1(t);
    worst = std::max(worst, std::abs(d * d - 2.0 * double_well(optimal_profile(t))));
  }
  EXPECT_LE(worst, 1e-12);
}

class Gradients : public ::testing::Test {
 protected:
  Grid2D g{16, 16, 0.0625};
  DomainMask m = DomainMask::interior(g);
  ModelParams p{0.125, 2.0, 1.0, 1.5};
  std::mt19937 rng{11};
};

TEST_F(Gradients, SEpsMatchesFiniteDifferences) {
  for (int trial = 0; trial < 5; ++trial) {
    const auto u = smooth_random_field(m, rng);
    const auto d = random_direction(m, rng);
    const double fd = directional_fd([&](const ScalarField& x) { return s_eps(x, m, p); }, u, d, 1e-6);
    const double an = inner(grad_s_eps(u, m, p), d, m);
    EXPECT_NEAR(an, fd, 1e-5 * std::abs(fd));
  }
}

TEST_F(Gradients, WEpsMatchesFiniteDifferences) {
  for (int trial = 0; trial < 5; ++trial) {
    const auto u = smooth_random_field(m, rng);
    const auto d = random_direction(m, rng);
    const double fd = directional_fd([&](const ScalarField& x) { return w_eps(x, m, p); }, u, d, 1e-6);
    const double an = inner(grad_w_eps(u, m, p), d, m);
    EXPECT_NEAR(an, fd, 1e-4 * std::abs(fd));
  }
}

TEST_F(Gradients, AreaPenaltyMatchesFiniteDifferences) {
  for (int trial = 0; trial < 5; ++trial) {
    const auto u = smooth_random_field(m, rng);
    const auto d = random_direction(m, rng);
    const double fd =
        directional_fd([&](const ScalarField& x) { return area_penalty(x, m, p).value; }, u, d, 1e-6);
    const double an = inner(area_penalty(u, m, p).gradient, d, m);
    EXPECT_NEAR(an, fd, 1e-4 * std::abs(fd));
  }
}

TEST_F(Gradients, PureExteriorPhaseHasNoForce) {
  const ScalarField u(g, -1.0);
  for (double x : grad_s_eps(u, m, p).values) EXPECT_EQ(x, 0.0);
  for (double x : grad_w_eps(u, m, p).values) EXPECT_EQ(x, 0.0);
  const auto a = area_penalty(u, m, p);
  EXPECT_DOUBLE_EQ(a.value, std::pow(p.eps, -p.sigma) * p.target_area * p.target_area);
  for (double x : a.gradient.values) EXPECT_EQ(x, 0.0);
}

TEST_F(Gradients, WillmoreGradientIsOddAwayFromTheWall) {
  // W is even, W' odd and W'' even; the wall reads -1 for both signs, so
  // compare where neither Laplacian reaches it.
  const auto u = smooth_random_field(m, rng, 0.9);
  ScalarField neg(g, -1.0);
  for (auto k : m.cells()) neg[k] = -u[k];
  const auto a = grad_w_eps(u, m, p), b = grad_w_eps(neg, m, p);
  for (auto k : cells_at_depth(m, 3)) EXPECT_NEAR(a[k], -b[k], 1e-9 * (std::abs(a[k]) + 1.0));
}

TEST(AreaPenalty, VanishesAtTarget) {
  const DiscSetup d(1.0, 0.02);
  const ModelParams base(0.05, 2, 1, 1);
  const auto u = build_recovery(Shape(Circle{0, 0, 0.4}), base, d.mask, 0.2);
  ModelParams p = base;
  p.target_area = s_eps(u, d.mask, base);
  const auto a = area_penalty(u, d.mask, p);
  EXPECT_EQ(a.value, 0.0);
  for (double x : a.gradient.values) EXPECT_EQ(x, 0.0);
}

TEST(AreaPenalty, SmallForMatchingCircle) {
  const double r = 0.25;
  const CircleCase c(0.01, r, 2.0 * std::numbers::pi * r);
  const double excess_sq = area_penalty(c.u, c.dom.mask, c.p).value * std::pow(c.p.eps, c.p.sigma);
  EXPECT_LE(std::sqrt(excess_sq), 0.01 * c.p.target_area);
}

TEST(TotalEnergy, ExteriorPhase) {
  const DiscSetup d(1.0, 0.05);
  const ModelParams p(0.1, 2, 1, 3.0);
  const auto r = total_energy(ScalarField(d.grid, -1.0), d.mask, p, TopoSpecs{});
  EXPECT_EQ(r.s_eps, 0.0);
  EXPECT_EQ(r.w_eps, 0.0);
  EXPECT_EQ(r.c_eps, 0.0);
  EXPECT_EQ(r.n_components, 0);
  EXPECT_DOUBLE_EQ(r.area_penalty, std::pow(0.1, -2.0) * 9.0);
  EXPECT_EQ(r.total, r.w_eps + r.area_penalty + std::pow(p.eps, -p.kappa) * r.c_eps);
}

TEST(TotalEnergy, ConnectedCircleIsWillmoreOnly) {
  const double r = 0.25;
  const CircleCase c(0.02, r, 2.0 * std::numbers::pi * r);
  const auto rep = total_energy(c.u, c.dom.mask, c.p, TopoSpecs{});
  EXPECT_EQ(rep.c_eps, 0.0);
  EXPECT_EQ(rep.n_components, 1);
  EXPECT_NEAR(rep.total, rep.w_eps, 0.01 * rep.w_eps);
  EXPECT_EQ(rep.total, rep.w_eps + rep.area_penalty + std::pow(c.p.eps, -c.p.kappa) * rep.c_eps);
}

TEST(TotalEnergy, TwoCirclesPayTheConnectednessPenalty) {
  const DiscSetup d(1.0, 0.02);
  const ModelParams p(0.04, 2, 1, 2.0);
  const auto u = build_recovery(Shape(TwoCircles{}), p, d.mask, 0.08);
  const auto rep = total_energy(u, d.mask, p, TopoSpecs{});
  EXPECT_EQ(rep.n_components, 2);
  EXPECT_GT(rep.c_eps, 0.0);
  EXPECT_EQ(rep.total, rep.w_eps + rep.area_penalty + std::pow(p.eps, -p.kappa) * rep.c_eps);
  TopoSpecs off;
  off.penalty = false;
  const auto rep_off = total_energy(u, d.mask, p, off);
  EXPECT_EQ(rep_off.c_eps, 0.0);
  EXPECT_EQ(rep_off.n_components, 2);
  EXPECT_GT(rep.total, rep_off.total);
}

TEST(TotalEnergy, AllTermsNonNegative) {
  std::mt19937 rng(4);
  const Grid2D g(20, 20, 0.05);
  const auto m = DomainMask::interior(g);
  const ModelParams p(0.1, 2, 1, 1);
  for (int trial = 0; trial < 5; ++trial) {
    const auto r = total_energy(smooth_random_field(m, rng), m, p, TopoSpecs{});
    EXPECT_GE(r.s_eps, 0.0);
    EXPECT_GE(r.w_eps, 0.0);
    EXPECT_GE(r.area_penalty, 0.0);
    EXPECT_GE(r.c_eps, 0.0);
    EXPECT_GE(r.xi_plus, 0.0);
  }
}

TEST(TotalEnergy, WarnsOnUnboundedField) {
  WarningCapture cap;
  const Grid2D g(10, 10, 0.1);
  const auto m = DomainMask::interior(g);
  ScalarField u(g, -1.0);
  u(5, 5) = 1.7;
  (void)total_energy(u, m, ModelParams(0.2, 2, 1, 1), TopoSpecs{});
  ASSERT_EQ(cap.messages.size(), 1u);
  EXPECT_NE(cap.messages[0].find("1.5"), std::string::npos);
}

TEST(Scaling, HalvingLengthsAndEps) {
  const double r = 0.25, eps = 0.02;
  const DiscSetup big(1.0, eps / 4), small(0.5, eps / 8);
  const ModelParams pb(eps, 2, 1, 1), ps(eps / 2, 2, 1, 1);
  const auto ub = build_recovery(Shape(Circle{0, 0, r}), pb, big.mask, 0.2);
  const auto us = build_recovery(Shape(Circle{0, 0, r / 2}), ps, small.mask, 0.1);
  EXPECT_NEAR(s_eps(us, small.mask, ps) / (r / 2), s_eps(ub, big.mask, pb) / r, 0.01 * s_eps(ub, big.mask, pb) / r);
  EXPECT_NEAR(w_eps(us, small.mask, ps) * (r / 2), w_eps(ub, big.mask, pb) * r, 0.01 * w_eps(ub, big.mask, pb) * r);
}
