#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <fftw3.h>

#include "wflow/energy.hpp"
#include "wflow/errors.hpp"
#include "wflow/grid.hpp"
#include "wflow/report.hpp"
#include "wflow/topology.hpp"

namespace wflow {

struct FlowConfig {
  double tau = 1.5e-7;
  long max_steps = 1000;
  double solver_tol = 1e-8;
  int solver_max_iter = 1000;
  int geodesic_stride = 1;
  int snapshot_stride = 1000;
  int energy_log_stride = 100;

  /// Default time step eps * 1e-5.
  static FlowConfig for_eps(double eps) {
    FlowConfig c;
    c.tau = eps * 1e-5;
    return c;
  }

  void validate() const {
    std::ostringstream err;
    if (!(tau >= 0.0) || !std::isfinite(tau)) err << "tau must be non-negative; ";
    if (max_steps < 0) err << "max_steps must be non-negative; ";
    if (!(solver_tol > 0.0)) err << "solver_tol must be positive; ";
    if (solver_max_iter < 1) err << "solver_max_iter must be >= 1; ";
    if (geodesic_stride < 1 || snapshot_stride < 1 || energy_log_stride < 1) err << "strides must be >= 1; ";
    if (!err.str().empty()) throw std::invalid_argument(err.str());
  }
};

struct FlowState {
  ScalarField u;
  double t = 0.0;
  long step = 0;
  EnergyReport report;
};

/// Conjugate-gradient solver for (I + coef Lap^2) x = rhs on inside cells
/// with x = -1 outside. Preconditioned by the exact inverse of the same
/// operator on the full array rectangle (Dirichlet walls), applied with
/// sine transforms and restricted back to the mask.
class ImplicitSolver {
 public:
  ImplicitSolver(const DomainMask& mask, double coef) : mask_(&mask), coef_(coef) {
    const Grid2D& g = mask.grid();
    m_ = g.nx - 2;
    k_ = g.ny - 2;
    const std::size_t n = g.size();
    lap_.assign(n, 0.0);
    bil_.assign(n, 0.0);
    r_.assign(n, 0.0);
    z_.assign(n, 0.0);
    dir_.assign(n, 0.0);
    q_.assign(n, 0.0);
    e_.assign(n, 0.0);
    if (coef_ == 0.0) return;
    const std::size_t inner = static_cast<std::size_t>(m_) * static_cast<std::size_t>(k_);
    buf_.reset(fftw_alloc_real(inner));
    plan_.reset(fftw_plan_r2r_2d(k_, m_, buf_.get(), buf_.get(), FFTW_RODFT00, FFTW_RODFT00, FFTW_ESTIMATE));
    scale_.resize(inner);
    const double inv_h2 = 1.0 / (g.h * g.h);
    const double norm = 4.0 * (m_ + 1) * (k_ + 1);
    for (int b = 0; b < k_; ++b)
      for (int a = 0; a < m_; ++a) {
        const double sa = std::sin(0.5 * std::numbers::pi * (a + 1) / (m_ + 1));
        const double sb = std::sin(0.5 * std::numbers::pi * (b + 1) / (k_ + 1));
        const double lambda = 4.0 * inv_h2 * (sa * sa + sb * sb);
        scale_[static_cast<std::size_t>(b) * m_ + a] = 1.0 / (norm * (1.0 + coef_ * lambda * lambda));
      }
  }

  double coefficient() const { return coef_; }

  ScalarField solve(const ScalarField& rhs, double tol, int max_iter, int* iterations = nullptr) {
    const DomainMask& mask = *mask_;
    require_same_grid(rhs.grid, mask.grid());
    ScalarField x = rhs;
    clamp_exterior(x, mask);
    if (iterations) *iterations = 0;
    if (coef_ == 0.0) return x;

    const auto cells = mask.cells();
    apply(x.values, q_, -1.0);
    double rhs_norm2 = 0.0, rr = 0.0;
    for (const std::uint32_t c : cells) {
      r_[c] = rhs[c] - q_[c];
      e_[c] = 0.0;
      rr += r_[c] * r_[c];
      rhs_norm2 += rhs[c] * rhs[c];
    }
    const double target = tol * tol * std::max(rhs_norm2, 1e-300);
    if (rr <= target) return x;

    precondition(r_, z_);
    double rz = 0.0;
    for (const std::uint32_t c : cells) {
      dir_[c] = z_[c];
      rz += r_[c] * z_[c];
    }
    int it = 1;
    for (;; ++it) {
      if (it > max_iter)
        throw SolverError("implicit solve did not converge in " + std::to_string(max_iter) + " iterations",
                          std::sqrt(rr / std::max(rhs_norm2, 1e-300)));
      apply(dir_, q_, 0.0);
      double dq = 0.0;
      for (const std::uint32_t c : cells) dq += dir_[c] * q_[c];
      const double alpha = rz / dq;
      rr = 0.0;
      for (const std::uint32_t c : cells) {
        e_[c] += alpha * dir_[c];
        r_[c] -= alpha * q_[c];
        rr += r_[c] * r_[c];
      }
      if (rr <= target) break;
      precondition(r_, z_);
      double rz_new = 0.0;
      for (const std::uint32_t c : cells) rz_new += r_[c] * z_[c];
      const double beta = rz_new / rz;
      rz = rz_new;
      for (const std::uint32_t c : cells) dir_[c] = z_[c] + beta * dir_[c];
    }
    for (const std::uint32_t c : cells) x[c] += e_[c];
    if (iterations) *iterations = it;
    return x;
  }

 private:
  struct FftwFree {
    void operator()(double* p) const { fftw_free(p); }
  };
  struct PlanFree {
    void operator()(fftw_plan_s* p) const { fftw_destroy_plan(p); }
  };

  // out = in + coef Lap0 Lap0 in on inside cells; `exterior` is what `in`
  // holds outside the mask.
  void apply(const std::vector<double>& in, std::vector<double>& out, double exterior) {
    laplacian_into(in, lap_, *mask_, exterior);
    laplacian_into(lap_, bil_, *mask_, 0.0);
    for (const std::uint32_t c : mask_->cells()) out[c] = in[c] + coef_ * bil_[c];
  }

  void precondition(const std::vector<double>& in, std::vector<double>& out) {
    const Grid2D& g = mask_->grid();
    double* b = buf_.get();
    for (int j = 0; j < k_; ++j)
      for (int i = 0; i < m_; ++i) {
        const std::size_t c = g.index(i + 1, j + 1);
        b[static_cast<std::size_t>(j) * m_ + i] = mask_->inside(c) ? in[c] : 0.0;
      }
    fftw_execute(plan_.get());
    for (std::size_t t = 0; t < scale_.size(); ++t) b[t] *= scale_[t];
    fftw_execute(plan_.get());
    for (const std::uint32_t c : mask_->cells()) {
      const auto i = static_cast<int>(c % g.nx) - 1, j = static_cast<int>(c / g.nx) - 1;
      out[c] = b[static_cast<std::size_t>(j) * m_ + i];
    }
  }

  const DomainMask* mask_;
  double coef_;
  int m_ = 0, k_ = 0;
  std::unique_ptr<double, FftwFree> buf_;
  std::unique_ptr<fftw_plan_s, PlanFree> plan_;
  std::vector<double> scale_;
  std::vector<double> lap_, bil_, r_, z_, dir_, q_, e_;
};

inline double implicit_coefficient(const ModelParams& p, const FlowConfig& cfg) {
  return cfg.tau * 2.0 * p.eps / p.c0;
}

/// Solves (I + tau (2 eps / c0) Lap^2) x = rhs on inside cells with x = -1
/// outside, to relative residual solver_tol.
inline ScalarField implicit_solve(const ScalarField& rhs, const DomainMask& mask, const ModelParams& p,
                                  const FlowConfig& cfg, int* iterations = nullptr) {
  ImplicitSolver solver(mask, implicit_coefficient(p, cfg));
  return solver.solve(rhs, cfg.solver_tol, cfg.solver_max_iter, iterations);
}

/// Semi-implicit L2 gradient flow of W_eps + area penalty + eps^-kappa C_eps.
/// The constant-coefficient part (2 eps / c0) Lap^2 of the Willmore gradient
/// is implicit, everything else explicit.
class GradientFlow {
 public:
  GradientFlow(DomainMask mask, ModelParams p, FlowConfig cfg, TopoSpecs topo)
      : mask_(std::move(mask)), p_(p), cfg_(cfg), topo_(std::move(topo)),
        solver_(std::make_unique<ImplicitSolver>(mask_, implicit_coefficient(p_, cfg_))) {
    p_.validate();
    cfg_.validate();
    for (const auto& b : topo_.bands) b.validate();
  }
  GradientFlow(const GradientFlow&) = delete;
  GradientFlow& operator=(const GradientFlow&) = delete;

  const DomainMask& mask() const { return mask_; }
  const ModelParams& params() const { return p_; }
  const FlowConfig& config() const { return cfg_; }
  const TopoSpecs& topology() const { return topo_; }

  FlowState initial_state(ScalarField u) const {
    require_same_grid(u.grid, mask_.grid());
    clamp_exterior(u, mask_);
    FlowState s{std::move(u), 0.0, 0, {}};
    s.report = total_energy(s.u, mask_, p_, topo_);
    return s;
  }

  /// Explicit part of the L2 gradient at u. The topological subgradient is
  /// refreshed on steps divisible by geodesic_stride and reused otherwise.
  ScalarField explicit_gradient(const ScalarField& u, long step_index) {
    const Grid2D& g = u.grid;
    const ScalarField lap = laplacian(u, mask_);
    ScalarField v(g, 0.0);
    for (const std::uint32_t c : mask_.cells()) v[c] = -p_.eps * lap[c] + double_well_d1(u[c]) / p_.eps;
    ScalarField grad = grad_w_eps_from_potential(u, v, mask_, p_);
    const ScalarField bil = laplacian(lap, mask_, 0.0);
    const double implicit_coef = 2.0 * p_.eps / p_.c0;

    const double excess = s_eps(u, mask_, p_) - p_.target_area;
    const double area_coef = 2.0 * std::pow(p_.eps, -p_.sigma) * excess / p_.c0;

    if (topo_.penalty && (!topo_grad_ || step_index % cfg_.geodesic_stride == 0)) {
      ScalarField acc(g, 0.0);
      for (const BandPair& band : topo_.bands) {
        const BandAnalysis a = analyze_band(u, mask_, band);
        if (a.labeling.n_components < 2) continue;
        const ScalarField sub = c_eps_subgradient(u, mask_, p_, band, a, topo_.mode);
        for (const std::uint32_t c : mask_.cells()) acc[c] += sub[c];
      }
      const double scale = std::pow(p_.eps, -p_.kappa);
      for (const std::uint32_t c : mask_.cells()) acc[c] *= scale;
      topo_grad_ = std::move(acc);
    }

    for (const std::uint32_t c : mask_.cells()) {
      grad[c] += -implicit_coef * bil[c] + area_coef * v[c];
      if (topo_.penalty) grad[c] += (*topo_grad_)[c];
    }
    return grad;
  }

  /// Advances one time step; refreshes the energy report when the new step
  /// index is a multiple of energy_log_stride (or when `force_report`).
  FlowState step(const FlowState& s, bool force_report = false) {
    const ScalarField grad = explicit_gradient(s.u, s.step);
    ScalarField rhs(s.u.grid, -1.0);
    for (const std::uint32_t c : mask_.cells()) rhs[c] = s.u[c] - cfg_.tau * grad[c];
    // A blown-up explicit part would otherwise surface as a solver failure.
    check_bounded(rhs, s.step + 1);
    FlowState next{solver_->solve(rhs, cfg_.solver_tol, cfg_.solver_max_iter, &last_iterations_), s.t + cfg_.tau, s.step + 1, s.report};
    clamp_exterior(next.u, mask_);
    check_bounded(next.u, next.step);
    if (force_report || next.step % cfg_.energy_log_stride == 0)
      next.report = total_energy(next.u, mask_, p_, topo_);
    return next;
  }

  int last_solver_iterations() const { return last_iterations_; }

 private:
  void check_bounded(const ScalarField& u, long step_index) const {
    double umax = 0.0;
    bool finite = true;
    for (const std::uint32_t c : mask_.cells()) {
      const double a = std::abs(u[c]);
      if (!std::isfinite(a)) finite = false;
      else umax = std::max(umax, a);
    }
    if (!finite || umax > 1e6) {
      std::ostringstream msg;
      msg << "phase field diverged at step " << step_index << " (max |u| = " << umax
          << (finite ? "" : ", non-finite values") << ")";
      throw DivergenceError(msg.str(), step_index);
    }
  }

  DomainMask mask_;
  ModelParams p_;
  FlowConfig cfg_;
  TopoSpecs topo_;
  std::unique_ptr<ImplicitSolver> solver_;  // refers to mask_
  std::optional<ScalarField> topo_grad_;
  int last_iterations_ = 0;
};

inline FlowState step(const FlowState& s, const DomainMask& mask, const ModelParams& p, const FlowConfig& cfg,
                      const TopoSpecs& topo) {
  GradientFlow flow(mask, p, cfg, topo);
  return flow.step(s, true);
}

/// Observers invoked from the time loop. `energy` fires on every logged step
/// (including step 0), `snapshot` on step 0, every snapshot_stride steps and
/// on the final state.
struct FlowSinks {
  std::function<void(const FlowState&)> energy;
  std::function<void(const FlowState&)> snapshot;
};

/// Number of consecutive steps with negligible energy change that stops a run.
inline constexpr long kStallSteps = 100;

inline FlowState run(const ScalarField& initial, const DomainMask& mask, const ModelParams& p,
                     const FlowConfig& cfg, const TopoSpecs& topo, const FlowSinks& sinks = {}) {
  GradientFlow flow(mask, p, cfg, topo);
  FlowState s = flow.initial_state(initial);
  if (sinks.energy) sinks.energy(s);
  if (sinks.snapshot) sinks.snapshot(s);
  long stalled = 0;
  long last_snapshot = 0;
  double last_total = s.report.total;
  while (s.step < cfg.max_steps) {
    s = flow.step(s);
    if (s.step % cfg.energy_log_stride == 0) {
      if (sinks.energy) sinks.energy(s);
      const double per_step = std::abs(s.report.total - last_total) / cfg.energy_log_stride;
      stalled = per_step <= 1e-12 * std::abs(s.report.total) ? stalled + cfg.energy_log_stride : 0;
      last_total = s.report.total;
    }
    if (s.step % cfg.snapshot_stride == 0 && sinks.snapshot) {
      sinks.snapshot(s);
      last_snapshot = s.step;
    }
    if (stalled >= kStallSteps) break;
  }
  if (s.step % cfg.energy_log_stride != 0) {
    s.report = total_energy(s.u, mask, p, topo);
    if (sinks.energy) sinks.energy(s);
  }
  if (s.step != last_snapshot && sinks.snapshot) sinks.snapshot(s);
  return s;
}

}  // namespace wflow
