#pragma once

#include <cmath>
#include <vector>

#include "wflow/energy.hpp"
#include "wflow/topology.hpp"

namespace wflow {

/// Interface bands entering the connectedness penalty. The first band also
/// drives the reported component count, whether or not the penalty is on.
struct TopoSpecs {
  std::vector<BandPair> bands{BandPair(0.2, 0.8), BandPair(-0.8, -0.2)};
  bool penalty = true;
  SubgradientMode mode = SubgradientMode::full;
};

struct EnergyReport {
  double s_eps = 0.0;
  double w_eps = 0.0;
  double area_penalty = 0.0;
  double c_eps = 0.0;  // summed over bands; 0 when the penalty is off
  double total = 0.0;
  double xi_signed = 0.0;
  double xi_plus = 0.0;
  double xi_abs = 0.0;
  int n_components = 0;
  std::vector<int> band_components;
};

inline EnergyReport total_energy(const ScalarField& u, const DomainMask& mask, const ModelParams& p,
                                 const TopoSpecs& topo) {
  require_same_grid(u.grid, mask.grid());
  check_bounded(u, mask);
  EnergyReport r;
  const ScalarField v = chemical_potential(u, mask, p);
  r.s_eps = s_eps(u, mask, p);
  r.w_eps = w_eps_from_potential(v, mask, p);
  const double excess = r.s_eps - p.target_area;
  r.area_penalty = std::pow(p.eps, -p.sigma) * excess * excess;
  const Discrepancy xi = discrepancy(u, mask, p);
  r.xi_signed = xi.signed_value;
  r.xi_plus = xi.positive;
  r.xi_abs = xi.absolute;
  for (const BandPair& band : topo.bands) {
    if (topo.penalty) {
      const BandAnalysis a = analyze_band(u, mask, band);
      r.band_components.push_back(a.labeling.n_components);
      r.c_eps += c_eps(u, mask, p, band, a);
    } else {
      r.band_components.push_back(label_components(u, mask, band).n_components);
    }
  }
  r.n_components = r.band_components.empty() ? 0 : r.band_components.front();
  r.total = r.w_eps + r.area_penalty + std::pow(p.eps, -p.kappa) * r.c_eps;
  return r;
}

}  // namespace wflow
