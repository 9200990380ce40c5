// Poisson brackets, Hamiltonian vector fields and Lie transforms.
#pragma once

#include "dnlsnf/series.hpp"

#include <vector>

namespace dnlsnf {

// {U,V} = <d_x U, d_y V> - <d_y U, d_x V> + i sum_j j (d_{z_j}U d_{zb_j}V - d_{zb_j}U d_{z_j}V)
HamSeries poisson_bracket(const HamSeries& U, const HamSeries& V);

HamSeries d_x(const HamSeries& h, int i);
HamSeries d_y(const HamSeries& h, int i);
HamSeries d_z(const HamSeries& h, int site);
HamSeries d_zb(const HamSeries& h, int site);

struct VectorFieldEval {
  std::vector<cplx> dx, dy;  // d_y W, -d_x W
  std::vector<cplx> dz, dzb;  // i j d_{zb_j} W, -i j d_{z_j} W; aligned with normal_sites
};

VectorFieldEval vector_field(const HamSeries& W, const PhasePoint& w);

// ||d_y W|| + r^-2 ||d_x W|| + r^-1 ||i j d_z W||_p + r^-1 ||i j d_zb W||_p, sup over samples.
double vf_norm(const HamSeries& W, const DomainSpec& d, double p, const GridSpec& g = {});
double vf_norm_at(const HamSeries& W, const DomainSpec& d, double p,
                  const std::vector<PhasePoint>& pts);

struct LiePlan {
  int order_cap = 12;
  DomainSpec domain{};  // used for the term norms and the smallness gate
  double stop_rel = 1e-17;  // stop early once a summand falls below this (relative)
  bool increment_only = false;  // return sum_{j>=1} only, pruned relative to itself
};

struct LieResult {
  HamSeries value;
  double remainder = 0.0;  // 2 x norm of the first dropped summand
  int orders_used = 0;
  bool converged = true;
  std::vector<double> term_norms;
};

// H o X_F^1 = sum_{j<=L} ad_F^j H / j!, ad_F H = {H,F}.
LieResult lie_transform(const HamSeries& H, const HamSeries& F, const LiePlan& plan = {});

// Flow of X_F for time t from w, classical RK4 with `steps` substeps.
PhasePoint flow(const HamSeries& F, const PhasePoint& w, double t, int steps = 16);

}  // namespace dnlsnf
