// Composition of the normal-form coordinate changes, distance to the torus, and the
// long-time stability experiment on the lattice.
#pragma once

#include "dnlsnf/dnls.hpp"
#include "dnlsnf/symplectic.hpp"

#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace dnlsnf {

// Original Hamiltonian H_0 and generators F_0, F_1, ... with H_{m+1} = H_m o X_{F_m}^1.
// Original coordinates are Phi_0(Phi_1(...(w_final))).
struct TransformChain {
  ModesPtr modes;
  std::vector<double> zeta;
  std::vector<HamSeries> generators;
  int rk_steps = 16;

  PhasePoint to_original(const PhasePoint& w_final) const;
  PhasePoint to_normal(const PhasePoint& w_orig) const;
  std::vector<cplx> lattice_of(const PhasePoint& w_final) const;
  PhasePoint normal_of(const std::vector<cplx>& q) const;
};

// d(q, T) = inf_x || q - image(x, 0, 0) ||_{p'} over the torus image. The image is sampled on
// G x ... x G grids, interpolated trigonometrically, and minimised by Gauss-Newton from the
// best grid point; G doubles until the distance changes by less than rel_tol.
class TorusDistance {
 public:
  TorusDistance(std::shared_ptr<const TransformChain> chain, double p_prime, int G0 = 8,
                int G_max = 64, double rel_tol = 1e-3);

  struct Result {
    double distance = 0.0;
    std::vector<double> x;
    int G = 0;
  };
  Result operator()(const std::vector<cplx>& q) const;
  std::vector<cplx> torus_point(const std::vector<double>& x) const;  // exact chain image
  double p_prime() const { return p_; }

 private:
  struct Level {
    int G = 0;
    std::vector<std::vector<cplx>> samples;  // grid point -> lattice vector
    std::vector<Fourier> coeffs;             // per lattice index
  };
  const Level& level(int G) const;
  Result minimise(const std::vector<cplx>& q, const Level& L) const;

  std::shared_ptr<const TransformChain> chain_;
  double p_;
  int G0_, Gmax_;
  double tol_;
  std::vector<double> weight_;
  mutable std::map<int, Level> levels_;
};

struct StabilityConfig {
  double delta = 0.02;
  int M = 2;
  double p = 2.0;
  std::uint64_t seed = 1;
  std::vector<double> x0;        // empty: drawn from the seed
  double z0_fraction = 0.5;      // ||z0||_p = z0_fraction * delta
  int samples_per_direction = 40;
  IntegratorOptions integ{};
  double horizon_override = 0.0;  // > 0 replaces delta^{-M/4}
};

struct StabilitySample {
  double t = 0.0;
  double H = 0.0;
  double Ntilde = 0.0;
  std::vector<double> Ytilde;
  double distance = 0.0;
};

struct StabilityReport {
  double delta = 0.0, horizon = 0.0;
  double initial_distance = 0.0, max_distance = 0.0;
  double T_star = std::numeric_limits<double>::infinity();  // +inf: not reached in the horizon
  std::vector<double> T_j;
  double max_energy_drift = 0.0;
  IntegrationStats forward, backward;
  std::vector<StabilitySample> samples;  // sorted by t
  bool pass = false;
  std::string verdict;
};

// z0 with random phases and amplitudes |j|^{-p} scaled to ||z0||_p = fraction * delta.
std::vector<cplx> make_z0(const ModeSystem& m, double p, double target, std::uint64_t seed);

StabilityReport stability_experiment(const DnlsConfig& dcfg,
                                     std::shared_ptr<const TransformChain> chain,
                                     const StabilityConfig& sc);

}  // namespace dnlsnf
