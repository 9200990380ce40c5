// DNLS lattice Hamiltonian in action-angle form, and a split-step lattice simulator.
#pragma once

#include "dnlsnf/normal_form.hpp"

#include <functional>
#include <map>
#include <vector>

namespace dnlsnf {

struct DnlsConfig {
  std::vector<int> tangent{1, 2};
  int jmax = 12;
  double eps = 1e-3;
  std::vector<double> zeta{1.5, 1.5};
  std::map<int, double> xi_set;  // explicit xi_j, others sit at the box midpoint 1.5/|j|
  int K = 12;
  int D = 4;
  double xi(int j) const;
  double lambda(int j) const { return double(j) * j + xi(j); }
  void validate() const;
};

struct DnlsModel {
  NormalForm nf;
  HamSeries P;
  double taylor_remainder = 0.0;  // r-weighted size of the first dropped y order
  ModesPtr modes;
};

DnlsModel build_hamiltonian(const DnlsConfig& cfg, double r = 0.5);

// Lattice sites -J..-1, 1..J in ascending order.
std::vector<int> lattice_sites(int jmax);

struct LatticeState {
  std::vector<cplx> q;  // aligned with lattice_sites(jmax)
  double t = 0.0;
};

struct IntegratorOptions {
  double dt = 1e-3;
  double drift_tol = 1e-8;  // per-step relative energy change that triggers a retry
  int max_halvings = 8;
  double fp_tol = 1e-14;
  int fp_max = 60;
};

struct IntegrationStats {
  long steps = 0;
  int rejections = 0;
  double max_step_drift = 0.0;
  double max_energy_drift = 0.0;  // relative, against the initial energy
};

class DnlsSimulator {
 public:
  explicit DnlsSimulator(const DnlsConfig& cfg);

  int site_index(int j) const { return j < 0 ? j + jmax_ : j + jmax_ - 1; }
  const std::vector<int>& sites() const { return sites_; }
  std::size_t size() const { return sites_.size(); }

  double energy(const std::vector<cplx>& q) const;
  double mass(const std::vector<cplx>& q) const;   // sum |q_j|^2
  double gauge(const std::vector<cplx>& q) const;  // sum |q_j|^2 / j

  // One Strang step: half linear rotation, implicit-midpoint quartic step, half rotation.
  void step(std::vector<cplx>& q, double dt, const IntegratorOptions& opt) const;

  using Observer = std::function<void(const LatticeState&)>;
  // Integrates to s.t + T (T may be negative), calling obs every `sample_dt` of time (and at both ends).
  IntegrationStats integrate(LatticeState& s, double T, const IntegratorOptions& opt,
                             double sample_dt = 0.0, const Observer& obs = nullptr) const;

 private:
  void nonlinear_field(const std::vector<cplx>& q, std::vector<cplx>& out) const;
  int jmax_;
  double eps_;
  std::vector<int> sites_;
  std::vector<double> lambda_;
};

// (x, y, z) <-> lattice q with q_{j_i} = sqrt(j_i (zeta_i + y_i)) e^{i x_i}, z_j = q_j.
std::vector<cplx> to_lattice(const PhasePoint& w, const ModeSystem& m,
                             const std::vector<double>& zeta);
PhasePoint from_lattice(const std::vector<cplx>& q, const ModeSystem& m,
                        const std::vector<double>& zeta);

// Weighted lattice norm (sum |j|^{2p} |q_j|^2)^{1/2} over all sites.
double lattice_norm(const std::vector<cplx>& q, int jmax, double p);

}  // namespace dnlsnf
