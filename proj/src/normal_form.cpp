#include "dnlsnf/normal_form.hpp"

#include <algorithm>
#include <cmath>

namespace dnlsnf {

double NormalForm::Omega_mean(int site) const {
  auto it = Omega.find(site);
  if (it == Omega.end()) return 0.0;
  return f_mean(it->second, modes->n).real();
}

Fourier NormalForm::Omega_tilde(int site) const {
  auto it = Omega.find(site);
  if (it == Omega.end()) return {};
  return f_zero_mean(it->second);
}

HamSeries NormalForm::to_series(int K, int D) const {
  const auto& m = *modes;
  HamSeries h(modes, K, D, true);
  if (energy != 0.0) h.add_term(HamSeries::idx(m), energy);
  for (int i = 0; i < m.n; ++i) {
    IVec a(m.n, 0);
    a[i] = 1;
    h.add_term(HamSeries::idx(m, {}, a), omega[i]);
  }
  for (auto& [j, f] : Omega)
    for (auto& [k, c] : f)
      h.add_term(TermIndex{k, IVec(m.n, 0), SiteMap{{j, 1}}, SiteMap{{j, 1}}}, c / double(j));
  return h;
}

NormalForm NormalForm::from_series(const HamSeries& h) {
  NormalForm nf;
  nf.modes = h.modes_ptr();
  const int n = h.modes().n;
  nf.omega.assign(n, 0.0);
  for (auto& [t, c] : h.terms()) {
    int deg = t.degree();
    bool k0 = is_zero_k(t.k);
    if (deg == 0 && k0) {
      nf.energy += c.real();
    } else if (deg == 2 && k0 && t.mu.empty() && t.gamma.empty()) {
      for (int i = 0; i < n; ++i)
        if (t.alpha[i] == 1) nf.omega[i] += c.real();
    } else if (deg == 2 && t.mu.size() == 1 && t.gamma.size() == 1 &&
               t.mu[0].first == t.gamma[0].first) {
      int j = t.mu[0].first;
      nf.Omega[j][t.k] += c * double(j);
    }
  }
  return nf;
}

double NormalForm::minus1_norm(double s) const {
  double best = 0;
  for (auto& [j, f] : Omega) best = std::max(best, norm_coeff(f_zero_mean(f), s) / std::abs(j));
  return best;
}

double NormalForm::minus1_norm_grid(int G) const {
  TorusGrid g{modes->n, G};
  double best = 0;
  for (auto& [j, f] : Omega) {
    Fourier t = f_zero_mean(f);
    if (t.empty()) continue;
    for (auto& v : to_grid(t, g)) best = std::max(best, std::abs(v) / std::abs(j));
  }
  return best;
}

}  // namespace dnlsnf
