// Fourier data on T^n: sparse map k -> coefficient, plus grid transforms.
#pragma once

#include "dnlsnf/series.hpp"

#include <vector>

namespace dnlsnf {

int l1(const IVec& k);
bool is_zero_k(const IVec& k);
double dot(const IVec& k, const std::vector<double>& w);

Fourier f_add(const Fourier& a, const Fourier& b, cplx fb = 1.0);
Fourier f_scale(const Fourier& a, cplx c);
// Convolution truncated to |k|_1 <= K (K < 0: no truncation).
Fourier f_mul(const Fourier& a, const Fourier& b, int K = -1);
Fourier f_truncate(const Fourier& a, int K);
cplx f_mean(const Fourier& a, int n);
Fourier f_zero_mean(const Fourier& a);
Fourier f_prune(const Fourier& a, double rel = kPruneRel);
// Multiplier i<k,w> (the derivative w.d).
Fourier f_omega_d(const Fourier& a, const std::vector<double>& w);
Fourier f_grad(const Fourier& a, int i);  // d/dx_i
cplx f_eval(const Fourier& a, const std::vector<cplx>& x);
cplx f_eval(const Fourier& a, const std::vector<double>& x);
double f_max_diff(const Fourier& a, const Fourier& b);
double f_l1(const Fourier& a);  // plain sum |c_k|

// Uniform tensor grid with G points per dimension, theta_m = 2 pi m / G.
struct TorusGrid {
  int n = 1;
  int G = 64;
  std::size_t size() const;
  std::vector<double> point(std::size_t idx) const;
};

std::vector<cplx> to_grid(const Fourier& a, const TorusGrid& g);
// Values at arbitrary points (direct summation).
std::vector<cplx> eval_at(const Fourier& a, const std::vector<std::vector<double>>& pts);
// FFT back to coefficients, keeping |k|_1 <= K (and |k_i| < G/2).
Fourier from_grid(const std::vector<cplx>& vals, const TorusGrid& g, int K);

}  // namespace dnlsnf
