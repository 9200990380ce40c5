// Integrable part N = sum omega_i y_i + sum Omega_j(x)/j z_j zbar_j (+ a constant).
#pragma once

#include "dnlsnf/fourier.hpp"

#include <map>
#include <vector>

namespace dnlsnf {

struct NormalForm {
  ModesPtr modes;
  std::vector<double> omega;
  std::map<int, Fourier> Omega;  // site -> Omega_j(x), mean part is [Omega]_j
  double energy = 0.0;

  double Omega_mean(int site) const;
  Fourier Omega_tilde(int site) const;
  HamSeries to_series(int K, int D) const;
  // Picks the y-linear k=0 terms, diagonal z_j zbar_j terms and the constant out of h.
  static NormalForm from_series(const HamSeries& h);
  // sup_j ||Omega~_j / j||_s, exact Fourier value.
  double minus1_norm(double s) const;
  // Same quantity as a sup over an angle grid with G points per dimension (real x).
  double minus1_norm_grid(int G) const;
};

}  // namespace dnlsnf
