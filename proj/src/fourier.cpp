#include "dnlsnf/fourier.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>

namespace dnlsnf {

int l1(const IVec& k) {
  int s = 0;
  for (int v : k) s += std::abs(v);
  return s;
}

bool is_zero_k(const IVec& k) {
  return std::all_of(k.begin(), k.end(), [](int v) { return v == 0; });
}

double dot(const IVec& k, const std::vector<double>& w) {
  double s = 0;
  for (std::size_t i = 0; i < k.size(); ++i) s += k[i] * w[i];
  return s;
}

Fourier f_add(const Fourier& a, const Fourier& b, cplx fb) {
  Fourier out = a;
  for (auto& [k, c] : b) out[k] += fb * c;
  return out;
}

Fourier f_scale(const Fourier& a, cplx c) {
  Fourier out;
  for (auto& [k, v] : a) out[k] = v * c;
  return out;
}

Fourier f_mul(const Fourier& a, const Fourier& b, int K) {
  Fourier out;
  for (auto& [ka, ca] : a)
    for (auto& [kb, cb] : b) {
      IVec k(ka.size());
      for (std::size_t i = 0; i < k.size(); ++i) k[i] = ka[i] + kb[i];
      if (K >= 0 && l1(k) > K) continue;
      out[k] += ca * cb;
    }
  return out;
}

Fourier f_truncate(const Fourier& a, int K) {
  Fourier out;
  for (auto& [k, c] : a)
    if (l1(k) <= K) out[k] = c;
  return out;
}

cplx f_mean(const Fourier& a, int n) {
  auto it = a.find(IVec(n, 0));
  return it == a.end() ? cplx(0.0) : it->second;
}

Fourier f_zero_mean(const Fourier& a) {
  Fourier out;
  for (auto& [k, c] : a)
    if (!is_zero_k(k)) out[k] = c;
  return out;
}

Fourier f_prune(const Fourier& a, double rel) {
  double m = 0;
  for (auto& [k, c] : a) m = std::max(m, std::abs(c));
  Fourier out;
  for (auto& [k, c] : a)
    if (std::abs(c) > rel * m && c != cplx(0.0)) out[k] = c;
  return out;
}

Fourier f_omega_d(const Fourier& a, const std::vector<double>& w) {
  Fourier out;
  for (auto& [k, c] : a) {
    double d = dot(k, w);
    if (d != 0.0) out[k] = cplx(0, d) * c;
  }
  return out;
}

Fourier f_grad(const Fourier& a, int i) {
  Fourier out;
  for (auto& [k, c] : a)
    if (k[i] != 0) out[k] = cplx(0, k[i]) * c;
  return out;
}

cplx f_eval(const Fourier& a, const std::vector<cplx>& x) {
  cplx acc = 0;
  for (auto& [k, c] : a) {
    cplx ph = 0;
    for (std::size_t i = 0; i < k.size(); ++i) ph += static_cast<double>(k[i]) * x[i];
    acc += c * std::exp(cplx(0, 1) * ph);
  }
  return acc;
}

cplx f_eval(const Fourier& a, const std::vector<double>& x) {
  cplx acc = 0;
  for (auto& [k, c] : a) acc += c * std::polar(1.0, dot(k, x));
  return acc;
}

double f_max_diff(const Fourier& a, const Fourier& b) {
  double m = 0;
  for (auto& [k, c] : a) {
    auto it = b.find(k);
    m = std::max(m, std::abs(c - (it == b.end() ? cplx(0.0) : it->second)));
  }
  for (auto& [k, c] : b)
    if (!a.count(k)) m = std::max(m, std::abs(c));
  return m;
}

double f_l1(const Fourier& a) {
  double s = 0;
  for (auto& [k, c] : a) s += std::abs(c);
  return s;
}

std::size_t TorusGrid::size() const {
  std::size_t s = 1;
  for (int i = 0; i < n; ++i) s *= static_cast<std::size_t>(G);
  return s;
}

// Row-major with the last coordinate fastest, matching FFTW's layout.
std::vector<double> TorusGrid::point(std::size_t idx) const {
  std::vector<double> th(n);
  for (int i = n - 1; i >= 0; --i) {
    th[i] = 2 * M_PI * static_cast<double>(idx % G) / G;
    idx /= G;
  }
  return th;
}

std::vector<cplx> eval_at(const Fourier& a, const std::vector<std::vector<double>>& pts) {
  std::vector<cplx> out(pts.size());
  if (pts.empty()) return out;
  const int n = static_cast<int>(pts[0].size());
  // Per-dimension exponential tables keyed by k_i keep the inner loop to products.
  int kmax = 0;
  for (auto& [k, c] : a)
    for (int v : k) kmax = std::max(kmax, std::abs(v));
  std::vector<cplx> tab(static_cast<std::size_t>(n) * (2 * kmax + 1));
  for (std::size_t p = 0; p < pts.size(); ++p) {
    for (int i = 0; i < n; ++i) {
      cplx e1 = std::polar(1.0, pts[p][i]);
      cplx* row = &tab[static_cast<std::size_t>(i) * (2 * kmax + 1) + kmax];
      row[0] = 1.0;
      cplx pw = 1.0;
      for (int m = 1; m <= kmax; ++m) {
        pw *= e1;
        row[m] = pw;
        row[-m] = std::conj(pw);
      }
    }
    cplx acc = 0;
    for (auto& [k, c] : a) {
      cplx v = c;
      for (int i = 0; i < n; ++i) v *= tab[static_cast<std::size_t>(i) * (2 * kmax + 1) + kmax + k[i]];
      acc += v;
    }
    out[p] = acc;
  }
  return out;
}

std::vector<cplx> to_grid(const Fourier& a, const TorusGrid& g) {
  std::vector<std::vector<double>> pts(g.size());
  for (std::size_t i = 0; i < pts.size(); ++i) pts[i] = g.point(i);
  return eval_at(a, pts);
}

Fourier from_grid(const std::vector<cplx>& vals, const TorusGrid& g, int K) {
  const std::size_t N = g.size();
  std::vector<int> dims(g.n, g.G);
  fftw_complex* buf = fftw_alloc_complex(N);
  for (std::size_t i = 0; i < N; ++i) {
    buf[i][0] = vals[i].real();
    buf[i][1] = vals[i].imag();
  }
  fftw_plan plan = fftw_plan_dft(g.n, dims.data(), buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
  fftw_execute(plan);
  fftw_destroy_plan(plan);
  Fourier out;
  const int half = g.G / 2;
  for (std::size_t idx = 0; idx < N; ++idx) {
    IVec k(g.n);
    std::size_t rest = idx;
    bool ok = true;
    for (int i = g.n - 1; i >= 0; --i) {
      int m = static_cast<int>(rest % g.G);
      rest /= g.G;
      int kk = m < half ? m : m - g.G;
      if (std::abs(kk) >= half) ok = false;
      k[i] = kk;
    }
    if (!ok || l1(k) > K) continue;
    cplx c(buf[idx][0] / static_cast<double>(N), buf[idx][1] / static_cast<double>(N));
    if (c != cplx(0.0)) out[k] = c;
  }
  fftw_free(buf);
  return out;
}

}  // namespace dnlsnf
