#pragma once

// Test-only dense linear algebra used as an independent oracle.

#include <cmath>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

namespace oracle {

/// Solves the row-major n x n system by Gaussian elimination with partial
/// pivoting.
inline std::vector<double> dense_solve(std::vector<double> a,
                                       std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(a[i * n + k]) > std::abs(a[piv * n + k])) piv = i;
    if (a[piv * n + k] == 0.0) throw std::runtime_error("singular matrix");
    if (piv != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a[k * n + j], a[piv * n + j]);
      std::swap(b[k], b[piv]);
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = a[i * n + k] / a[k * n + k];
      for (std::size_t j = k; j < n; ++j) a[i * n + j] -= f * a[k * n + j];
      b[i] -= f * b[k];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= a[i * n + j] * x[j];
    x[i] = s / a[i * n + i];
  }
  return x;
}

inline std::vector<double> dense_matvec(const std::vector<double> &a,
                                        const std::vector<double> &x) {
  const std::size_t n = x.size();
  const std::size_t m = a.size() / n;
  std::vector<double> y(m, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) y[i] += a[i * n + j] * x[j];
  return y;
}

inline double max_abs_diff(const std::vector<double> &a,
                           const std::vector<double> &b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

/// Sparse-ish random SPD matrix: random symmetric couplings plus a dominant
/// diagonal.
inline std::vector<double> random_spd(std::size_t n, std::mt19937 &rng,
                                      double density = 0.2) {
  std::uniform_real_distribution<double> u(-1.0, 1.0), coin(0.0, 1.0);
  std::vector<double> a(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (coin(rng) < density) a[i * n + j] = a[j * n + i] = u(rng);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += std::abs(a[i * n + j]);
    a[i * n + i] = s + 0.5 + coin(rng);
  }
  return a;
}

/// Random nonsymmetric, diagonally dominant matrix.
inline std::vector<double> random_nonsymmetric(std::size_t n, std::mt19937 &rng,
                                               double density = 0.2) {
  std::uniform_real_distribution<double> u(-1.0, 1.0), coin(0.0, 1.0);
  std::vector<double> a(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && coin(rng) < density) a[i * n + j] = u(rng);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += std::abs(a[i * n + j]);
    a[i * n + i] = s + 0.5 + coin(rng);
  }
  return a;
}

inline std::vector<double> random_vector(std::size_t n, std::mt19937 &rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto &x : v) x = u(rng);
  return v;
}

/// Row-major 1D Laplacian tridiag(-1, 2, -1).
inline std::vector<double> laplacian_1d(std::size_t n) {
  std::vector<double> a(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    a[i * n + i] = 2.0;
    if (i > 0) a[i * n + i - 1] = -1.0;
    if (i + 1 < n) a[i * n + i + 1] = -1.0;
  }
  return a;
}

/// Row-major upwinded advection-diffusion on an m x m grid (n = m^2).
inline std::vector<double> advection_diffusion_2d(std::size_t m, double bx,
                                                  double by) {
  const std::size_t n = m * m;
  const double h = 1.0 / (m + 1);
  std::vector<double> a(n * n, 0.0);
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t r = i + m * j;
      a[r * n + r] = 4.0 / (h * h) + (bx + by) / h;
      if (i > 0) a[r * n + r - 1] = -1.0 / (h * h) - bx / h;
      if (i + 1 < m) a[r * n + r + 1] = -1.0 / (h * h);
      if (j > 0) a[r * n + r - m] = -1.0 / (h * h) - by / h;
      if (j + 1 < m) a[r * n + r + m] = -1.0 / (h * h);
    }
  return a;
}

}  // namespace oracle
