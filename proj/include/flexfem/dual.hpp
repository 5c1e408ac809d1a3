#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "flexfem/common.hpp"

namespace flexfem::nonlinear {

/// Forward-mode dual number with N derivative directions.
template <int N>
struct Dual {
  double v = 0.0;
  std::array<double, N> d{};

  Dual() = default;
  Dual(double value) : v(value) {}  // NOLINT: implicit lift of constants
  Dual(double value, int direction) : v(value) { d[direction] = 1.0; }

  Dual &operator+=(const Dual &o) {
    v += o.v;
    for (int i = 0; i < N; ++i) d[i] += o.d[i];
    return *this;
  }
  Dual &operator-=(const Dual &o) {
    v -= o.v;
    for (int i = 0; i < N; ++i) d[i] -= o.d[i];
    return *this;
  }
  Dual &operator*=(const Dual &o) {
    for (int i = 0; i < N; ++i) d[i] = d[i] * o.v + v * o.d[i];
    v *= o.v;
    return *this;
  }
  Dual &operator/=(const Dual &o) {
    const double inv = 1.0 / o.v;
    for (int i = 0; i < N; ++i) d[i] = (d[i] - v * inv * o.d[i]) * inv;
    v *= inv;
    return *this;
  }
};

template <int N>
Dual<N> chain(const Dual<N> &a, double value, double derivative) {
  Dual<N> r(value);
  for (int i = 0; i < N; ++i) r.d[i] = derivative * a.d[i];
  return r;
}

template <int N> Dual<N> operator+(Dual<N> a, const Dual<N> &b) { return a += b; }
template <int N> Dual<N> operator-(Dual<N> a, const Dual<N> &b) { return a -= b; }
template <int N> Dual<N> operator*(Dual<N> a, const Dual<N> &b) { return a *= b; }
template <int N> Dual<N> operator/(Dual<N> a, const Dual<N> &b) { return a /= b; }
template <int N> Dual<N> operator+(Dual<N> a, double b) { return a += Dual<N>(b); }
template <int N> Dual<N> operator+(double a, Dual<N> b) { return b += Dual<N>(a); }
template <int N> Dual<N> operator-(Dual<N> a, double b) { return a -= Dual<N>(b); }
template <int N> Dual<N> operator-(double a, const Dual<N> &b) { return Dual<N>(a) -= b; }
template <int N> Dual<N> operator*(Dual<N> a, double b) {
  a.v *= b;
  for (auto &x : a.d) x *= b;
  return a;
}
template <int N> Dual<N> operator*(double a, Dual<N> b) { return b * a; }
template <int N> Dual<N> operator/(Dual<N> a, double b) { return a * (1.0 / b); }
template <int N> Dual<N> operator/(double a, const Dual<N> &b) { return Dual<N>(a) /= b; }
template <int N> Dual<N> operator-(Dual<N> a) { return a * -1.0; }

template <int N> bool operator<(const Dual<N> &a, const Dual<N> &b) { return a.v < b.v; }
template <int N> bool operator>(const Dual<N> &a, const Dual<N> &b) { return a.v > b.v; }

template <int N> Dual<N> sin(const Dual<N> &a) { return chain(a, std::sin(a.v), std::cos(a.v)); }
template <int N> Dual<N> cos(const Dual<N> &a) { return chain(a, std::cos(a.v), -std::sin(a.v)); }
template <int N> Dual<N> exp(const Dual<N> &a) {
  const double e = std::exp(a.v);
  return chain(a, e, e);
}
template <int N> Dual<N> log(const Dual<N> &a) { return chain(a, std::log(a.v), 1.0 / a.v); }
template <int N> Dual<N> sqrt(const Dual<N> &a) {
  const double s = std::sqrt(a.v);
  return chain(a, s, 0.5 / s);
}
template <int N> Dual<N> pow(const Dual<N> &a, double p) {
  return chain(a, std::pow(a.v, p), p * std::pow(a.v, p - 1.0));
}
template <int N> Dual<N> pow(const Dual<N> &a, const Dual<N> &b) {
  return exp(b * log(a));
}
template <int N> Dual<N> abs(const Dual<N> &a) { return a.v < 0 ? -a : a; }

inline double value_of(double x) { return x; }
template <int N> double value_of(const Dual<N> &x) { return x.v; }

/// Row-major m x n Jacobian of F at x. F must accept and return
/// std::vector<Dual<N>> for the chunk width N; the input is seeded N
/// directions at a time.
template <int N = 8, class F>
std::vector<double> jacobian_via_dual(F &&f, const DVector &x, std::size_t *n_rows = nullptr) {
  const std::size_t n = x.size();
  std::vector<double> jac;
  std::size_t m = 0;
  for (std::size_t start = 0; start < n || (n == 0 && start == 0); start += N) {
    std::vector<Dual<N>> xd(n);
    for (std::size_t j = 0; j < n; ++j) {
      xd[j] = Dual<N>(x[j]);
      if (j >= start && j < start + N) xd[j].d[j - start] = 1.0;
    }
    const std::vector<Dual<N>> r = f(xd);
    if (start == 0) {
      m = r.size();
      jac.assign(m * n, 0.0);
    } else if (r.size() != m) {
      throw Error("residual size changed between evaluations");
    }
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = start; j < std::min(n, start + N); ++j)
        jac[i * n + j] = r[i].d[j - start];
    if (n == 0) break;
  }
  if (n_rows) *n_rows = m;
  return jac;
}

}  // namespace flexfem::nonlinear
