#pragma once

// Helpers shared by the tutorial implementations.

#include <cmath>
#include <numbers>
#include <string>

#include "flexfem/tutorials.hpp"

namespace flexfem::tutorials::detail {

constexpr double pi = std::numbers::pi;

/// prod_i sin(pi x_i) over the first `dim` axes.
inline double sine_product(const Point &x, int dim) {
  double v = 1.0;
  for (int d = 0; d < dim; ++d) v *= std::sin(pi * x[d]);
  return v;
}

inline Point sine_product_gradient(const Point &x, int dim) {
  Point g{};
  for (int k = 0; k < dim; ++k) {
    double v = pi * std::cos(pi * x[k]);
    for (int d = 0; d < dim; ++d)
      if (d != k) v *= std::sin(pi * x[d]);
    g[k] = v;
  }
  return g;
}

/// Dirichlet data on every boundary face.
inline fem::Constraints boundary_constraints(const fem::FeSpace &space,
                                             const fem::ScalarFunction &g) {
  fem::Constraints c;
  for (int tag = 0; tag < 2 * space.dim(); ++tag) c.merge(fem::dirichlet_constraints(space, tag, g));
  return c;
}

inline fem::Constraints zero_boundary(const fem::FeSpace &space) {
  return boundary_constraints(space, [](const Point &) { return 0.0; });
}

inline nonlinear::NewtonConfig newton_config(int max_iterations, double residual,
                                             double increment) {
  nonlinear::NewtonConfig c;
  c.max_iterations = max_iterations;
  c.tolerance_residual = residual;
  c.tolerance_increment = increment;
  return c;
}

inline double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

inline double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

inline std::string step_file(const std::string &stem, int step, const std::string &ext) {
  return stem + "_" + std::to_string(step) + ext;
}

}  // namespace flexfem::tutorials::detail
