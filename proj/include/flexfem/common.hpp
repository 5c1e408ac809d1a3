#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace flexfem {

/// Physical coordinates. Unused trailing components are zero.
using Point = std::array<double, 3>;

/// Dense vector of reals; the common currency of every solver.
using DVector = std::vector<double>;

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline double distance(const Point &a, const Point &b) {
  double s = 0.0;
  for (int i = 0; i < 3; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

}  // namespace flexfem
