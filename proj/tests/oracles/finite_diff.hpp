#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

namespace oracle {

// Central difference of f around the current value of *x, which is restored.
inline double central_diff(double* x, double h, const std::function<double()>& f) {
  const double x0 = *x;
  *x = x0 + h;
  const double fp = f();
  *x = x0 - h;
  const double fm = f();
  *x = x0;
  return (fp - fm) / (2.0 * h);
}

// |a - b| / max(|a|, |b|, floor): relative error that stays meaningful when
// both values are near zero.
inline double rel_err(double a, double b, double floor) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

}  // namespace oracle
