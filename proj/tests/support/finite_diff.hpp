#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

namespace napts::testkit {

inline std::vector<double> central_difference(
    const std::function<double(std::span<const double>)>& f, std::span<const double> x,
    double h = 1e-6) {
  std::vector<double> g(x.size());
  std::vector<double> p(x.begin(), x.end());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = p[i];
    p[i] = xi + h;
    const double fp = f(p);
    p[i] = xi - h;
    const double fm = f(p);
    p[i] = xi;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

/// |a - b| / max(|a|, |b|, floor). The floor keeps near-zero coordinates from
/// turning cancellation noise into huge relative errors.
inline double relative_error(double a, double b, double floor = 1e-4) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

}  // namespace napts::testkit
