#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "napts/model.hpp"
#include "napts/vector_ops.hpp"

namespace napts {

struct AdamParams {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Moment estimates of one subdomain's Adam iteration.
struct CAdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::size_t t = 0;

  CAdamState() = default;
  explicit CAdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

/// min(|raw|_inf, bound) * raw / |raw|_inf, or zero when raw is zero.
/// The result never exceeds `bound` in the infinity norm, including rounding.
std::vector<double> clip_step(std::span<const double> raw, double bound);

enum class LocalStatus { ok, non_finite_gradient };

struct LocalSolveResult {
  std::vector<double> step;             // s_d = sum of the clipped inner steps
  LocalStatus status = LocalStatus::ok;
  std::size_t iterations = 0;           // inner steps actually taken
  std::vector<double> inner_step_norms;
};

using LocalGradientFn = std::function<std::vector<double>(std::span<const double>)>;

/// `ell` Adam iterations on a local parameter vector, each update clipped to
/// delta / ell. The accumulated step is also projected onto the delta ball,
/// which only ever removes floating-point overshoot of the sum.
///
/// With `state` the moments continue from a previous call; otherwise they
/// start from zero. A non-finite gradient stops the solve and returns a zero
/// step with status non_finite_gradient.
LocalSolveResult cadam_solve(const LocalGradientFn& gradient, std::span<const double> theta0,
                             std::size_t ell, double delta, const AdamParams& params,
                             CAdamState* state = nullptr);

/// Subdomain solve driven by the frozen-cache block gradient of block d.
LocalSolveResult cadam_solve(const SequentialNet& net, const BlockCache& cache, std::size_t d,
                             std::span<const double> theta_d0, std::size_t ell, double delta,
                             const AdamParams& params, CAdamState* state = nullptr);

}  // namespace napts
