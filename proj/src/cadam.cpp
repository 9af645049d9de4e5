#include "napts/cadam.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace napts {

std::vector<double> clip_step(std::span<const double> raw, double bound) {
  if (!(bound > 0.0)) {
    throw std::invalid_argument("clip_step: bound must be positive, got " + std::to_string(bound));
  }
  std::vector<double> out(raw.begin(), raw.end());
  const double norm = inf_norm(raw);
  if (norm == 0.0 || norm <= bound) return out;
  // raw_i / norm lies in [-1, 1] exactly, so every entry stays within bound.
  for (double& x : out) x = x / norm * bound;
  return out;
}

LocalSolveResult cadam_solve(const LocalGradientFn& gradient, std::span<const double> theta0,
                             std::size_t ell, double delta, const AdamParams& params,
                             CAdamState* state) {
  if (ell == 0) throw std::invalid_argument("cadam_solve: need at least one inner iteration");
  if (!(delta > 0.0)) throw std::invalid_argument("cadam_solve: radius must be positive");
  const std::size_t n = theta0.size();
  CAdamState local(n);
  CAdamState& s = state ? *state : local;
  if (s.m.size() != n || s.v.size() != n) s = CAdamState(n);

  const double per_step = delta / static_cast<double>(ell);
  std::vector<double> theta(theta0.begin(), theta0.end());
  LocalSolveResult result;
  result.step.assign(n, 0.0);
  std::vector<double> raw(n);

  for (std::size_t t = 0; t < ell; ++t) {
    const std::vector<double> g = gradient(theta);
    if (g.size() != n) {
      throw std::invalid_argument("cadam_solve: gradient of length " + std::to_string(g.size()) +
                                  ", expected " + std::to_string(n));
    }
    if (!all_finite(g)) {
      result.step.assign(n, 0.0);
      result.status = LocalStatus::non_finite_gradient;
      return result;
    }
    ++s.t;
    const double bias1 = 1.0 - std::pow(params.beta1, static_cast<double>(s.t));
    const double bias2 = 1.0 - std::pow(params.beta2, static_cast<double>(s.t));
    for (std::size_t i = 0; i < n; ++i) {
      s.m[i] = params.beta1 * s.m[i] + (1.0 - params.beta1) * g[i];
      s.v[i] = params.beta2 * s.v[i] + (1.0 - params.beta2) * g[i] * g[i];
      const double m_hat = s.m[i] / bias1;
      const double v_hat = s.v[i] / bias2;
      raw[i] = -params.learning_rate * m_hat / (std::sqrt(v_hat) + params.epsilon);
    }
    const std::vector<double> step = clip_step(raw, per_step);
    for (std::size_t i = 0; i < n; ++i) {
      theta[i] += step[i];
      result.step[i] += step[i];
    }
    result.inner_step_norms.push_back(inf_norm(step));
    ++result.iterations;
  }
  result.step = clip_step(result.step, delta);
  return result;
}

LocalSolveResult cadam_solve(const SequentialNet& net, const BlockCache& cache, std::size_t d,
                             std::span<const double> theta_d0, std::size_t ell, double delta,
                             const AdamParams& params, CAdamState* state) {
  return cadam_solve(
      [&](std::span<const double> theta_d) {
        return local_block_gradient(net, cache, d, theta_d);
      },
      theta_d0, ell, delta, params, state);
}

}  // namespace napts
