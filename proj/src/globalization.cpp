#include "napts/globalization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "napts/vector_ops.hpp"

namespace napts {

namespace {

constexpr double kUndefined = -std::numeric_limits<double>::infinity();

std::vector<double> add(std::span<const double> a, std::span<const double> b) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

void require_same_length(std::span<const double> a, std::span<const double> b, const char* what) {
  if (a.size() != b.size()) {
    throw std::invalid_argument(std::string(what) + ": vectors of length " +
                                std::to_string(a.size()) + " and " + std::to_string(b.size()));
  }
}

}  // namespace

void NtrConstants::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("NTR constants: " + msg); };
  if (!(eta1 > 0.0 && eta1 <= eta2 && eta2 < 1.0)) fail("need 0 < eta1 <= eta2 < 1");
  if (!(gamma_dec > 0.0 && gamma_dec < 1.0)) fail("need 0 < gamma_dec < 1");
  if (!(gamma_inc > 1.0)) fail("need gamma_inc > 1");
  if (!(delta_min > 0.0 && delta_min <= delta_max)) fail("need 0 < delta_min <= delta_max");
  if (!(delta0 >= delta_min && delta0 <= delta_max)) fail("need delta_min <= delta0 <= delta_max");
}

double model_decrease(std::span<const double> grad, std::span<const double> step) {
  require_same_length(grad, step, "model_decrease");
  double dot = 0.0;
  for (std::size_t i = 0; i < grad.size(); ++i) dot += grad[i] * step[i];
  return -dot;
}

// --- history window ----------------------------------------------------------

WindowSummary NonmonotoneHistory::summarize(double current_objective) const {
  WindowSummary w;
  w.current = log_.size();
  w.members.assign(successes_.begin(), successes_.end());
  w.reference = w.current;
  w.reference_objective = current_objective;
  if (!maxima_.empty() && log_[maxima_.front()].objective > current_objective) {
    w.reference = maxima_.front();
    w.reference_objective = log_[w.reference].objective;
  }
  for (std::size_t j : successes_)
    if (j >= w.reference) w.history_decrease += log_[j].predicted_decrease;
  return w;
}

void NonmonotoneHistory::record(double objective, double predicted_decrease, bool successful) {
  if (successful && !(predicted_decrease > kMinPredictedDecrease)) {
    throw std::invalid_argument("history: a successful step needs a positive predicted decrease");
  }
  const std::size_t j = log_.size();
  log_.push_back({j, objective, successful ? predicted_decrease : 0.0, successful});
  if (successful) {
    successes_.push_back(j);
    while (!maxima_.empty() && log_[maxima_.back()].objective <= objective) maxima_.pop_back();
    maxima_.push_back(j);
  }
  const std::size_t next = log_.size();
  const std::size_t lower = next > memory_ ? next - memory_ : 0;
  while (!successes_.empty() && successes_.front() < lower) successes_.pop_front();
  while (!maxima_.empty() && maxima_.front() < lower) maxima_.pop_front();
}

// --- ratios and radius ---------------------------------------------------------

std::optional<AgreementRatios> agreement_ratios(double f_current, double f_trial,
                                                double f_reference, double predicted_decrease,
                                                double history_decrease) {
  for (double x : {f_current, f_trial, f_reference, predicted_decrease, history_decrease})
    if (!std::isfinite(x)) return std::nullopt;
  if (!(predicted_decrease > kMinPredictedDecrease)) return std::nullopt;
  AgreementRatios r;
  r.current = (f_current - f_trial) / predicted_decrease;
  r.historical = (f_reference - f_trial) / (history_decrease + predicted_decrease);
  r.combined = std::max(r.current, r.historical);
  return r;
}

double radius_update(double delta, double rho, const NtrConstants& c) {
  double next = delta;
  if (rho >= c.eta2) {
    next = c.gamma_inc * delta;
  } else if (rho < c.eta1) {
    next = c.gamma_dec * delta;
  }
  return std::clamp(next, c.delta_min, c.delta_max);
}

TrialOutcome test_step(std::span<const double> theta, std::span<const double> step,
                       std::span<const double> grad, double f_current,
                       const WindowSummary& window, const NtrConstants& constants,
                       const ObjectiveFn& objective) {
  require_same_length(theta, step, "test_step");
  TrialOutcome out;
  out.predicted_decrease = model_decrease(grad, step);
  out.trial_objective = objective(add(theta, step));
  const auto ratios = agreement_ratios(f_current, out.trial_objective, window.reference_objective,
                                       out.predicted_decrease, window.history_decrease);
  out.ratios = ratios.value_or(AgreementRatios{kUndefined, kUndefined, kUndefined});
  out.passed = out.ratios.combined > constants.eta1;
  return out;
}

// --- correction loop -----------------------------------------------------------

std::vector<double> correction_candidate(std::span<const double> grad,
                                         std::span<const double> proposal, double delta,
                                         CorrectionCoefficients k) {
  require_same_length(grad, proposal, "correction_candidate");
  std::vector<double> c(grad.size(), 0.0);
  const double gnorm = inf_norm(grad);
  if (gnorm == 0.0) return c;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double descent = -delta * (grad[i] / gnorm);
    c[i] = k.beta * ((1.0 - k.alpha) * descent + k.alpha * proposal[i]);
  }
  return c;
}

CorrectionResult correction_loop(std::span<const double> theta, std::span<const double> proposal,
                                 std::span<const double> grad, double delta, double f_current,
                                 const WindowSummary& window, const NtrConstants& constants,
                                 const ObjectiveFn& objective) {
  CorrectionResult result;
  if (inf_norm(grad) == 0.0) {
    result.step.assign(theta.size(), 0.0);
    result.outcome.trial_objective = f_current;
    result.outcome.ratios = {kUndefined, kUndefined, kUndefined};
    return result;
  }
  for (const CorrectionCoefficients& k : kCorrectionSchedule) {
    std::vector<double> c = correction_candidate(grad, proposal, delta, k);
    result.candidate_norms.push_back(inf_norm(c));
    result.outcome = test_step(theta, c, grad, f_current, window, constants, objective);
    ++result.attempts;
    result.step = std::move(c);
    if (result.outcome.passed) {
      result.accepted = true;
      return result;
    }
    ++result.rejections;
  }
  return result;
}

// --- state and full tests ------------------------------------------------------

NtrState::NtrState(NtrConstants constants)
    : constants_(constants), radius_(constants.delta0), history_(constants.memory) {
  constants_.validate();
}

GlobalStepResult globalize_proposal(std::span<const double> theta, double f_current,
                                    std::span<const double> grad,
                                    std::span<const double> proposal, NtrState& state,
                                    const ObjectiveFn& objective, bool always_accept,
                                    const WindowSummary* window) {
  const NtrConstants& c = state.constants();
  GlobalStepResult r;
  r.window = window ? *window : state.history().summarize(f_current);
  r.history_index = state.history().next_index();
  r.radius_before = state.radius();
  r.proposal = test_step(theta, proposal, grad, f_current, r.window, c, objective);

  if (always_accept || r.proposal.passed) {
    r.step.assign(proposal.begin(), proposal.end());
    r.proposal_accepted = r.proposal.passed;
    r.successful = r.proposal.passed;
    r.taken_predicted_decrease = r.proposal.predicted_decrease;
    r.taken_objective = r.proposal.trial_objective;
  } else {
    CorrectionResult corr =
        correction_loop(theta, proposal, grad, r.radius_before, f_current, r.window, c, objective);
    r.step = std::move(corr.step);
    r.successful = corr.accepted;
    r.rejections = corr.rejections;
    r.taken_predicted_decrease = model_decrease(grad, r.step);
    r.taken_objective = corr.outcome.trial_objective;
    r.candidate_norms = std::move(corr.candidate_norms);
  }
  r.radius_after = radius_update(r.radius_before, r.proposal.ratios.combined, c);
  state.set_radius(r.radius_after);
  state.history().record(f_current, r.successful ? r.taken_predicted_decrease : 0.0,
                         r.successful);
  return r;
}

std::string to_string(NtrDirection d) {
  return d == NtrDirection::sign ? "sign" : "normalized";
}

NtrDirection parse_ntr_direction(const std::string& name) {
  if (name == "normalized") return NtrDirection::normalized;
  if (name == "sign") return NtrDirection::sign;
  throw std::invalid_argument("unknown NTR direction '" + name + "' (normalized, sign)");
}

std::vector<double> steepest_step(std::span<const double> grad, double delta,
                                  NtrDirection direction) {
  std::vector<double> s(grad.size(), 0.0);
  const double gnorm = inf_norm(grad);
  if (gnorm == 0.0) return s;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (direction == NtrDirection::normalized) {
      s[i] = -delta * (grad[i] / gnorm);
    } else {
      s[i] = grad[i] > 0.0 ? -delta : (grad[i] < 0.0 ? delta : 0.0);
    }
  }
  return s;
}

GlobalStepResult ntr_step(std::span<const double> theta, double f_current,
                          std::span<const double> grad, NtrState& state,
                          const ObjectiveFn& objective, NtrDirection direction,
                          const WindowSummary* window) {
  GlobalStepResult r;
  r.radius_before = state.radius();
  r.radius_after = state.radius();
  r.history_index = state.history().next_index();
  r.taken_objective = f_current;
  if (inf_norm(grad) == 0.0) {
    r.skipped = true;
    r.step.assign(theta.size(), 0.0);
    return r;
  }
  const NtrConstants& c = state.constants();
  r.window = window ? *window : state.history().summarize(f_current);
  const std::vector<double> s = steepest_step(grad, r.radius_before, direction);
  r.proposal = test_step(theta, s, grad, f_current, r.window, c, objective);
  if (r.proposal.passed) {
    r.step = s;
    r.proposal_accepted = true;
    r.successful = true;
    r.taken_predicted_decrease = r.proposal.predicted_decrease;
    r.taken_objective = r.proposal.trial_objective;
  } else {
    r.step.assign(theta.size(), 0.0);
    r.rejections = 1;
  }
  r.radius_after = radius_update(r.radius_before, r.proposal.ratios.combined, c);
  state.set_radius(r.radius_after);
  state.history().record(f_current, r.successful ? r.taken_predicted_decrease : 0.0,
                         r.successful);
  return r;
}

}  // namespace napts
