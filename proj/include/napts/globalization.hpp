#pragma once

#include <array>
#include <cstddef>
#include <deque>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace napts {

/// Trust-region constants shared by every acceptance test of one optimizer.
struct NtrConstants {
  double eta1 = 0.1;        // acceptance threshold
  double eta2 = 0.75;       // expansion threshold
  double gamma_dec = 0.5;
  double gamma_inc = 2.0;
  double delta0 = 0.1;
  double delta_min = 1e-6;
  double delta_max = 1.0;
  std::size_t memory = 100;  // nu; 0 gives the monotone test

  /// Throws std::invalid_argument naming the first violated constraint.
  void validate() const;
};

/// Predicted decreases at or below this are treated as failed tests.
inline constexpr double kMinPredictedDecrease = 1e-14;

using ObjectiveFn = std::function<double(std::span<const double>)>;

/// m(0) - m(s) = -grad . s for the first-order model.
double model_decrease(std::span<const double> grad, std::span<const double> step);

struct HistoryEntry {
  std::size_t index = 0;
  double objective = 0.0;           // f at the start of iteration `index`
  double predicted_decrease = 0.0;  // of the step taken; 0 when unsuccessful
  bool successful = false;
};

/// Window quantities for the test at iteration `current`.
struct WindowSummary {
  std::size_t current = 0;
  /// Successful indices j with max(0, current - nu) <= j < current.
  std::vector<std::size_t> members;
  /// Arg-max of the recorded objective over members and `current` itself,
  /// ties resolved toward the most recent index.
  std::size_t reference = 0;
  double reference_objective = 0.0;
  /// Sum of predicted decreases of members j >= reference.
  double history_decrease = 0.0;
};

/// Log of acceptance tests plus the sliding window over its successes.
///
/// The window keeps the successful indices still inside the memory and a
/// monotone deque of candidate reference indices, so a summary costs
/// O(window) and a record amortized O(1).
class NonmonotoneHistory {
 public:
  explicit NonmonotoneHistory(std::size_t memory) : memory_(memory) {}

  std::size_t memory() const { return memory_; }
  std::size_t next_index() const { return log_.size(); }
  const std::vector<HistoryEntry>& log() const { return log_; }

  WindowSummary summarize(double current_objective) const;

  /// Appends the test for index next_index(). A successful entry must carry a
  /// predicted decrease above kMinPredictedDecrease.
  void record(double objective, double predicted_decrease, bool successful);

 private:
  std::size_t memory_;
  std::vector<HistoryEntry> log_;
  std::deque<std::size_t> successes_;
  std::deque<std::size_t> maxima_;  // strictly decreasing objective front to back
};

struct AgreementRatios {
  double current = 0.0;     // rho_c
  double historical = 0.0;  // rho_h
  double combined = 0.0;    // max of the two
};

/// rho_c = (f_k - f_trial) / pred, rho_h = (f_ref - f_trial) / (sigma_h + pred).
/// Empty when an input is non-finite or pred <= kMinPredictedDecrease; callers
/// treat that as a rejected step.
std::optional<AgreementRatios> agreement_ratios(double f_current, double f_trial,
                                                double f_reference, double predicted_decrease,
                                                double history_decrease);

/// Expand when rho >= eta2, keep when rho is in [eta1, eta2), shrink below
/// eta1; the result is clamped to [delta_min, delta_max].
double radius_update(double delta, double rho, const NtrConstants& constants);

struct TrialOutcome {
  double predicted_decrease = 0.0;
  double trial_objective = 0.0;
  /// All three are -inf when the ratios are undefined.
  AgreementRatios ratios;
  bool passed = false;  // ratios.combined > eta1
};

/// Evaluates f(theta + step) and the agreement ratios against `window`.
TrialOutcome test_step(std::span<const double> theta, std::span<const double> step,
                       std::span<const double> grad, double f_current,
                       const WindowSummary& window, const NtrConstants& constants,
                       const ObjectiveFn& objective);

struct CorrectionCoefficients {
  double alpha;
  double beta;
};

/// Tried in this order by correction_loop.
inline constexpr std::array<CorrectionCoefficients, 5> kCorrectionSchedule{{
    {0.8, 1.0 / 2.0},
    {0.6, 1.0 / 4.0},
    {0.4, 1.0 / 8.0},
    {0.2, 1.0 / 16.0},
    {0.0, 1.0 / 32.0},
}};

/// beta * ((1 - alpha) * (-delta * grad / |grad|_inf) + alpha * proposal).
std::vector<double> correction_candidate(std::span<const double> grad,
                                         std::span<const double> proposal, double delta,
                                         CorrectionCoefficients coefficients);

struct CorrectionResult {
  std::vector<double> step;
  bool accepted = false;
  /// Failed tests, counting the rejected proposal that triggered the loop.
  std::size_t rejections = 1;
  std::size_t attempts = 0;
  TrialOutcome outcome;  // of the returned candidate
  std::vector<double> candidate_norms;
};

/// Runs through kCorrectionSchedule and returns the first candidate that
/// passes the test, or the last candidate if none does. A zero gradient
/// yields a zero step without any evaluation.
CorrectionResult correction_loop(std::span<const double> theta, std::span<const double> proposal,
                                 std::span<const double> grad, double delta, double f_current,
                                 const WindowSummary& window, const NtrConstants& constants,
                                 const ObjectiveFn& objective);

/// Radius and history of one optimizer run.
class NtrState {
 public:
  explicit NtrState(NtrConstants constants);

  const NtrConstants& constants() const { return constants_; }
  double radius() const { return radius_; }
  void set_radius(double delta) { radius_ = delta; }
  NonmonotoneHistory& history() { return history_; }
  const NonmonotoneHistory& history() const { return history_; }

 private:
  NtrConstants constants_;
  double radius_;
  NonmonotoneHistory history_;
};

/// Everything one acceptance test decided.
struct GlobalStepResult {
  std::vector<double> step;  // step actually taken
  bool skipped = false;      // zero gradient: nothing tested, nothing recorded
  bool proposal_accepted = false;
  bool successful = false;   // flag recorded in the history
  std::size_t rejections = 0;
  std::size_t history_index = 0;
  TrialOutcome proposal;
  double taken_predicted_decrease = 0.0;
  double taken_objective = 0.0;
  WindowSummary window;
  double radius_before = 0.0;
  double radius_after = 0.0;
  std::vector<double> candidate_norms;
};

/// Accept-or-correct test of an externally computed proposal (the additive
/// step). With `always_accept` the proposal is taken regardless, but the
/// ratios still drive the radius and the success flag.
GlobalStepResult globalize_proposal(std::span<const double> theta, double f_current,
                                    std::span<const double> grad,
                                    std::span<const double> proposal, NtrState& state,
                                    const ObjectiveFn& objective, bool always_accept = false,
                                    const WindowSummary* window = nullptr);

enum class NtrDirection { normalized, sign };

std::string to_string(NtrDirection d);
NtrDirection parse_ntr_direction(const std::string& name);

/// Steepest-descent step scaled to the trust-region boundary.
std::vector<double> steepest_step(std::span<const double> grad, double delta,
                                  NtrDirection direction);

/// Plain non-monotone trust-region iteration on the full parameter vector.
/// A rejected step leaves theta in place; a zero gradient is a no-op.
GlobalStepResult ntr_step(std::span<const double> theta, double f_current,
                          std::span<const double> grad, NtrState& state,
                          const ObjectiveFn& objective,
                          NtrDirection direction = NtrDirection::normalized,
                          const WindowSummary* window = nullptr);

}  // namespace napts
