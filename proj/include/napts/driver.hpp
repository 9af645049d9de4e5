#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "napts/cadam.hpp"
#include "napts/dataset.hpp"
#include "napts/globalization.hpp"
#include "napts/metrics.hpp"
#include "napts/model.hpp"
#include "napts/partition.hpp"

namespace napts {

/// tr and ntr run only the plain trust-region iteration; the apts family adds
/// the additive subdomain proposal. tr, apts and apts_a use the monotone
/// window (memory 0); apts_a also takes every additive proposal.
enum class Method { tr, ntr, apts, apts_a, napts };

std::string to_string(Method m);
/// Accepts "apts-a" and "apts_a".
Method parse_method(const std::string& name);

struct MethodConfig {
  Method method = Method::napts;
  std::size_t inner_iterations = 3;  // ell
  std::size_t subdomains = 3;        // N
  NtrConstants constants;            // constants.memory is nu
  AdamParams adam;
  bool adam_persist_moments = false;
  bool reeval_reference = false;
  NtrDirection direction = NtrDirection::normalized;
  bool parallel_subdomains = true;
  std::uint64_t seed = 0;

  bool uses_decomposition() const;
  bool always_accept() const { return method == Method::apts_a; }
  /// constants with the preset's memory applied.
  NtrConstants effective_constants() const;
  void validate() const;
};

/// One acceptance test (additive proposal or smoothing step) as seen live.
struct TestTrace {
  int phase = 0;  // 2 = additive proposal, 3 = smoothing step
  bool skipped = false;
  std::size_t history_index = 0;
  WindowSummary window;
  double f_current = 0.0;
  double f_trial = 0.0;
  double predicted_decrease = 0.0;
  double rho_c = 0.0;
  double rho_h = 0.0;
  double rho = 0.0;
  bool passed = false;
  bool successful = false;
  std::size_t rejections = 0;
  double radius_before = 0.0;
  double radius_after = 0.0;
  double step_norm = 0.0;  // inf-norm of the step actually taken
  std::vector<double> candidate_norms;
};

struct IterationTrace {
  std::size_t k = 0;
  double radius = 0.0;           // Delta^k
  double proposal_norm = 0.0;    // |s^k|_inf, 0 for tr/ntr
  std::vector<double> proposal;  // s^k, empty for tr/ntr
  std::vector<double> local_step_norms;
  std::vector<LocalStatus> local_status;
  std::vector<TestTrace> tests;
};

struct IterationOutcome {
  double loss = 0.0;
  bool finite = true;
  RunRecord record;  // epoch/batch/val_acc are left for the caller
  IterationTrace trace;
};

/// Optimizer state carried across outer iterations: radius, history window,
/// optional persistent Adam moments and stored reference iterates.
class Optimizer {
 public:
  Optimizer(const SequentialNet& net, MethodConfig config);

  const MethodConfig& config() const { return config_; }
  const NtrState& state() const { return state_; }
  const ParamPartition& partition() const { return partition_; }

  /// One outer iteration on `batch`; updates theta in place. For the apts
  /// family this is the full three-phase iteration, for tr/ntr a single
  /// trust-region step.
  IterationOutcome iterate(std::vector<double>& theta, const Batch& batch,
                           bool record_timings = true);

 private:
  std::vector<double> additive_proposal(const BlockCache& cache, IterationTrace& trace);
  WindowSummary window_for(double f_current, const Batch& batch) const;
  void remember_iterate(const GlobalStepResult& r, std::span<const double> theta);

  const SequentialNet& net_;
  MethodConfig config_;
  ParamPartition partition_;
  NtrState state_;
  std::vector<CAdamState> moments_;
  std::deque<std::pair<std::size_t, std::vector<double>>> iterates_;
  std::size_t k_ = 0;
};

/// Free-function form of Optimizer::iterate.
IterationOutcome napts_iteration(Optimizer& optimizer, std::vector<double>& theta,
                                 const Batch& batch, bool record_timings = true);

struct TrainingOptions {
  std::size_t epochs = 50;
  std::size_t batch_size = 100;
  bool full_batch = false;
  bool record_timings = true;
  bool keep_traces = false;
  double divergence_threshold = 1e10;
};

enum class RunStatus { completed, diverged, non_finite };
std::string to_string(RunStatus s);

struct TrainingResult {
  std::vector<RunRecord> records;
  std::vector<IterationTrace> traces;
  std::vector<HistoryEntry> history;
  std::vector<double> theta;
  RunStatus status = RunStatus::completed;
  std::string message;
};

/// Epoch x batch loop. Batches are drawn from a per-epoch seeded shuffle of
/// the training rows (or the whole training set with full_batch). Validation
/// accuracy is measured after every iteration.
TrainingResult run_training(const SequentialNet& net, const MethodConfig& config,
                            const Dataset& data, const TrainingOptions& options,
                            std::optional<std::vector<double>> theta0 = std::nullopt);

}  // namespace napts
