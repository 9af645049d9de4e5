#include "napts/driver.hpp"

#include <chrono>
#include <cmath>
#include <future>
#include <iostream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "napts/random.hpp"
#include "napts/vector_ops.hpp"

namespace napts {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start, bool enabled) {
  if (!enabled) return 0.0;
  return std::chrono::duration<double>(Clock::now() - start).count();
}

TestTrace make_trace(const GlobalStepResult& r, int phase, double f_current) {
  TestTrace t;
  t.phase = phase;
  t.skipped = r.skipped;
  t.history_index = r.history_index;
  t.window = r.window;
  t.f_current = f_current;
  t.f_trial = r.proposal.trial_objective;
  t.predicted_decrease = r.proposal.predicted_decrease;
  t.rho_c = r.proposal.ratios.current;
  t.rho_h = r.proposal.ratios.historical;
  t.rho = r.proposal.ratios.combined;
  t.passed = r.proposal.passed;
  t.successful = r.successful;
  t.rejections = r.rejections;
  t.radius_before = r.radius_before;
  t.radius_after = r.radius_after;
  t.step_norm = inf_norm(r.step);
  t.candidate_norms = r.candidate_norms;
  return t;
}

void apply_step(std::vector<double>& theta, std::span<const double> step) {
  for (std::size_t i = 0; i < theta.size(); ++i) theta[i] += step[i];
}

constexpr double kUndefinedRatio = -std::numeric_limits<double>::infinity();

}  // namespace

std::string to_string(Method m) {
  switch (m) {
    case Method::tr: return "tr";
    case Method::ntr: return "ntr";
    case Method::apts: return "apts";
    case Method::apts_a: return "apts-a";
    case Method::napts: return "napts";
  }
  return "?";
}

Method parse_method(const std::string& name) {
  if (name == "tr") return Method::tr;
  if (name == "ntr") return Method::ntr;
  if (name == "apts") return Method::apts;
  if (name == "apts-a" || name == "apts_a") return Method::apts_a;
  if (name == "napts") return Method::napts;
  throw std::invalid_argument("unknown method '" + name + "' (tr, ntr, apts, apts-a, napts)");
}

std::string to_string(RunStatus s) {
  switch (s) {
    case RunStatus::completed: return "completed";
    case RunStatus::diverged: return "diverged";
    case RunStatus::non_finite: return "non-finite";
  }
  return "?";
}

bool MethodConfig::uses_decomposition() const {
  return method == Method::apts || method == Method::apts_a || method == Method::napts;
}

NtrConstants MethodConfig::effective_constants() const {
  NtrConstants c = constants;
  if (method == Method::tr || method == Method::apts || method == Method::apts_a) c.memory = 0;
  return c;
}

void MethodConfig::validate() const {
  constants.validate();
  if (uses_decomposition()) {
    if (inner_iterations == 0) throw std::invalid_argument("inner iterations must be >= 1");
    if (subdomains == 0) throw std::invalid_argument("subdomain count must be >= 1");
  }
  if (!(adam.learning_rate > 0.0)) throw std::invalid_argument("Adam learning rate must be > 0");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0 && adam.beta2 >= 0.0 && adam.beta2 < 1.0)) {
    throw std::invalid_argument("Adam betas must lie in [0, 1)");
  }
}

// ---------------------------------------------------------------------------

Optimizer::Optimizer(const SequentialNet& net, MethodConfig config)
    : net_(net),
      config_(std::move(config)),
      partition_(net.partition()),
      state_((config_.validate(), config_.effective_constants())) {
  if (config_.uses_decomposition() && net.block_count() != config_.subdomains) {
    throw std::invalid_argument("network has " + std::to_string(net.block_count()) +
                                " blocks but " + std::to_string(config_.subdomains) +
                                " subdomains were requested");
  }
  if (config_.adam_persist_moments) {
    for (std::size_t d = 0; d < partition_.cell_count(); ++d)
      moments_.emplace_back(partition_.cell_size(d));
  }
}

WindowSummary Optimizer::window_for(double f_current, const Batch& batch) const {
  WindowSummary w = state_.history().summarize(f_current);
  if (config_.reeval_reference && w.reference != w.current) {
    for (const auto& [index, theta] : iterates_) {
      if (index == w.reference) {
        w.reference_objective = net_.loss(theta, batch);
        break;
      }
    }
  }
  return w;
}

void Optimizer::remember_iterate(const GlobalStepResult& r, std::span<const double> theta) {
  if (!config_.reeval_reference) return;
  if (r.successful) iterates_.emplace_back(r.history_index, std::vector<double>(theta.begin(), theta.end()));
  const std::size_t next = state_.history().next_index();
  const std::size_t memory = state_.history().memory();
  const std::size_t lower = next > memory ? next - memory : 0;
  while (!iterates_.empty() && iterates_.front().first < lower) iterates_.pop_front();
}

std::vector<double> Optimizer::additive_proposal(const BlockCache& cache, IterationTrace& trace) {
  const std::size_t blocks = partition_.cell_count();
  const double delta = state_.radius();
  std::vector<LocalSolveResult> local(blocks);
  auto solve = [&](std::size_t d) {
    const std::vector<double> theta_d = partition_.restrict(cache.origin, d);
    local[d] = cadam_solve(net_, cache, d, theta_d, config_.inner_iterations, delta, config_.adam,
                           config_.adam_persist_moments ? &moments_[d] : nullptr);
  };
  if (config_.parallel_subdomains && blocks > 1) {
    // Each task reads the shared immutable cache and writes only local[d].
    std::vector<std::future<void>> tasks;
    for (std::size_t d = 1; d < blocks; ++d) tasks.push_back(std::async(std::launch::async, solve, d));
    solve(0);
    for (auto& t : tasks) t.get();
  } else {
    for (std::size_t d = 0; d < blocks; ++d) solve(d);
  }
  std::vector<std::vector<double>> steps;
  for (auto& r : local) {
    trace.local_step_norms.push_back(inf_norm(r.step));
    trace.local_status.push_back(r.status);
    steps.push_back(std::move(r.step));
  }
  return partition_.lift_sum(steps);
}

IterationOutcome Optimizer::iterate(std::vector<double>& theta, const Batch& batch,
                                    bool record_timings) {
  IterationOutcome out;
  out.trace.k = k_;
  out.trace.radius = state_.radius();
  RunRecord& rec = out.record;
  rec.k = k_;
  rec.delta = state_.radius();
  rec.rho_c = rec.rho_h = kUndefinedRatio;
  const ObjectiveFn objective = [&](std::span<const double> p) { return net_.loss(p, batch); };

  if (!config_.uses_decomposition()) {
    const auto t0 = Clock::now();
    const Evaluation e = value_and_gradient(net_, theta, batch);
    out.loss = e.loss;
    if (!std::isfinite(e.loss)) {
      out.finite = false;
      return out;
    }
    const WindowSummary w = window_for(e.loss, batch);
    const GlobalStepResult r =
        ntr_step(theta, e.loss, e.gradient, state_, objective, config_.direction, &w);
    remember_iterate(r, theta);
    apply_step(theta, r.step);
    rec.t_phase3 = seconds_since(t0, record_timings);
    out.trace.tests.push_back(make_trace(r, 3, e.loss));
    if (!r.skipped) {
      rec.rho_c = r.proposal.ratios.current;
      rec.rho_h = r.proposal.ratios.historical;
    }
    rec.accepted = r.proposal_accepted;
    rec.rejections = r.rejections;
    rec.loss = e.loss;
    ++k_;
    return out;
  }

  // Phase 1: global pass, then independent subdomain solves on the frozen cache.
  const auto t1 = Clock::now();
  const auto cache = evaluate_with_cache(net_, theta, batch);
  out.loss = cache->loss;
  rec.loss = cache->loss;
  if (!std::isfinite(cache->loss)) {
    out.finite = false;
    return out;
  }
  const std::vector<double> proposal = additive_proposal(*cache, out.trace);
  out.trace.proposal_norm = inf_norm(proposal);
  out.trace.proposal = proposal;
  rec.t_phase1 = seconds_since(t1, record_timings);

  // Phase 2: accept the additive proposal or fall back to a correction.
  const auto t2 = Clock::now();
  const WindowSummary w2 = window_for(cache->loss, batch);
  const GlobalStepResult r2 = globalize_proposal(theta, cache->loss, cache->gradient, proposal,
                                                 state_, objective, config_.always_accept(), &w2);
  remember_iterate(r2, theta);
  apply_step(theta, r2.step);
  rec.t_phase2 = seconds_since(t2, record_timings);
  out.trace.tests.push_back(make_trace(r2, 2, cache->loss));
  rec.rho_c = r2.proposal.ratios.current;
  rec.rho_h = r2.proposal.ratios.historical;
  rec.accepted = r2.proposal_accepted;

  // Phase 3: smoothing trust-region step with a fresh gradient.
  const auto t3 = Clock::now();
  const Evaluation e = value_and_gradient(net_, theta, batch);
  if (!std::isfinite(e.loss)) {
    out.loss = e.loss;
    out.finite = false;
    return out;
  }
  const WindowSummary w3 = window_for(e.loss, batch);
  const GlobalStepResult r3 =
      ntr_step(theta, e.loss, e.gradient, state_, objective, config_.direction, &w3);
  remember_iterate(r3, theta);
  apply_step(theta, r3.step);
  rec.t_phase3 = seconds_since(t3, record_timings);
  out.trace.tests.push_back(make_trace(r3, 3, e.loss));
  rec.rejections = r2.rejections + r3.rejections;
  ++k_;
  return out;
}

IterationOutcome napts_iteration(Optimizer& optimizer, std::vector<double>& theta,
                                 const Batch& batch, bool record_timings) {
  return optimizer.iterate(theta, batch, record_timings);
}

// ---------------------------------------------------------------------------

TrainingResult run_training(const SequentialNet& net, const MethodConfig& config,
                            const Dataset& data, const TrainingOptions& options,
                            std::optional<std::vector<double>> theta0) {
  if (!options.full_batch && options.batch_size == 0) {
    throw std::invalid_argument("batch size must be >= 1");
  }
  if (data.train_size() == 0) throw std::invalid_argument("training set is empty");
  if (data.features != net.input_width()) {
    throw std::invalid_argument("dataset has " + std::to_string(data.features) +
                                " features but the network expects " +
                                std::to_string(net.input_width()));
  }

  TrainingResult result;
  result.theta = theta0 ? std::move(*theta0) : net.initial_parameters(derive_seed(config.seed, 1));
  if (result.theta.size() != net.parameter_count()) {
    throw std::invalid_argument("initial parameters have the wrong length");
  }
  Optimizer optimizer(net, config);

  const std::size_t m = data.train_size();
  const std::size_t batch_size = options.full_batch ? m : std::min(options.batch_size, m);
  const std::size_t batches = (m + batch_size - 1) / batch_size;
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::optional<Batch> whole;
  if (options.full_batch) whole = make_batch(data.train_inputs, data.train_labels, order, 0);

  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    if (!options.full_batch) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      Rng rng(derive_seed(config.seed, 1000 + epoch));
      rng.shuffle(std::span<std::size_t>(order));
    }
    for (std::size_t b = 0; b < batches; ++b) {
      Batch local;
      if (!options.full_batch) {
        const std::size_t begin = b * batch_size;
        const std::size_t end = std::min(m, begin + batch_size);
        local = make_batch(data.train_inputs, data.train_labels,
                           std::span<const std::size_t>(order).subspan(begin, end - begin),
                           epoch * batches + b);
      }
      const Batch& batch = options.full_batch ? *whole : local;

      IterationOutcome out = optimizer.iterate(result.theta, batch, options.record_timings);
      if (!out.finite) {
        result.status = RunStatus::non_finite;
        result.message = "non-finite loss at iteration " + std::to_string(out.record.k) +
                         " (epoch " + std::to_string(epoch) + ", batch " + std::to_string(b) +
                         "), radius " + std::to_string(optimizer.state().radius()) +
                         ", |theta|_inf " + std::to_string(inf_norm(result.theta));
        std::cerr << "napts: " << result.message << '\n';
        result.history = optimizer.state().history().log();
        return result;
      }
      out.record.epoch = epoch;
      out.record.batch = b;
      out.record.val_acc =
          data.val_size() ? net.accuracy(result.theta, data.val_inputs, data.val_labels) : 0.0;
      result.records.push_back(out.record);
      if (options.keep_traces) result.traces.push_back(std::move(out.trace));
      if (out.loss > options.divergence_threshold) {
        result.status = RunStatus::diverged;
        result.message = "loss " + std::to_string(out.loss) + " exceeded " +
                         std::to_string(options.divergence_threshold) + " at iteration " +
                         std::to_string(out.record.k);
        result.history = optimizer.state().history().log();
        return result;
      }
    }
  }
  result.history = optimizer.state().history().log();
  return result;
}

}  // namespace napts
