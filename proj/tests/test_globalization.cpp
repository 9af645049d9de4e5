#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <stdexcept>

#include "napts/globalization.hpp"
#include "napts/random.hpp"
#include "napts/vector_ops.hpp"
#include "support/monotone_tr.hpp"
#include "support/replay_oracle.hpp"

using namespace napts;

namespace {

NtrConstants with_memory(std::size_t nu) {
  NtrConstants c;
  c.memory = nu;
  return c;
}

double bowl(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += 0.5 * v * v;
  return s;
}

double rosenbrock(std::span<const double> x) {
  return 100.0 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1.0 - x[0], 2);
}

std::vector<double> rosenbrock_grad(std::span<const double> x) {
  return {-400.0 * x[0] * (x[1] - x[0] * x[0]) - 2.0 * (1.0 - x[0]),
          200.0 * (x[1] - x[0] * x[0])};
}

}  // namespace

TEST(ModelDecrease, Examples) {
  EXPECT_DOUBLE_EQ(model_decrease(std::vector<double>{1.0, -2.0}, std::vector<double>{0.5, 0.5}),
                   0.5);
  const std::vector<double> g{3.0, 4.0};
  EXPECT_DOUBLE_EQ(model_decrease(g, std::vector<double>{-3.0, -4.0}), 25.0);
  EXPECT_DOUBLE_EQ(model_decrease(g, std::vector<double>{4.0, -3.0}), 0.0);
  EXPECT_THROW(model_decrease(g, std::vector<double>{1.0}), std::invalid_argument);
}

TEST(Window, EmptyHistoryDegeneratesToCurrent) {
  NonmonotoneHistory h(10);
  const WindowSummary w = h.summarize(2.5);
  EXPECT_EQ(w.reference, 0u);
  EXPECT_EQ(w.reference_objective, 2.5);
  EXPECT_EQ(w.history_decrease, 0.0);
  // Only failures in the window behaves the same.
  h.record(3.0, 0.0, false);
  h.record(4.0, 0.0, false);
  const WindowSummary w2 = h.summarize(2.5);
  EXPECT_EQ(w2.reference, 2u);
  EXPECT_TRUE(w2.members.empty());
  EXPECT_EQ(w2.history_decrease, 0.0);
}

TEST(Window, ListedExample) {
  // Successes at 4 and 6 with f = 1.2 and 0.9; current f(theta^7) = 0.8.
  NonmonotoneHistory h(100);
  for (int j = 0; j < 4; ++j) h.record(5.0, 0.0, false);
  h.record(1.2, 0.25, true);
  h.record(1.0, 0.0, false);
  h.record(0.9, 0.125, true);
  const WindowSummary w = h.summarize(0.8);
  EXPECT_EQ(w.current, 7u);
  EXPECT_EQ(w.members, (std::vector<std::size_t>{4, 6}));
  EXPECT_EQ(w.reference, 4u);
  EXPECT_DOUBLE_EQ(w.reference_objective, 1.2);
  EXPECT_DOUBLE_EQ(w.history_decrease, 0.375);
}

TEST(Window, TiesGoToTheMostRecentIndex) {
  NonmonotoneHistory h(100);
  h.record(2.0, 0.5, true);
  h.record(2.0, 0.25, true);
  h.record(1.0, 0.125, true);
  const WindowSummary w = h.summarize(0.5);
  EXPECT_EQ(w.reference, 1u);
  EXPECT_DOUBLE_EQ(w.history_decrease, 0.375);
  // Current objective equal to the max also wins.
  const WindowSummary w2 = h.summarize(2.0);
  EXPECT_EQ(w2.reference, 3u);
  EXPECT_EQ(w2.history_decrease, 0.0);
}

TEST(Window, MemoryZeroIsAlwaysTheCurrentIterate) {
  NonmonotoneHistory h(0);
  h.record(9.0, 1.0, true);
  h.record(8.0, 1.0, true);
  const WindowSummary w = h.summarize(1.0);
  EXPECT_TRUE(w.members.empty());
  EXPECT_EQ(w.reference, 2u);
  EXPECT_EQ(w.reference_objective, 1.0);
}

TEST(Window, MatchesFullRescanReplay) {
  Rng rng(31);
  for (std::size_t nu : {0u, 1u, 2u, 5u, 17u, 100u}) {
    NonmonotoneHistory h(nu);
    std::vector<HistoryEntry> log;
    for (int k = 0; k < 300; ++k) {
      // Coarse objective grid so ties happen.
      const double f = std::round(rng.uniform(0, 8)) / 4.0;
      const WindowSummary live = h.summarize(f);
      const auto oracle = testkit::replay_window(log, log.size(), f, nu);
      ASSERT_EQ(live.members, oracle.members) << "nu " << nu << " k " << k;
      ASSERT_EQ(live.reference, oracle.reference) << "nu " << nu << " k " << k;
      ASSERT_EQ(live.reference_objective, oracle.reference_objective);
      ASSERT_NEAR(live.history_decrease, oracle.history_decrease, 1e-12);
      const bool ok = rng.uniform() < 0.6;
      const double pred = ok ? rng.uniform(0.01, 1.0) : 0.0;
      h.record(f, pred, ok);
      log.push_back({log.size(), f, pred, ok});
    }
  }
}

TEST(Window, SuccessNeedsPositivePredictedDecrease) {
  NonmonotoneHistory h(5);
  EXPECT_THROW(h.record(1.0, 0.0, true), std::invalid_argument);
  EXPECT_THROW(h.record(1.0, 1e-15, true), std::invalid_argument);
  EXPECT_NO_THROW(h.record(1.0, 0.0, false));
}

TEST(Ratios, Examples) {
  auto r = agreement_ratios(1.0, 0.9, 1.2, 0.2, 0.3);
  ASSERT_TRUE(r);
  EXPECT_DOUBLE_EQ(r->current, 0.5);
  EXPECT_NEAR(r->historical, 0.6, 1e-15);
  EXPECT_EQ(r->combined, r->historical);

  r = agreement_ratios(1.0, 0.9, 1.0, 0.2, 0.0);
  ASSERT_TRUE(r);
  EXPECT_EQ(r->current, r->historical);

  r = agreement_ratios(1.0, 1.05, 1.5, 0.2, 0.4);
  ASSERT_TRUE(r);
  EXPECT_LT(r->current, 0.0);
  EXPECT_NEAR(r->historical, 0.75, 1e-15);
}

TEST(Ratios, UndefinedCases) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double inf = std::numeric_limits<double>::infinity();
  EXPECT_FALSE(agreement_ratios(1.0, nan, 1.0, 0.2, 0.0));
  EXPECT_FALSE(agreement_ratios(1.0, inf, 1.0, 0.2, 0.0));
  EXPECT_FALSE(agreement_ratios(1.0, 0.5, 1.0, 0.0, 0.0));
  EXPECT_FALSE(agreement_ratios(1.0, 0.5, 1.0, 1e-14, 0.0));
  EXPECT_FALSE(agreement_ratios(1.0, 0.5, 1.0, -0.3, 2.0));
}

TEST(Radius, Policy) {
  const NtrConstants c;
  EXPECT_DOUBLE_EQ(radius_update(0.1, c.eta2, c), 0.2);
  EXPECT_DOUBLE_EQ(radius_update(0.1, 0.5, c), 0.1);
  EXPECT_DOUBLE_EQ(radius_update(0.1, c.eta1, c), 0.1);
  EXPECT_DOUBLE_EQ(radius_update(0.1, 0.05, c), 0.05);
  EXPECT_DOUBLE_EQ(radius_update(c.delta_min, -1.0, c), c.delta_min);
  EXPECT_DOUBLE_EQ(radius_update(c.delta_max, 1.0, c), c.delta_max);
  EXPECT_DOUBLE_EQ(radius_update(0.1, -std::numeric_limits<double>::infinity(), c), 0.05);
}

TEST(Constants, Validation) {
  NtrConstants c;
  EXPECT_NO_THROW(c.validate());
  c.eta1 = 0.8;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = NtrConstants{};
  c.gamma_inc = 1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = NtrConstants{};
  c.gamma_dec = 1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = NtrConstants{};
  c.delta0 = 2.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  EXPECT_THROW(NtrState{c}, std::invalid_argument);
}

TEST(Correction, LastPairIsScaledSteepestDescent) {
  const std::vector<double> g{2.0, -1.0, 0.5};
  const std::vector<double> s{0.3, 0.3, -0.1};
  const auto c = correction_candidate(g, s, 0.4, {0.0, 1.0 / 32.0});
  EXPECT_DOUBLE_EQ(c[0], -0.4 / 32.0);
  EXPECT_DOUBLE_EQ(c[1], 0.2 / 32.0);
  EXPECT_DOUBLE_EQ(c[2], -0.1 / 32.0);
}

TEST(Correction, CandidatesStayInsideTheRegion) {
  Rng rng(8);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t n = 1 + rng.index(12);
    const double delta = std::pow(10.0, rng.uniform(-5, 0));
    std::vector<double> g(n), s(n);
    for (double& v : g) v = rng.normal() * std::pow(10.0, rng.uniform(-6, 6));
    for (double& v : s) v = rng.normal();
    const double sn = inf_norm(s);
    for (double& v : s) v = v / sn * delta * rng.uniform();
    for (const auto& k : kCorrectionSchedule) {
      const auto c = correction_candidate(g, s, delta, k);
      EXPECT_LE(inf_norm(c), k.beta * delta * (1 + 1e-15));
      EXPECT_LE(inf_norm(c), delta);
    }
  }
}

TEST(Correction, FirstPairAcceptedCountsOnlyTheProposal) {
  const std::vector<double> theta{3.0, -2.0};
  const std::vector<double> g{3.0, -2.0};
  const std::vector<double> bad{0.05, -0.05};  // mild ascent, the first blend descends
  NonmonotoneHistory h(0);
  const auto r = correction_loop(theta, bad, g, 0.5, bowl(theta), h.summarize(bowl(theta)),
                                 NtrConstants{}, bowl);
  EXPECT_TRUE(r.accepted);
  EXPECT_EQ(r.rejections, 1u);
  EXPECT_EQ(r.attempts, 1u);
  EXPECT_EQ(r.candidate_norms.size(), 1u);
  EXPECT_LT(bowl(std::vector<double>{theta[0] + r.step[0], theta[1] + r.step[1]}), bowl(theta));
}

TEST(Correction, AllFailingReturnsLastCandidateWithSixRejections) {
  const std::vector<double> theta{1.0};
  const std::vector<double> g{1.0};
  const ObjectiveFn cliff = [](std::span<const double> x) { return x[0] == 1.0 ? 0.0 : 10.0; };
  NonmonotoneHistory h(0);
  const auto r =
      correction_loop(theta, std::vector<double>{0.1}, g, 0.2, 0.0, h.summarize(0.0),
                      NtrConstants{}, cliff);
  EXPECT_FALSE(r.accepted);
  EXPECT_EQ(r.rejections, 6u);
  EXPECT_EQ(r.attempts, 5u);
  EXPECT_DOUBLE_EQ(r.step[0], -0.2 / 32.0);
}

TEST(Correction, ZeroGradientIsAZeroStep) {
  const std::vector<double> theta{1.0, 2.0};
  NonmonotoneHistory h(0);
  int calls = 0;
  const ObjectiveFn f = [&](std::span<const double>) { ++calls; return 0.0; };
  const auto r = correction_loop(theta, std::vector<double>{0.1, 0.1},
                                 std::vector<double>{0.0, 0.0}, 0.5, 0.0, h.summarize(0.0),
                                 NtrConstants{}, f);
  EXPECT_EQ(inf_norm(r.step), 0.0);
  EXPECT_EQ(calls, 0);
}

TEST(NtrStep, BowlStepIsAcceptedAndDecreases) {
  const std::vector<double> theta{3.0, -1.0, 0.5};
  NtrState state(with_memory(10));
  const auto r = ntr_step(theta, bowl(theta), theta, state, bowl);
  EXPECT_TRUE(r.successful);
  std::vector<double> next = theta;
  for (std::size_t i = 0; i < 3; ++i) next[i] += r.step[i];
  EXPECT_LT(bowl(next), bowl(theta));
  EXPECT_DOUBLE_EQ(inf_norm(r.step), NtrConstants{}.delta0);
  EXPECT_EQ(state.history().next_index(), 1u);
}

TEST(NtrStep, ZeroGradientIsANoOp) {
  const std::vector<double> theta{0.0, 0.0};
  NtrState state(with_memory(10));
  const auto r = ntr_step(theta, 0.0, theta, state, bowl);
  EXPECT_TRUE(r.skipped);
  EXPECT_EQ(inf_norm(r.step), 0.0);
  EXPECT_EQ(state.radius(), NtrConstants{}.delta0);
  EXPECT_EQ(state.history().next_index(), 0u);
}

TEST(NtrStep, MemoryZeroReproducesClassicalTrustRegion) {
  NtrConstants c = with_memory(0);
  c.delta0 = 0.5;
  NtrState state(c);
  std::vector<double> x{-1.2, 1.0};
  const auto oracle = testkit::classical_tr(
      [](const std::vector<double>& v) { return rosenbrock(v); },
      [](const std::vector<double>& v) { return rosenbrock_grad(v); }, x, c.delta0, 300,
      c.eta1, c.eta2, c.gamma_dec, c.gamma_inc, c.delta_min, c.delta_max);
  std::size_t accepted = 0;
  for (std::size_t it = 0; it < oracle.size(); ++it) {
    const auto r = ntr_step(x, rosenbrock(x), rosenbrock_grad(x), state, rosenbrock);
    for (std::size_t i = 0; i < 2; ++i) x[i] += r.step[i];
    ASSERT_EQ(r.successful, oracle[it].accepted) << "iteration " << it;
    ASSERT_EQ(state.radius(), oracle[it].radius_after) << "iteration " << it;
    ASSERT_EQ(x, oracle[it].x_after) << "iteration " << it;
    accepted += r.successful;
  }
  EXPECT_GT(accepted, 50u);
}

TEST(NtrStep, SignDirectionFillsTheBox) {
  const auto s = steepest_step(std::vector<double>{2.0, -0.001, 0.0}, 0.3, NtrDirection::sign);
  EXPECT_EQ(s, (std::vector<double>{-0.3, 0.3, 0.0}));
  EXPECT_EQ(parse_ntr_direction("sign"), NtrDirection::sign);
  EXPECT_THROW(parse_ntr_direction("newton"), std::invalid_argument);
}

TEST(NonMonotone, IncreaseAcceptedOnlyWithMemory) {
  // Hand-set history: a high-objective success far above the current value.
  const std::vector<double> theta{1.0};
  const std::vector<double> g{1.0};
  const std::vector<double> s{-0.1};  // pred = 0.1
  const ObjectiveFn f = [](std::span<const double> x) { return x[0] == 1.0 ? 1.0 : 1.05; };
  for (std::size_t nu : {100u, 0u}) {
    NtrState state(with_memory(nu));
    state.history().record(3.0, 0.5, true);
    state.history().record(1.0, 0.0, false);
    const auto r = globalize_proposal(theta, 1.0, g, s, state, f);
    if (nu) {
      EXPECT_TRUE(r.proposal_accepted);
      EXPECT_LT(r.proposal.ratios.current, 0.0);
      EXPECT_GT(r.proposal.ratios.historical, NtrConstants{}.eta1);
    } else {
      EXPECT_FALSE(r.proposal_accepted);
      EXPECT_EQ(r.proposal.ratios.combined, r.proposal.ratios.current);
    }
  }
}

TEST(Globalize, AlwaysAcceptTakesTheProposalButStillScoresIt) {
  const std::vector<double> theta{2.0};
  const std::vector<double> g{2.0};
  const std::vector<double> up{0.5};  // ascent, pred < 0
  NtrState state(with_memory(0));
  const auto r = globalize_proposal(theta, bowl(theta), g, up, state, bowl, true);
  EXPECT_EQ(r.step, up);
  EXPECT_EQ(r.rejections, 0u);
  EXPECT_FALSE(r.successful);
  EXPECT_LT(state.radius(), NtrConstants{}.delta0);
}
