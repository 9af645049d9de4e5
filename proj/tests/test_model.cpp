#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "napts/model.hpp"
#include "napts/random.hpp"
#include "napts/vector_ops.hpp"
#include "support/finite_diff.hpp"
#include "support/hand_mlp.hpp"
#include "support/random_nets.hpp"

using namespace napts;
using napts::testkit::central_difference;
using napts::testkit::relative_error;

namespace {

Batch batch_of(Tensor x, std::vector<int> labels) {
  Batch b;
  b.inputs = std::move(x);
  b.labels = std::move(labels);
  return b;
}

}  // namespace

TEST(Forward, IdentityLayer) {
  SequentialNet net({{2, 2, Activation::identity}}, {0}, LossKind::mse);
  const std::vector<double> theta{1, 0, 0, 1, 0, 0};
  const Tensor y = net.predict(theta, Tensor::row({1.0, 2.0}));
  EXPECT_EQ(y.values(), (std::vector<double>{1.0, 2.0}));
}

TEST(Forward, SingleAffineLayer) {
  SequentialNet net({{1, 1, Activation::identity}}, {0}, LossKind::mse);
  const std::vector<double> theta{2.0, 1.0};
  EXPECT_DOUBLE_EQ(net.predict(theta, Tensor::row({3.0}))[0], 7.0);
}

TEST(Forward, MatchesHandEvaluation) {
  Rng rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const std::vector<DenseLayer> layers{{3, 5, trial % 2 ? Activation::relu : Activation::tanh},
                                         {5, 4, Activation::identity}};
    SequentialNet net(layers, {0}, LossKind::cross_entropy);
    const auto theta = testkit::random_parameters(rng, net);
    Batch b = testkit::random_batch(rng, net, 6);
    const Tensor y = net.predict(theta, b.inputs);
    const auto hand = testkit::hand_forward(layers, theta, b.inputs);
    for (std::size_t r = 0; r < 6; ++r)
      for (std::size_t c = 0; c < 4; ++c) EXPECT_NEAR(y.at(r, c), hand[r][c], 1e-13);
    EXPECT_NEAR(net.loss(theta, b), testkit::hand_cross_entropy(hand, b.labels), 1e-13);
  }
}

TEST(Forward, ShapeErrorNamesTheLayer) {
  SequentialNet net({{2, 3, Activation::tanh}, {3, 2, Activation::identity}}, {0},
                    LossKind::mse);
  const std::vector<double> theta(net.parameter_count(), 0.1);
  try {
    net.predict(theta, Tensor({1, 4}, 1.0));
    FAIL() << "expected a shape error";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("layer 0"), std::string::npos) << e.what();
  }
  EXPECT_THROW(SequentialNet({{2, 3, Activation::tanh}, {4, 2, Activation::identity}}, {0},
                             LossKind::mse),
               std::invalid_argument);
}

TEST(Gradient, RandomNetsMatchFiniteDifferences) {
  Rng rng(99);
  for (int trial = 0; trial < 8; ++trial) {
    const SequentialNet net = testkit::random_net(rng, 120);
    const auto theta = testkit::random_parameters(rng, net);
    const Batch b = testkit::random_batch(rng, net, 5);
    const Evaluation e = value_and_gradient(net, theta, b);
    const auto fd = central_difference([&](std::span<const double> t) { return net.loss(t, b); },
                                       theta);
    for (std::size_t i = 0; i < theta.size(); ++i)
      EXPECT_LE(relative_error(e.gradient[i], fd[i]), 1e-5) << net.describe() << " coord " << i;
  }
}

TEST(Cache, SingleBlockHoldsInputAndOutputAdjoint) {
  Rng rng(8);
  SequentialNet net({{2, 3, Activation::tanh}, {3, 3, Activation::identity}}, {0},
                    LossKind::cross_entropy);
  const auto theta = testkit::random_parameters(rng, net);
  const Batch b = testkit::random_batch(rng, net, 4);
  const auto cache = evaluate_with_cache(net, theta, b);
  ASSERT_EQ(cache->block_inputs.size(), 1u);
  EXPECT_EQ(cache->block_inputs[0].values(), b.inputs.values());
  // d(mean CE)/d logits = (softmax - onehot) / m
  const Tensor logits = net.predict(theta, b.inputs);
  for (std::size_t r = 0; r < 4; ++r) {
    double z = 0.0, mx = -INFINITY;
    for (std::size_t c = 0; c < 3; ++c) mx = std::max(mx, logits.at(r, c));
    for (std::size_t c = 0; c < 3; ++c) z += std::exp(logits.at(r, c) - mx);
    for (std::size_t c = 0; c < 3; ++c) {
      const double p = std::exp(logits.at(r, c) - mx) / z;
      const double expect = (p - (b.labels[r] == static_cast<int>(c) ? 1.0 : 0.0)) / 4.0;
      EXPECT_NEAR(cache->downstream[0].at(r, c), expect, 1e-15);
    }
  }
}

TEST(Cache, BlockGradientsConcatenateToFullGradient) {
  Rng rng(21);
  const std::vector<std::size_t> widths{3, 6, 5, 4, 2};
  const SequentialNet net = SequentialNet::mlp(widths, Activation::tanh, LossKind::cross_entropy, 3);
  ASSERT_EQ(net.block_count(), 3u);
  const auto theta = testkit::random_parameters(rng, net);
  const Batch b = testkit::random_batch(rng, net, 7);
  const auto cache = evaluate_with_cache(net, theta, b);
  const Evaluation e = value_and_gradient(net, theta, b);
  EXPECT_EQ(cache->loss, e.loss);
  const ParamPartition p = net.partition();
  std::vector<double> glued;
  for (std::size_t d = 0; d < 3; ++d) {
    const auto g = local_block_gradient(net, *cache, d, p.restrict(theta, d));
    glued.insert(glued.end(), g.begin(), g.end());
  }
  ASSERT_EQ(glued.size(), e.gradient.size());
  for (std::size_t i = 0; i < glued.size(); ++i) EXPECT_NEAR(glued[i], e.gradient[i], 1e-12);
}

TEST(Cache, ZeroNetHasZeroLossAndGradient) {
  const std::vector<std::size_t> widths{2, 3, 2};
  const SequentialNet net = SequentialNet::mlp(widths, Activation::relu, LossKind::mse, 2);
  const std::vector<double> theta(net.parameter_count(), 0.0);
  Batch b;
  b.inputs = Tensor({3, 2}, 0.0);
  b.targets = Tensor({3, 2}, 0.0);
  b.labels = {0, 0, 0};
  const auto cache = evaluate_with_cache(net, theta, b);
  EXPECT_EQ(cache->loss, 0.0);
  EXPECT_EQ(inf_norm(cache->gradient), 0.0);
}

TEST(Cache, TaggedAndDeterministic) {
  Rng rng(3);
  const std::vector<std::size_t> widths{2, 4, 4, 2};
  const SequentialNet net = SequentialNet::mlp(widths, Activation::relu, LossKind::cross_entropy, 3);
  const auto theta = testkit::random_parameters(rng, net);
  Batch b = testkit::random_batch(rng, net, 5, 42);
  const auto c1 = evaluate_with_cache(net, theta, b);
  const auto c2 = evaluate_with_cache(net, theta, b);
  EXPECT_EQ(c1->origin, theta);
  EXPECT_EQ(c1->batch_id, 42u);
  EXPECT_EQ(c1->gradient, c2->gradient);
  for (std::size_t d = 0; d < 3; ++d) {
    EXPECT_EQ(c1->block_inputs[d].values(), c2->block_inputs[d].values());
    EXPECT_EQ(c1->downstream[d].values(), c2->downstream[d].values());
  }
}

TEST(Cache, EmptyBatchAndWrongLengthsAreErrors) {
  const std::vector<std::size_t> widths{2, 3, 2};
  const SequentialNet net = SequentialNet::mlp(widths, Activation::relu, LossKind::cross_entropy, 2);
  const std::vector<double> theta(net.parameter_count(), 0.1);
  Batch empty;
  empty.inputs = Tensor({0, 2}, 0.0);
  EXPECT_THROW(evaluate_with_cache(net, theta, empty), std::invalid_argument);
  const Batch b = batch_of(Tensor({1, 2}, 1.0), {1});
  const auto cache = evaluate_with_cache(net, theta, b);
  EXPECT_THROW(local_block_gradient(net, *cache, 0, std::vector<double>(2, 0.0)),
               std::invalid_argument);
  EXPECT_THROW(local_block_gradient(net, *cache, 5, std::vector<double>(2, 0.0)),
               std::exception);
}

TEST(Frozen, LastBlockIsExactGradientOfFrozenSurrogate) {
  // Away from the origin the last block still sees its true input, but G_N is
  // frozen, so g~_N is the gradient of sum_i <G_N[i], D_N(x_N[i]; theta_N)>.
  Rng rng(17);
  const std::vector<std::size_t> widths{2, 5, 4, 3};
  const SequentialNet net =
      SequentialNet::mlp(widths, Activation::tanh, LossKind::cross_entropy, 2);
  const auto theta = testkit::random_parameters(rng, net);
  const Batch b = testkit::random_batch(rng, net, 6);
  const auto cache = evaluate_with_cache(net, theta, b);
  const std::size_t last = net.block_count() - 1;
  const auto [first_layer, end_layer] = net.block_layers(last);
  const std::vector<DenseLayer> tail(net.layers().begin() + first_layer,
                                     net.layers().begin() + end_layer);
  const SequentialNet tail_net(tail, {0}, LossKind::mse);

  std::vector<double> theta_n = net.partition().restrict(theta, last);
  for (double& v : theta_n) v += 0.3 * rng.normal();
  const auto g = local_block_gradient(net, *cache, last, theta_n);
  const auto surrogate = [&](std::span<const double> t) {
    const Tensor out = tail_net.predict(t, cache->block_inputs[last]);
    double s = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) s += cache->downstream[last][i] * out[i];
    return s;
  };
  const auto fd = central_difference(surrogate, theta_n);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_LE(relative_error(g[i], fd[i]), 1e-6);
}

TEST(Frozen, InteriorPerturbationDepartsFromTrueGradient) {
  Rng rng(23);
  const std::vector<std::size_t> widths{2, 6, 6, 2};
  const SequentialNet net =
      SequentialNet::mlp(widths, Activation::tanh, LossKind::cross_entropy, 3);
  const auto theta = testkit::random_parameters(rng, net);
  const Batch b = testkit::random_batch(rng, net, 8);
  const auto cache = evaluate_with_cache(net, theta, b);
  const ParamPartition p = net.partition();
  std::vector<double> moved = theta;
  std::vector<double> theta_0 = p.restrict(theta, 0);
  for (double& v : theta_0) v += 0.2 * rng.normal();
  for (std::size_t i = 0; i < theta_0.size(); ++i) moved[p.cell(0)[i]] = theta_0[i];
  const auto approx = local_block_gradient(net, *cache, 0, theta_0);
  const auto exact = p.restrict(value_and_gradient(net, moved, b).gradient, 0);
  double diff = 0.0;
  for (std::size_t i = 0; i < exact.size(); ++i) diff = std::max(diff, std::abs(approx[i] - exact[i]));
  EXPECT_GT(diff, 1e-8);
}

TEST(Blocks, BalancedSplitCoversAllParameters) {
  const std::vector<std::size_t> widths{2, 16, 16, 2};
  const SequentialNet net = SequentialNet::mlp(widths, Activation::tanh, LossKind::cross_entropy, 3);
  std::size_t total = 0;
  for (std::size_t d = 0; d < net.block_count(); ++d) total += net.block_parameter_count(d);
  EXPECT_EQ(total, net.parameter_count());
  EXPECT_EQ(net.block_offset(0), 0u);
  EXPECT_THROW(SequentialNet::mlp(widths, Activation::tanh, LossKind::cross_entropy, 4),
               std::invalid_argument);
}

TEST(Blocks, GlorotInitIsSeededAndZeroesBiases) {
  const std::vector<std::size_t> widths{2, 4, 2};
  const SequentialNet net = SequentialNet::mlp(widths, Activation::tanh, LossKind::cross_entropy, 1);
  const auto a = net.initial_parameters(7);
  EXPECT_EQ(a, net.initial_parameters(7));
  EXPECT_NE(a, net.initial_parameters(8));
  const double limit = std::sqrt(6.0 / (2 + 4));
  for (std::size_t i = 0; i < 8; ++i) EXPECT_LE(std::abs(a[i]), limit);
  for (std::size_t i = 8; i < 12; ++i) EXPECT_EQ(a[i], 0.0);
}
