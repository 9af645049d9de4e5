#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>

#include "napts/random.hpp"
#include "napts/tensor.hpp"
#include "support/finite_diff.hpp"

using namespace napts;

TEST(Tensor, ShapeAndDataLengthMustAgree) {
  EXPECT_THROW(Tensor({2, 2}, std::vector<double>{1, 2, 3}), std::invalid_argument);
  Tensor t({2, 3}, 1.5);
  EXPECT_EQ(t.size(), 6u);
  EXPECT_EQ(t.rows(), 2u);
  EXPECT_EQ(t.cols(), 3u);
  EXPECT_EQ(t.shape_string(), "[2 x 3]");
}

TEST(Tape, SquareHasGradientSix) {
  // f(theta) = theta * theta as a 1x1 matmul.
  Tape tape;
  Var th = tape.leaf(Tensor::matrix(1, 1, {3.0}));
  Var f = tape.matmul(th, th);
  tape.backward(f);
  EXPECT_DOUBLE_EQ(tape.value(f)[0], 9.0);
  EXPECT_DOUBLE_EQ(tape.grad(th)[0], 6.0);
}

TEST(Tape, LinearFunctionHasConstantGradient) {
  Tape tape;
  Var th = tape.leaf(Tensor::matrix(3, 1, {0.5, -2.0, 7.0}));
  Var c = tape.constant(Tensor::matrix(1, 3, {1.5, -4.0, 0.25}));
  Var f = tape.matmul(c, th);
  tape.backward(f);
  EXPECT_DOUBLE_EQ(tape.grad(th)[0], 1.5);
  EXPECT_DOUBLE_EQ(tape.grad(th)[1], -4.0);
  EXPECT_DOUBLE_EQ(tape.grad(th)[2], 0.25);
}

TEST(Tape, GradientBeforeBackwardIsAnError) {
  Tape tape;
  Var th = tape.leaf(Tensor::matrix(1, 1, {1.0}));
  EXPECT_THROW(tape.grad(th), std::logic_error);
  Tape empty;
  EXPECT_THROW(empty.backward(Var{0}), std::exception);
}

TEST(Tape, ShapeMismatchIsDescriptive) {
  Tape tape;
  Var a = tape.leaf(Tensor({2, 3}, 1.0));
  Var b = tape.leaf(Tensor({2, 3}, 1.0));
  try {
    tape.matmul(a, b);
    FAIL() << "expected a shape error";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("[2 x 3]"), std::string::npos) << e.what();
  }
}

TEST(Tape, FusedCrossEntropyIsStableForHugeLogits) {
  Tape tape;
  Var z = tape.leaf(Tensor::matrix(1, 3, {1000.0, 0.0, -1000.0}));
  const int label = 0;
  Var l = tape.softmax_cross_entropy(z, std::span<const int>(&label, 1));
  tape.backward(l);
  EXPECT_TRUE(std::isfinite(tape.value(l)[0]));
  EXPECT_NEAR(tape.value(l)[0], 0.0, 1e-12);
  EXPECT_NEAR(tape.grad(z)[0], 0.0, 1e-12);
}

namespace {

// mean(mse(tanh(relu(x A + b) C))) with every primitive on the path.
double chain(std::span<const double> p, const Tensor& x, const Tensor& y, Tape* keep = nullptr,
             std::vector<double>* grad = nullptr) {
  Tape local;
  Tape& tape = keep ? *keep : local;
  Var A = tape.leaf(Tensor({2, 3}, std::vector<double>(p.begin(), p.begin() + 6)));
  Var b = tape.leaf(Tensor({1, 3}, std::vector<double>(p.begin() + 6, p.begin() + 9)));
  Var C = tape.leaf(Tensor({3, 2}, std::vector<double>(p.begin() + 9, p.begin() + 15)));
  Var X = tape.constant(x);
  Var h = tape.relu(tape.add_bias(tape.matmul(X, A), b));
  Var o = tape.tanh(tape.matmul(h, C));
  Var f = tape.mean(tape.mse(o, y));
  if (grad) {
    tape.backward(f);
    grad->clear();
    for (Var v : {A, b, C})
      for (double g : tape.grad(v).values()) grad->push_back(g);
  }
  return tape.value(f)[0];
}

}  // namespace

TEST(Tape, PrimitiveChainMatchesFiniteDifferences) {
  Rng rng(11);
  Tensor x({4, 2}, 0.0), y({4, 2}, 0.0);
  for (double& v : x.values()) v = rng.normal();
  for (double& v : y.values()) v = rng.normal();
  std::vector<double> p(15);
  for (double& v : p) v = rng.normal();
  std::vector<double> g;
  Tape tape;
  chain(p, x, y, &tape, &g);
  const auto fd = testkit::central_difference(
      [&](std::span<const double> q) { return chain(q, x, y); }, p);
  for (std::size_t i = 0; i < p.size(); ++i)
    EXPECT_LE(testkit::relative_error(g[i], fd[i]), 1e-5) << "coordinate " << i;
}

TEST(Tape, AdjointsAreLinearInTheSeed) {
  Rng rng(5);
  Tensor w({3, 2}, 0.0);
  for (double& v : w.values()) v = rng.normal();
  Tensor x({4, 3}, 0.0);
  for (double& v : x.values()) v = rng.normal();
  Tensor s1({4, 2}, 0.0), s2({4, 2}, 0.0), s12({4, 2}, 0.0);
  for (std::size_t i = 0; i < 8; ++i) {
    s1[i] = rng.normal();
    s2[i] = rng.normal();
    s12[i] = s1[i] + s2[i];
  }
  auto grad_for = [&](const Tensor& seed) {
    Tape tape;
    Var W = tape.leaf(w);
    Var out = tape.tanh(tape.matmul(tape.constant(x), W));
    tape.backward(out, seed);
    return tape.grad(W).values();
  };
  const auto g1 = grad_for(s1), g2 = grad_for(s2), g12 = grad_for(s12);
  for (std::size_t i = 0; i < g1.size(); ++i) EXPECT_NEAR(g12[i], g1[i] + g2[i], 1e-13);
}

TEST(Tape, RerunIsBitwiseDeterministic) {
  Rng rng(2);
  Tensor x({5, 2}, 0.0), y({5, 2}, 0.0);
  for (double& v : x.values()) v = rng.normal();
  for (double& v : y.values()) v = rng.normal();
  std::vector<double> p(15);
  for (double& v : p) v = rng.normal();
  std::vector<double> g1, g2;
  Tape t1, t2;
  const double f1 = chain(p, x, y, &t1, &g1);
  const double f2 = chain(p, x, y, &t2, &g2);
  EXPECT_EQ(f1, f2);
  EXPECT_EQ(g1, g2);
}
