#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace napts {

/// Dense row-major array of doubles.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
  Tensor(std::vector<std::size_t> shape, std::vector<double> data);

  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  static Tensor row(std::vector<double> data);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  std::size_t rank() const { return shape_.size(); }

  /// Leading dimension for rank-2 tensors, 1 for rank-1.
  std::size_t rows() const;
  /// Trailing dimension.
  std::size_t cols() const;

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  std::string shape_string() const;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

/// Handle to a node recorded on a Tape.
struct Var {
  std::size_t id = static_cast<std::size_t>(-1);
};

/// Reverse-mode recording of primitive operations.
///
/// Nodes are appended in evaluation order, so every node's inputs precede
/// it. backward() walks the nodes once in reverse and accumulates adjoints.
/// A tape is single-threaded; separate tapes share nothing.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  /// Differentiable input (a parameter).
  Var leaf(Tensor value);
  /// Non-differentiable input (data, cached activations).
  Var constant(Tensor value);

  /// [m x k] * [k x n] -> [m x n].
  Var matmul(Var a, Var b);
  /// Adds a length-n bias to every row of an [m x n] tensor.
  Var add_bias(Var x, Var bias);
  Var relu(Var x);
  Var tanh(Var x);
  /// Fused log-softmax + negative log-likelihood, one loss per row: [m x 1].
  Var softmax_cross_entropy(Var logits, std::span<const int> labels);
  /// Per-row mean squared error against a fixed target: [m x 1].
  Var mse(Var prediction, const Tensor& target);
  /// Mean over all elements: [1].
  Var mean(Var x);

  const Tensor& value(Var v) const;
  std::size_t size() const { return nodes_.size(); }

  /// Seeds the adjoint of `output` and propagates to every node.
  void backward(Var output, const Tensor& seed);
  /// Same as backward(output, ones).
  void backward(Var output);

  /// Adjoint of any node after backward(). Throws before backward().
  const Tensor& grad(Var v) const;
  bool has_gradients() const { return backward_done_; }

 private:
  struct Node {
    Tensor value;
    Tensor adjoint;
    bool differentiable = false;
    std::vector<std::size_t> inputs;
    // Reads this node's adjoint and adds into the inputs' adjoints.
    std::function<void(Tape&, std::size_t)> pullback;
  };

  Var push(Tensor value, std::vector<std::size_t> inputs,
           std::function<void(Tape&, std::size_t)> pullback);
  const Node& node(Var v, const char* op) const;
  Tensor& adjoint_slot(std::size_t id);

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

}  // namespace napts
