#include "napts/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace napts {

namespace {

std::size_t element_count(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

void require_matrix(const Tensor& t, const char* op) {
  if (t.rank() != 2) {
    throw std::invalid_argument(std::string(op) + ": expected a rank-2 tensor, got " +
                                t.shape_string());
  }
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)), data_(element_count(shape_), fill) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != element_count(shape_)) {
    throw std::invalid_argument("Tensor: " + std::to_string(data_.size()) +
                                " values do not fill shape " + shape_string());
  }
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> data) {
  return Tensor({rows, cols}, std::move(data));
}

Tensor Tensor::row(std::vector<double> data) {
  const std::size_t n = data.size();
  return Tensor({1, n}, std::move(data));
}

std::size_t Tensor::rows() const {
  if (shape_.empty()) return 1;
  return shape_.size() == 1 ? 1 : shape_.front();
}

std::size_t Tensor::cols() const { return shape_.empty() ? 1 : shape_.back(); }

std::string Tensor::shape_string() const {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    if (i) out << " x ";
    out << shape_[i];
  }
  out << ']';
  return out.str();
}

// ---------------------------------------------------------------------------

Var Tape::push(Tensor value, std::vector<std::size_t> inputs,
               std::function<void(Tape&, std::size_t)> pullback) {
  Node n;
  n.value = std::move(value);
  n.differentiable = std::any_of(inputs.begin(), inputs.end(),
                                 [this](std::size_t i) { return nodes_[i].differentiable; });
  n.inputs = std::move(inputs);
  n.pullback = std::move(pullback);
  nodes_.push_back(std::move(n));
  backward_done_ = false;
  return Var{nodes_.size() - 1};
}

const Tape::Node& Tape::node(Var v, const char* op) const {
  if (v.id >= nodes_.size()) {
    throw std::logic_error(std::string(op) + ": variable is not recorded on this tape");
  }
  return nodes_[v.id];
}

Tensor& Tape::adjoint_slot(std::size_t id) {
  Node& n = nodes_[id];
  if (n.adjoint.size() != n.value.size()) n.adjoint = Tensor(n.value.shape(), 0.0);
  return n.adjoint;
}

Var Tape::leaf(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, true, {}, {}});
  backward_done_ = false;
  return Var{nodes_.size() - 1};
}

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, false, {}, {}});
  backward_done_ = false;
  return Var{nodes_.size() - 1};
}

const Tensor& Tape::value(Var v) const { return node(v, "value").value; }

Var Tape::matmul(Var a, Var b) {
  const Tensor& A = node(a, "matmul").value;
  const Tensor& B = node(b, "matmul").value;
  require_matrix(A, "matmul");
  require_matrix(B, "matmul");
  const std::size_t m = A.rows(), k = A.cols(), n = B.cols();
  if (B.rows() != k) {
    throw std::invalid_argument("matmul: inner dimensions differ, " + A.shape_string() +
                                " * " + B.shape_string());
  }
  Tensor C({m, n}, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = A.at(i, p);
      for (std::size_t j = 0; j < n; ++j) C.at(i, j) += aip * B.at(p, j);
    }
  }
  return push(std::move(C), {a.id, b.id}, [m, k, n](Tape& t, std::size_t self) {
    const Tensor& dC = t.nodes_[self].adjoint;
    const std::size_t ia = t.nodes_[self].inputs[0], ib = t.nodes_[self].inputs[1];
    if (t.nodes_[ia].differentiable) {
      Tensor& dA = t.adjoint_slot(ia);
      const Tensor& B = t.nodes_[ib].value;
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j) acc += dC.at(i, j) * B.at(p, j);
          dA.at(i, p) += acc;
        }
    }
    if (t.nodes_[ib].differentiable) {
      Tensor& dB = t.adjoint_slot(ib);
      const Tensor& A = t.nodes_[ia].value;
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const double aip = A.at(i, p);
          for (std::size_t j = 0; j < n; ++j) dB.at(p, j) += aip * dC.at(i, j);
        }
    }
  });
}

Var Tape::add_bias(Var x, Var bias) {
  const Tensor& X = node(x, "add_bias").value;
  const Tensor& b = node(bias, "add_bias").value;
  require_matrix(X, "add_bias");
  const std::size_t m = X.rows(), n = X.cols();
  if (b.size() != n) {
    throw std::invalid_argument("add_bias: bias of " + std::to_string(b.size()) +
                                " values for rows of width " + std::to_string(n));
  }
  Tensor Y = X;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) Y.at(i, j) += b[j];
  return push(std::move(Y), {x.id, bias.id}, [m, n](Tape& t, std::size_t self) {
    const Tensor& dY = t.nodes_[self].adjoint;
    const std::size_t ix = t.nodes_[self].inputs[0], ib = t.nodes_[self].inputs[1];
    if (t.nodes_[ix].differentiable) {
      Tensor& dX = t.adjoint_slot(ix);
      for (std::size_t i = 0; i < dY.size(); ++i) dX[i] += dY[i];
    }
    if (t.nodes_[ib].differentiable) {
      Tensor& db = t.adjoint_slot(ib);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) db[j] += dY.at(i, j);
    }
  });
}

Var Tape::relu(Var x) {
  Tensor Y = node(x, "relu").value;
  for (double& y : Y.values()) y = y > 0.0 ? y : 0.0;
  return push(std::move(Y), {x.id}, [](Tape& t, std::size_t self) {
    const std::size_t ix = t.nodes_[self].inputs[0];
    if (!t.nodes_[ix].differentiable) return;
    const Tensor& dY = t.nodes_[self].adjoint;
    const Tensor& X = t.nodes_[ix].value;
    Tensor& dX = t.adjoint_slot(ix);
    for (std::size_t i = 0; i < dY.size(); ++i)
      if (X[i] > 0.0) dX[i] += dY[i];
  });
}

Var Tape::tanh(Var x) {
  Tensor Y = node(x, "tanh").value;
  for (double& y : Y.values()) y = std::tanh(y);
  return push(std::move(Y), {x.id}, [](Tape& t, std::size_t self) {
    const std::size_t ix = t.nodes_[self].inputs[0];
    if (!t.nodes_[ix].differentiable) return;
    const Tensor& dY = t.nodes_[self].adjoint;
    const Tensor& Y = t.nodes_[self].value;
    Tensor& dX = t.adjoint_slot(ix);
    for (std::size_t i = 0; i < dY.size(); ++i) dX[i] += dY[i] * (1.0 - Y[i] * Y[i]);
  });
}

Var Tape::softmax_cross_entropy(Var logits, std::span<const int> labels) {
  const Tensor& Z = node(logits, "softmax_cross_entropy").value;
  require_matrix(Z, "softmax_cross_entropy");
  const std::size_t m = Z.rows(), p = Z.cols();
  if (labels.size() != m) {
    throw std::invalid_argument("softmax_cross_entropy: " + std::to_string(labels.size()) +
                                " labels for " + std::to_string(m) + " rows");
  }
  Tensor probs({m, p}, 0.0);
  Tensor loss({m, 1}, 0.0);
  std::vector<int> y(labels.begin(), labels.end());
  for (std::size_t i = 0; i < m; ++i) {
    if (y[i] < 0 || static_cast<std::size_t>(y[i]) >= p) {
      throw std::invalid_argument("softmax_cross_entropy: label " + std::to_string(y[i]) +
                                  " outside [0, " + std::to_string(p) + ")");
    }
    double zmax = Z.at(i, 0);
    for (std::size_t j = 1; j < p; ++j) zmax = std::max(zmax, Z.at(i, j));
    double denom = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      probs.at(i, j) = std::exp(Z.at(i, j) - zmax);
      denom += probs.at(i, j);
    }
    for (std::size_t j = 0; j < p; ++j) probs.at(i, j) /= denom;
    loss[i] = std::log(denom) + zmax - Z.at(i, static_cast<std::size_t>(y[i]));
  }
  return push(std::move(loss), {logits.id},
              [probs = std::move(probs), y = std::move(y), m, p](Tape& t, std::size_t self) {
                const std::size_t iz = t.nodes_[self].inputs[0];
                if (!t.nodes_[iz].differentiable) return;
                const Tensor& dL = t.nodes_[self].adjoint;
                Tensor& dZ = t.adjoint_slot(iz);
                for (std::size_t i = 0; i < m; ++i)
                  for (std::size_t j = 0; j < p; ++j) {
                    const double indicator = static_cast<std::size_t>(y[i]) == j ? 1.0 : 0.0;
                    dZ.at(i, j) += dL[i] * (probs.at(i, j) - indicator);
                  }
              });
}

Var Tape::mse(Var prediction, const Tensor& target) {
  const Tensor& P = node(prediction, "mse").value;
  require_matrix(P, "mse");
  if (P.size() != target.size()) {
    throw std::invalid_argument("mse: prediction " + P.shape_string() + " vs target " +
                                target.shape_string());
  }
  const std::size_t m = P.rows(), p = P.cols();
  Tensor loss({m, 1}, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      const double r = P.at(i, j) - target[i * p + j];
      acc += r * r;
    }
    loss[i] = acc / static_cast<double>(p);
  }
  return push(std::move(loss), {prediction.id}, [target, m, p](Tape& t, std::size_t self) {
    const std::size_t ip = t.nodes_[self].inputs[0];
    if (!t.nodes_[ip].differentiable) return;
    const Tensor& dL = t.nodes_[self].adjoint;
    const Tensor& P = t.nodes_[ip].value;
    Tensor& dP = t.adjoint_slot(ip);
    const double scale = 2.0 / static_cast<double>(p);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < p; ++j)
        dP.at(i, j) += dL[i] * scale * (P.at(i, j) - target[i * p + j]);
  });
}

Var Tape::mean(Var x) {
  const Tensor& X = node(x, "mean").value;
  if (X.size() == 0) throw std::invalid_argument("mean: empty tensor");
  double acc = 0.0;
  for (double v : X.values()) acc += v;
  const double count = static_cast<double>(X.size());
  return push(Tensor({1}, {acc / count}), {x.id}, [count](Tape& t, std::size_t self) {
    const std::size_t ix = t.nodes_[self].inputs[0];
    if (!t.nodes_[ix].differentiable) return;
    const double dy = t.nodes_[self].adjoint[0] / count;
    Tensor& dX = t.adjoint_slot(ix);
    for (double& v : dX.values()) v += dy;
  });
}

void Tape::backward(Var output, const Tensor& seed) {
  if (nodes_.empty()) throw std::logic_error("backward: nothing was recorded on the tape");
  const Node& out = node(output, "backward");
  if (seed.size() != out.value.size()) {
    throw std::invalid_argument("backward: seed " + seed.shape_string() +
                                " does not match output " + out.value.shape_string());
  }
  for (Node& n : nodes_) n.adjoint = Tensor(n.value.shape(), 0.0);
  nodes_[output.id].adjoint.values() = seed.values();
  for (std::size_t id = output.id + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.differentiable || !n.pullback) continue;
    n.pullback(*this, id);
  }
  backward_done_ = true;
}

void Tape::backward(Var output) {
  const Tensor& out = node(output, "backward").value;
  backward(output, Tensor(out.shape(), 1.0));
}

const Tensor& Tape::grad(Var v) const {
  if (!backward_done_) throw std::logic_error("grad: backward() has not been run");
  return node(v, "grad").adjoint;
}

}  // namespace napts
