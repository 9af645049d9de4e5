#include "napts/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "napts/random.hpp"

namespace napts {

std::string to_string(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
  }
  return "?";
}

std::string to_string(LossKind l) { return l == LossKind::mse ? "mse" : "ce"; }

Activation parse_activation(const std::string& name) {
  if (name == "identity" || name == "linear") return Activation::identity;
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  throw std::invalid_argument("unknown activation '" + name + "' (identity, relu, tanh)");
}

LossKind parse_loss(const std::string& name) {
  if (name == "ce" || name == "cross_entropy" || name == "cross-entropy")
    return LossKind::cross_entropy;
  if (name == "mse") return LossKind::mse;
  throw std::invalid_argument("unknown loss '" + name + "' (ce, mse)");
}

namespace {

std::string layer_name(std::size_t index, const DenseLayer& layer) {
  return "layer " + std::to_string(index) + " (dense " + std::to_string(layer.inputs) + "->" +
         std::to_string(layer.outputs) + ", " + to_string(layer.activation) + ")";
}

// Records layers [first, last) on the tape starting from `x`. Parameter
// leaves for each layer (weights then bias) are appended to `leaves`.
Var record_layers(Tape& tape, Var x, std::span<const DenseLayer> all_layers, std::size_t first,
                  std::size_t last, std::span<const double> params, std::vector<Var>* leaves) {
  std::size_t offset = 0;
  for (std::size_t l = first; l < last; ++l) {
    const DenseLayer& layer = all_layers[l];
    const Tensor& input = tape.value(x);
    if (input.rank() != 2 || input.cols() != layer.inputs) {
      throw std::invalid_argument(layer_name(l, layer) + ": expected input width " +
                                  std::to_string(layer.inputs) + ", got " +
                                  input.shape_string());
    }
    const std::size_t nw = layer.inputs * layer.outputs;
    Tensor w({layer.inputs, layer.outputs},
             std::vector<double>(params.begin() + offset, params.begin() + offset + nw));
    Tensor b({layer.outputs}, std::vector<double>(params.begin() + offset + nw,
                                                  params.begin() + offset + nw + layer.outputs));
    offset += layer.parameter_count();
    const Var wv = tape.leaf(std::move(w));
    const Var bv = tape.leaf(std::move(b));
    if (leaves) {
      leaves->push_back(wv);
      leaves->push_back(bv);
    }
    Var h = tape.add_bias(tape.matmul(x, wv), bv);
    switch (layer.activation) {
      case Activation::identity: break;
      case Activation::relu: h = tape.relu(h); break;
      case Activation::tanh: h = tape.tanh(h); break;
    }
    x = h;
  }
  return x;
}

Tensor one_hot(std::span<const int> labels, std::size_t classes) {
  Tensor t({labels.size(), classes}, 0.0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= classes) {
      throw std::invalid_argument("label " + std::to_string(labels[i]) + " outside [0, " +
                                  std::to_string(classes) + ")");
    }
    t.at(i, static_cast<std::size_t>(labels[i])) = 1.0;
  }
  return t;
}

Var record_loss(Tape& tape, Var prediction, const SequentialNet& net, const Batch& batch) {
  Var per_sample;
  if (net.loss_kind() == LossKind::cross_entropy) {
    per_sample = tape.softmax_cross_entropy(prediction, batch.labels);
  } else if (batch.targets.size() > 0) {
    per_sample = tape.mse(prediction, batch.targets);
  } else {
    per_sample = tape.mse(prediction, one_hot(batch.labels, net.output_width()));
  }
  return tape.mean(per_sample);
}

void require_batch(const Batch& batch) {
  if (batch.inputs.size() == 0 || batch.size() == 0) {
    throw std::invalid_argument("empty batch");
  }
}

void require_length(std::span<const double> theta, std::size_t n, const char* what) {
  if (theta.size() != n) {
    throw std::invalid_argument(std::string(what) + ": parameter vector of length " +
                                std::to_string(theta.size()) + ", expected " +
                                std::to_string(n));
  }
}

// Full forward + backward pass. Optionally keeps block boundaries.
struct GlobalPass {
  Tape tape;
  std::vector<Var> leaves;
  std::vector<Var> block_inputs;
  std::vector<Var> block_outputs;
  Var loss;
};

void run_global_pass(GlobalPass& pass, const SequentialNet& net, std::span<const double> theta,
                     const Batch& batch, bool differentiate) {
  require_batch(batch);
  require_length(theta, net.parameter_count(), "evaluate");
  Var x = pass.tape.constant(batch.inputs);
  for (std::size_t d = 0; d < net.block_count(); ++d) {
    const auto [first, last] = net.block_layers(d);
    pass.block_inputs.push_back(x);
    const std::size_t begin = net.layer_offset(first);
    const std::size_t end = net.layer_offset(last);
    x = record_layers(pass.tape, x, net.layers(), first, last, theta.subspan(begin, end - begin),
                      &pass.leaves);
    pass.block_outputs.push_back(x);
  }
  pass.loss = record_loss(pass.tape, x, net, batch);
  if (differentiate) pass.tape.backward(pass.loss);
}

std::vector<double> flatten_gradients(const Tape& tape, std::span<const Var> leaves,
                                      std::size_t n) {
  std::vector<double> g;
  g.reserve(n);
  for (Var v : leaves) {
    const auto values = tape.grad(v).data();
    g.insert(g.end(), values.begin(), values.end());
  }
  return g;
}

}  // namespace

SequentialNet::SequentialNet(std::vector<DenseLayer> layers,
                             std::vector<std::size_t> block_starts, LossKind loss)
    : layers_(std::move(layers)), block_starts_(std::move(block_starts)), loss_(loss) {
  if (layers_.empty()) throw std::invalid_argument("SequentialNet: no layers");
  if (block_starts_.empty() || block_starts_.front() != 0) {
    throw std::invalid_argument("SequentialNet: the first block must start at layer 0");
  }
  for (std::size_t d = 1; d < block_starts_.size(); ++d) {
    if (block_starts_[d] <= block_starts_[d - 1] || block_starts_[d] >= layers_.size()) {
      throw std::invalid_argument("SequentialNet: block starts must be strictly increasing "
                                  "layer indices below " + std::to_string(layers_.size()));
    }
  }
  layer_offsets_.assign(1, 0);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const DenseLayer& layer = layers_[l];
    if (layer.inputs == 0 || layer.outputs == 0) {
      throw std::invalid_argument(layer_name(l, layer) + ": zero width");
    }
    if (l > 0 && layers_[l - 1].outputs != layer.inputs) {
      throw std::invalid_argument(layer_name(l, layer) + ": expected input width " +
                                  std::to_string(layer.inputs) + " but the previous layer emits " +
                                  std::to_string(layers_[l - 1].outputs));
    }
    layer_offsets_.push_back(layer_offsets_.back() + layer.parameter_count());
  }
}

std::vector<std::size_t> SequentialNet::balanced_block_starts(std::span<const DenseLayer> layers,
                                                              std::size_t blocks) {
  const std::size_t L = layers.size();
  if (blocks == 0 || blocks > L) {
    throw std::invalid_argument("cannot split " + std::to_string(L) + " layers into " +
                                std::to_string(blocks) + " blocks");
  }
  std::vector<std::size_t> prefix(L + 1, 0);
  for (std::size_t l = 0; l < L; ++l) prefix[l + 1] = prefix[l] + layers[l].parameter_count();

  // best[b][l]: smallest achievable max block size covering layers [0, l) with b blocks.
  constexpr std::size_t kInf = std::numeric_limits<std::size_t>::max();
  std::vector<std::vector<std::size_t>> best(blocks + 1, std::vector<std::size_t>(L + 1, kInf));
  std::vector<std::vector<std::size_t>> cut(blocks + 1, std::vector<std::size_t>(L + 1, 0));
  best[0][0] = 0;
  for (std::size_t b = 1; b <= blocks; ++b) {
    for (std::size_t l = b; l <= L; ++l) {
      for (std::size_t s = b - 1; s < l; ++s) {
        if (best[b - 1][s] == kInf) continue;
        const std::size_t cost = std::max(best[b - 1][s], prefix[l] - prefix[s]);
        if (cost < best[b][l]) {
          best[b][l] = cost;
          cut[b][l] = s;
        }
      }
    }
  }
  std::vector<std::size_t> starts(blocks);
  std::size_t l = L;
  for (std::size_t b = blocks; b >= 1; --b) {
    starts[b - 1] = cut[b][l];
    l = cut[b][l];
  }
  return starts;
}

SequentialNet SequentialNet::mlp(std::span<const std::size_t> widths, Activation hidden,
                                 LossKind loss, std::size_t blocks) {
  if (widths.size() < 2) throw std::invalid_argument("mlp: need at least input and output widths");
  std::vector<DenseLayer> layers;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    const bool last = i + 2 == widths.size();
    layers.push_back({widths[i], widths[i + 1], last ? Activation::identity : hidden});
  }
  auto starts = balanced_block_starts(layers, blocks);
  return SequentialNet(std::move(layers), std::move(starts), loss);
}

void SequentialNet::check_block(std::size_t d) const {
  if (d >= block_starts_.size()) {
    throw std::out_of_range("block " + std::to_string(d) + " of " +
                            std::to_string(block_starts_.size()));
  }
}

std::pair<std::size_t, std::size_t> SequentialNet::block_layers(std::size_t d) const {
  check_block(d);
  const std::size_t last = d + 1 < block_starts_.size() ? block_starts_[d + 1] : layers_.size();
  return {block_starts_[d], last};
}

std::size_t SequentialNet::block_offset(std::size_t d) const {
  return layer_offsets_[block_layers(d).first];
}

std::size_t SequentialNet::block_parameter_count(std::size_t d) const {
  const auto [first, last] = block_layers(d);
  return layer_offsets_[last] - layer_offsets_[first];
}

ParamPartition SequentialNet::partition() const {
  std::vector<std::size_t> sizes;
  for (std::size_t d = 0; d < block_count(); ++d) sizes.push_back(block_parameter_count(d));
  return ParamPartition::contiguous(sizes);
}

std::vector<double> SequentialNet::initial_parameters(std::uint64_t seed) const {
  Rng rng(seed);
  std::vector<double> theta(parameter_count(), 0.0);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const DenseLayer& layer = layers_[l];
    const double limit = std::sqrt(6.0 / static_cast<double>(layer.inputs + layer.outputs));
    const std::size_t nw = layer.inputs * layer.outputs;
    for (std::size_t i = 0; i < nw; ++i) theta[layer_offsets_[l] + i] = rng.uniform(-limit, limit);
  }
  return theta;
}

Tensor SequentialNet::predict(std::span<const double> theta, const Tensor& inputs) const {
  require_length(theta, parameter_count(), "predict");
  Tape tape;
  const Var out = record_layers(tape, tape.constant(inputs), layers_, 0, layers_.size(), theta,
                                nullptr);
  return tape.value(out);
}

double SequentialNet::loss(std::span<const double> theta, const Batch& batch) const {
  GlobalPass pass;
  run_global_pass(pass, *this, theta, batch, false);
  return pass.tape.value(pass.loss)[0];
}

double SequentialNet::accuracy(std::span<const double> theta, const Tensor& inputs,
                               std::span<const int> labels) const {
  if (labels.empty()) return 0.0;
  const Tensor out = predict(theta, inputs);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    std::size_t arg = 0;
    for (std::size_t j = 1; j < out.cols(); ++j)
      if (out.at(i, j) > out.at(i, arg)) arg = j;
    if (static_cast<int>(arg) == labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

std::string SequentialNet::describe() const {
  std::ostringstream out;
  out << input_width();
  for (const auto& layer : layers_) out << "-" << layer.outputs;
  out << " (" << parameter_count() << " params, " << block_count() << " blocks:";
  for (std::size_t d = 0; d < block_count(); ++d) out << ' ' << block_parameter_count(d);
  out << ")";
  return out.str();
}

Evaluation value_and_gradient(const SequentialNet& net, std::span<const double> theta,
                              const Batch& batch) {
  GlobalPass pass;
  run_global_pass(pass, net, theta, batch, true);
  return {pass.tape.value(pass.loss)[0],
          flatten_gradients(pass.tape, pass.leaves, net.parameter_count())};
}

std::shared_ptr<const BlockCache> evaluate_with_cache(const SequentialNet& net,
                                                      std::span<const double> theta,
                                                      const Batch& batch) {
  GlobalPass pass;
  run_global_pass(pass, net, theta, batch, true);
  auto cache = std::make_shared<BlockCache>();
  cache->origin.assign(theta.begin(), theta.end());
  cache->batch_id = batch.id;
  for (std::size_t d = 0; d < net.block_count(); ++d) {
    cache->block_inputs.push_back(pass.tape.value(pass.block_inputs[d]));
    cache->downstream.push_back(pass.tape.grad(pass.block_outputs[d]));
  }
  cache->loss = pass.tape.value(pass.loss)[0];
  cache->gradient = flatten_gradients(pass.tape, pass.leaves, net.parameter_count());
  return cache;
}

std::vector<double> local_block_gradient(const SequentialNet& net, const BlockCache& cache,
                                         std::size_t d, std::span<const double> theta_d) {
  if (d >= net.block_count() || d >= cache.block_inputs.size()) {
    throw std::out_of_range("local_block_gradient: block " + std::to_string(d) + " of " +
                            std::to_string(net.block_count()));
  }
  require_length(theta_d, net.block_parameter_count(d), "local_block_gradient");
  const auto [first, last] = net.block_layers(d);
  Tape tape;
  std::vector<Var> leaves;
  const Var out = record_layers(tape, tape.constant(cache.block_inputs[d]), net.layers(), first,
                                last, theta_d, &leaves);
  tape.backward(out, cache.downstream[d]);
  return flatten_gradients(tape, leaves, theta_d.size());
}

}  // namespace napts
