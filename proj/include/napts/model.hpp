#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "napts/partition.hpp"
#include "napts/tensor.hpp"

namespace napts {

enum class Activation { identity, relu, tanh };
enum class LossKind { cross_entropy, mse };

std::string to_string(Activation a);
std::string to_string(LossKind l);
Activation parse_activation(const std::string& name);
LossKind parse_loss(const std::string& name);

/// Affine map followed by an elementwise activation. Weights are stored as an
/// [inputs x outputs] row-major matrix followed by the bias, so y = x W + b.
struct DenseLayer {
  std::size_t inputs = 0;
  std::size_t outputs = 0;
  Activation activation = Activation::identity;

  std::size_t parameter_count() const { return inputs * outputs + outputs; }
};

struct Batch {
  Tensor inputs;            // [m x q]
  std::vector<int> labels;  // class ids; cross-entropy and accuracy
  Tensor targets;           // [m x p] for mse; one-hot of labels when left empty
  std::uint64_t id = 0;

  std::size_t size() const { return inputs.rows(); }
};

/// Layered feed-forward network cut into N contiguous blocks of layers.
///
/// The network only describes architecture; parameter vectors are passed in
/// as flat spans. Block d owns a contiguous slice of the flat vector, so the
/// block slices concatenate to the whole parameter vector.
class SequentialNet {
 public:
  /// `block_starts` lists the first layer of every block; it must start at 0
  /// and be strictly increasing.
  SequentialNet(std::vector<DenseLayer> layers, std::vector<std::size_t> block_starts,
                LossKind loss);

  /// Fully connected net with `widths` = {q, h1, ..., p}; hidden layers use
  /// `hidden`, the output layer is linear. Blocks are balanced by parameter
  /// count.
  static SequentialNet mlp(std::span<const std::size_t> widths, Activation hidden,
                           LossKind loss, std::size_t blocks);

  /// Contiguous cut minimizing the largest block's parameter count.
  static std::vector<std::size_t> balanced_block_starts(std::span<const DenseLayer> layers,
                                                        std::size_t blocks);

  const std::vector<DenseLayer>& layers() const { return layers_; }
  LossKind loss_kind() const { return loss_; }
  std::size_t input_width() const { return layers_.front().inputs; }
  std::size_t output_width() const { return layers_.back().outputs; }
  std::size_t parameter_count() const { return layer_offsets_.back(); }

  std::size_t block_count() const { return block_starts_.size(); }
  /// Half-open layer range [first, last) of block d.
  std::pair<std::size_t, std::size_t> block_layers(std::size_t d) const;
  std::size_t block_offset(std::size_t d) const;
  std::size_t block_parameter_count(std::size_t d) const;
  ParamPartition partition() const;

  std::size_t layer_offset(std::size_t layer) const { return layer_offsets_[layer]; }

  /// Glorot-uniform weights, zero biases.
  std::vector<double> initial_parameters(std::uint64_t seed) const;

  Tensor predict(std::span<const double> theta, const Tensor& inputs) const;
  /// Mean per-sample loss over the batch.
  double loss(std::span<const double> theta, const Batch& batch) const;
  /// Fraction of rows whose arg-max prediction equals the label.
  double accuracy(std::span<const double> theta, const Tensor& inputs,
                  std::span<const int> labels) const;

  std::string describe() const;

 private:
  void check_block(std::size_t d) const;

  std::vector<DenseLayer> layers_;
  std::vector<std::size_t> block_starts_;
  std::vector<std::size_t> layer_offsets_;  // size layers+1
  LossKind loss_;
};

/// Boundary data of one global forward/backward pass, frozen for local solves.
///
/// block_inputs[d] is x_d (the activation entering block d) and downstream[d]
/// is G_d, the per-sample adjoint of the loss with respect to block d's
/// output. Both are tagged with the iterate and batch they came from.
struct BlockCache {
  std::vector<double> origin;
  std::uint64_t batch_id = 0;
  std::vector<Tensor> block_inputs;
  std::vector<Tensor> downstream;
  double loss = 0.0;
  std::vector<double> gradient;
};

struct Evaluation {
  double loss = 0.0;
  std::vector<double> gradient;
};

Evaluation value_and_gradient(const SequentialNet& net, std::span<const double> theta,
                              const Batch& batch);

/// One forward + backward pass over the full network, keeping x_d and G_d.
std::shared_ptr<const BlockCache> evaluate_with_cache(const SequentialNet& net,
                                                      std::span<const double> theta,
                                                      const Batch& batch);

/// G_d * dD_d/dtheta_d evaluated at the cached input x_d and the supplied
/// local parameters, with G_d held at its cached value. At theta_d equal to
/// the block's slice of cache.origin this is that slice of grad f; elsewhere
/// it is the gradient of the frozen surrogate sum_i <G_d[i], D_d(x_d[i])>.
std::vector<double> local_block_gradient(const SequentialNet& net, const BlockCache& cache,
                                         std::size_t d, std::span<const double> theta_d);

}  // namespace napts
