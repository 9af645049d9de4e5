#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "napts/model.hpp"
#include "napts/tensor.hpp"

namespace napts {

/// Labelled classification data, already split 80/20 into train/validation.
struct Dataset {
  std::string name;
  std::size_t features = 0;
  std::size_t classes = 0;
  Tensor train_inputs;  // [m_train x features]
  std::vector<int> train_labels;
  Tensor val_inputs;    // [m_val x features]
  std::vector<int> val_labels;
  // Positions of each split's rows in the generated (pre-split) sample order.
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> val_indices;

  std::size_t train_size() const { return train_labels.size(); }
  std::size_t val_size() const { return val_labels.size(); }
};

/// "blobs", "moons", "spiral".
std::vector<std::string> dataset_kinds();

/// Deterministic synthetic set. Sizes below 10 are rejected.
///
///  blobs   3 Gaussian clusters (sd 1) centred on a circle of radius 10
///  moons   two interleaved half circles, Gaussian noise sd 0.1
///  spiral  two interleaved Archimedean arms, 1.5 turns each
Dataset generate_dataset(const std::string& kind, std::size_t size, std::uint64_t seed);

/// Images and labels in the IDX format (big-endian 0x0803 / 0x0801 magics).
/// Pixels are scaled to [0, 1]; `limit` caps the sample count (0 = all).
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                 std::size_t limit, std::uint64_t seed);

/// Resolves a dataset argument: a synthetic kind, or "idx:<images>,<labels>".
Dataset load_dataset(const std::string& spec, std::size_t size, std::uint64_t seed);

/// Gathers the given rows into a batch.
Batch make_batch(const Tensor& inputs, std::span<const int> labels,
                 std::span<const std::size_t> rows, std::uint64_t id);

/// Splits samples [0, n) 80/20 after a seeded shuffle. n_val = n / 5.
void split_samples(Dataset& data, const std::vector<double>& features,
                   const std::vector<int>& labels, std::uint64_t seed);

}  // namespace napts
