#include "napts/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "napts/random.hpp"

namespace napts {

namespace {

constexpr std::size_t kMinimumSize = 10;

std::uint32_t read_be32(std::istream& in, const std::filesystem::path& path) {
  std::array<unsigned char, 4> b{};
  if (!in.read(reinterpret_cast<char*>(b.data()), 4)) {
    throw std::runtime_error("IDX: truncated header in " + path.string());
  }
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) |
         std::uint32_t{b[3]};
}

}  // namespace

std::vector<std::string> dataset_kinds() { return {"blobs", "moons", "spiral"}; }

void split_samples(Dataset& data, const std::vector<double>& features,
                   const std::vector<int>& labels, std::uint64_t seed) {
  const std::size_t n = labels.size();
  const std::size_t q = data.features;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(seed, 0x5B117));
  rng.shuffle(std::span<std::size_t>(order));

  const std::size_t n_val = n / 5;
  data.val_indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  data.train_indices.assign(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());

  auto gather = [&](const std::vector<std::size_t>& rows, Tensor& x, std::vector<int>& y) {
    x = Tensor({rows.size(), q}, 0.0);
    y.resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t j = 0; j < q; ++j) x.at(i, j) = features[rows[i] * q + j];
      y[i] = labels[rows[i]];
    }
  };
  gather(data.train_indices, data.train_inputs, data.train_labels);
  gather(data.val_indices, data.val_inputs, data.val_labels);
}

Dataset generate_dataset(const std::string& kind, std::size_t size, std::uint64_t seed) {
  const auto kinds = dataset_kinds();
  if (std::find(kinds.begin(), kinds.end(), kind) == kinds.end()) {
    std::string valid;
    for (const auto& k : kinds) valid += (valid.empty() ? "" : ", ") + k;
    throw std::invalid_argument("unknown dataset '" + kind + "' (valid: " + valid +
                                ", idx:<images>,<labels>)");
  }
  if (size < kMinimumSize) {
    throw std::invalid_argument("dataset size must be at least " + std::to_string(kMinimumSize) +
                                ", got " + std::to_string(size));
  }
  Rng rng(seed);
  Dataset data;
  data.name = kind;
  data.features = 2;
  std::vector<double> x(size * 2);
  std::vector<int> y(size);
  constexpr double pi = std::numbers::pi;

  if (kind == "blobs") {
    data.classes = 3;
    for (std::size_t i = 0; i < size; ++i) {
      const int c = static_cast<int>(i % 3);
      const double angle = 2.0 * pi * c / 3.0;
      x[2 * i] = 10.0 * std::cos(angle) + rng.normal();
      x[2 * i + 1] = 10.0 * std::sin(angle) + rng.normal();
      y[i] = c;
    }
  } else if (kind == "moons") {
    data.classes = 2;
    for (std::size_t i = 0; i < size; ++i) {
      const int c = static_cast<int>(i % 2);
      const double t = rng.uniform(0.0, pi);
      if (c == 0) {
        x[2 * i] = std::cos(t);
        x[2 * i + 1] = std::sin(t);
      } else {
        x[2 * i] = 1.0 - std::cos(t);
        x[2 * i + 1] = 0.5 - std::sin(t);
      }
      x[2 * i] += 0.1 * rng.normal();
      x[2 * i + 1] += 0.1 * rng.normal();
      y[i] = c;
    }
  } else {
    data.classes = 2;
    for (std::size_t i = 0; i < size; ++i) {
      const int c = static_cast<int>(i % 2);
      const double u = rng.uniform();
      const double radius = 0.1 + 0.9 * u;
      const double angle = 3.0 * pi * u + c * pi;
      x[2 * i] = radius * std::cos(angle) + 0.02 * rng.normal();
      x[2 * i + 1] = radius * std::sin(angle) + 0.02 * rng.normal();
      y[i] = c;
    }
  }
  split_samples(data, x, y, seed);
  return data;
}

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                 std::size_t limit, std::uint64_t seed) {
  std::ifstream img(images, std::ios::binary);
  if (!img) throw std::runtime_error("IDX: cannot open " + images.string());
  std::ifstream lab(labels, std::ios::binary);
  if (!lab) throw std::runtime_error("IDX: cannot open " + labels.string());

  if (read_be32(img, images) != 0x00000803) {
    throw std::runtime_error("IDX: " + images.string() + " is not an image file (magic 0x803)");
  }
  const std::size_t count = read_be32(img, images);
  const std::size_t rows = read_be32(img, images);
  const std::size_t cols = read_be32(img, images);
  if (read_be32(lab, labels) != 0x00000801) {
    throw std::runtime_error("IDX: " + labels.string() + " is not a label file (magic 0x801)");
  }
  const std::size_t label_count = read_be32(lab, labels);
  if (label_count != count) {
    throw std::runtime_error("IDX: " + std::to_string(count) + " images but " +
                             std::to_string(label_count) + " labels");
  }
  const std::size_t n = limit == 0 ? count : std::min(limit, count);
  if (n < kMinimumSize) {
    throw std::invalid_argument("IDX: need at least " + std::to_string(kMinimumSize) +
                                " samples, have " + std::to_string(n));
  }
  const std::size_t q = rows * cols;
  std::vector<unsigned char> pixels(n * q);
  std::vector<unsigned char> raw_labels(n);
  if (!img.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(pixels.size())))
    throw std::runtime_error("IDX: truncated image data in " + images.string());
  if (!lab.read(reinterpret_cast<char*>(raw_labels.data()), static_cast<std::streamsize>(n)))
    throw std::runtime_error("IDX: truncated label data in " + labels.string());

  Dataset data;
  data.name = "idx:" + images.filename().string();
  data.features = q;
  std::vector<double> x(n * q);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = pixels[i] / 255.0;
  int max_label = 0;
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = raw_labels[i];
    max_label = std::max(max_label, y[i]);
  }
  data.classes = static_cast<std::size_t>(max_label) + 1;
  split_samples(data, x, y, seed);
  return data;
}

Dataset load_dataset(const std::string& spec, std::size_t size, std::uint64_t seed) {
  if (spec.rfind("idx:", 0) == 0) {
    const std::string rest = spec.substr(4);
    const auto comma = rest.find(',');
    if (comma == std::string::npos) {
      throw std::invalid_argument("IDX dataset expects idx:<images>,<labels>");
    }
    return load_idx(rest.substr(0, comma), rest.substr(comma + 1), size, seed);
  }
  return generate_dataset(spec, size, seed);
}

Batch make_batch(const Tensor& inputs, std::span<const int> labels,
                 std::span<const std::size_t> rows, std::uint64_t id) {
  const std::size_t q = inputs.cols();
  Batch b;
  b.id = id;
  b.inputs = Tensor({rows.size(), q}, 0.0);
  b.labels.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < q; ++j) b.inputs.at(i, j) = inputs.at(rows[i], j);
    b.labels[i] = labels[rows[i]];
  }
  return b;
}

}  // namespace napts
