#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace napts {

/// Portable pseudo-random source.
///
/// std::mt19937_64 has a fully specified output sequence, but the standard
/// distributions do not, so the conversions below are done by hand: uniforms
/// take the top 53 bits, normals use Box-Muller, shuffles are Fisher-Yates
/// with rejection-sampled indices. Same seed, same stream, on any platform
/// with an IEEE-754 libm.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal.
  double normal();

  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n);

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) std::swap(items[i - 1], items[index(i)]);
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Mixes a base seed with a stream tag (epoch, subdomain, ...).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace napts
