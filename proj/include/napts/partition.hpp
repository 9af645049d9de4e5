#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace napts {

/// Non-overlapping split of the parameter indices {0, ..., n-1} into N cells.
///
/// restrict() and prolong() are the selection R_d and its zero-padded
/// transpose R_d^T. They are stored as index lists and never materialized,
/// so R_d R_d^T = I, R_d R_e^T = 0 (d != e) and sum_d R_d^T R_d = I hold
/// exactly.
class ParamPartition {
 public:
  /// Validates that the cells are non-empty, sorted, pairwise disjoint and
  /// cover [0, n).
  ParamPartition(std::vector<std::vector<std::size_t>> cells, std::size_t n);

  /// Consecutive cells of the given sizes.
  static ParamPartition contiguous(std::span<const std::size_t> sizes);

  std::size_t total_size() const { return n_; }
  std::size_t cell_count() const { return cells_.size(); }
  std::size_t cell_size(std::size_t d) const;
  const std::vector<std::size_t>& cell(std::size_t d) const;

  std::vector<double> restrict(std::span<const double> theta, std::size_t d) const;
  std::vector<double> prolong(std::span<const double> local, std::size_t d) const;
  /// theta += R_d^T local
  void add_prolonged(std::span<const double> local, std::size_t d,
                     std::span<double> theta) const;

  /// s = sum_d R_d^T s_d. Supports are disjoint, so |s|_inf = max_d |s_d|_inf.
  std::vector<double> lift_sum(std::span<const std::vector<double>> local_steps) const;

 private:
  void check_cell(std::size_t d) const;

  std::vector<std::vector<std::size_t>> cells_;
  std::size_t n_ = 0;
};

}  // namespace napts
