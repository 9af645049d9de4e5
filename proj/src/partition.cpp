#include "napts/partition.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace napts {

ParamPartition::ParamPartition(std::vector<std::vector<std::size_t>> cells, std::size_t n)
    : cells_(std::move(cells)), n_(n) {
  if (cells_.empty()) throw std::invalid_argument("ParamPartition: no cells");
  std::vector<char> seen(n_, 0);
  std::size_t covered = 0;
  for (std::size_t d = 0; d < cells_.size(); ++d) {
    const auto& c = cells_[d];
    if (c.empty()) {
      throw std::invalid_argument("ParamPartition: cell " + std::to_string(d) + " is empty");
    }
    if (!std::is_sorted(c.begin(), c.end())) {
      throw std::invalid_argument("ParamPartition: cell " + std::to_string(d) +
                                  " is not sorted");
    }
    for (std::size_t i : c) {
      if (i >= n_) {
        throw std::invalid_argument("ParamPartition: index " + std::to_string(i) +
                                    " outside [0, " + std::to_string(n_) + ")");
      }
      if (seen[i]) {
        throw std::invalid_argument("ParamPartition: index " + std::to_string(i) +
                                    " appears in more than one cell");
      }
      seen[i] = 1;
      ++covered;
    }
  }
  if (covered != n_) {
    throw std::invalid_argument("ParamPartition: cells cover " + std::to_string(covered) +
                                " of " + std::to_string(n_) + " indices");
  }
}

ParamPartition ParamPartition::contiguous(std::span<const std::size_t> sizes) {
  std::vector<std::vector<std::size_t>> cells;
  std::size_t offset = 0;
  for (std::size_t size : sizes) {
    std::vector<std::size_t> c(size);
    for (std::size_t i = 0; i < size; ++i) c[i] = offset + i;
    offset += size;
    cells.push_back(std::move(c));
  }
  return ParamPartition(std::move(cells), offset);
}

void ParamPartition::check_cell(std::size_t d) const {
  if (d >= cells_.size()) {
    throw std::out_of_range("ParamPartition: cell " + std::to_string(d) + " of " +
                            std::to_string(cells_.size()));
  }
}

std::size_t ParamPartition::cell_size(std::size_t d) const {
  check_cell(d);
  return cells_[d].size();
}

const std::vector<std::size_t>& ParamPartition::cell(std::size_t d) const {
  check_cell(d);
  return cells_[d];
}

std::vector<double> ParamPartition::restrict(std::span<const double> theta,
                                             std::size_t d) const {
  check_cell(d);
  if (theta.size() != n_) {
    throw std::invalid_argument("restrict: vector of length " + std::to_string(theta.size()) +
                                ", expected " + std::to_string(n_));
  }
  const auto& c = cells_[d];
  std::vector<double> out(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) out[i] = theta[c[i]];
  return out;
}

std::vector<double> ParamPartition::prolong(std::span<const double> local,
                                            std::size_t d) const {
  std::vector<double> out(n_, 0.0);
  add_prolonged(local, d, out);
  return out;
}

void ParamPartition::add_prolonged(std::span<const double> local, std::size_t d,
                                   std::span<double> theta) const {
  check_cell(d);
  const auto& c = cells_[d];
  if (local.size() != c.size()) {
    throw std::invalid_argument("prolong: cell " + std::to_string(d) + " has " +
                                std::to_string(c.size()) + " entries, got " +
                                std::to_string(local.size()));
  }
  if (theta.size() != n_) {
    throw std::invalid_argument("prolong: target of length " + std::to_string(theta.size()) +
                                ", expected " + std::to_string(n_));
  }
  for (std::size_t i = 0; i < c.size(); ++i) theta[c[i]] += local[i];
}

std::vector<double> ParamPartition::lift_sum(
    std::span<const std::vector<double>> local_steps) const {
  if (local_steps.size() != cells_.size()) {
    throw std::invalid_argument("lift_sum: " + std::to_string(local_steps.size()) +
                                " local steps for " + std::to_string(cells_.size()) + " cells");
  }
  std::vector<double> out(n_, 0.0);
  for (std::size_t d = 0; d < cells_.size(); ++d) add_prolonged(local_steps[d], d, out);
  return out;
}

}  // namespace napts
