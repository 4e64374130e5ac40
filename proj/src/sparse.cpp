// SPDX-License-Identifier: Apache-2.0

#include "pfem/sparse.hpp"

namespace pfem {

RowPartition::RowPartition(std::vector<Index> node_offsets, Index rows_per_node)
    : offsets_(std::move(node_offsets)), width_(rows_per_node) {
  if (width_ < 1) throw std::invalid_argument("RowPartition: rows_per_node must be positive");
  if (offsets_.size() < 2 || offsets_.front() != 0) {
    throw std::invalid_argument("RowPartition: offsets must start at 0 and name at least one rank");
  }
  for (std::size_t r = 1; r < offsets_.size(); ++r) {
    if (offsets_[r] < offsets_[r - 1]) throw std::invalid_argument("RowPartition: offsets must not decrease");
  }
}

int RowPartition::owner_of_node(Index node) const {
  if (node < 0 || node >= nodes()) throw std::out_of_range("RowPartition: node " + std::to_string(node));
  const auto it = std::upper_bound(offsets_.begin(), offsets_.end(), node);
  return static_cast<int>(it - offsets_.begin()) - 1;
}

RowPartition partition_rows(Index node_count, int ranks, Index rows_per_node) {
  if (ranks < 1) throw std::invalid_argument("partition_rows: at least one rank required");
  if (node_count < ranks) {
    throw std::invalid_argument("partition_rows: " + std::to_string(ranks) + " ranks for " +
                                std::to_string(node_count) + " nodes");
  }
  std::vector<Index> offsets{0};
  const Index base = node_count / ranks;
  const Index extra = node_count % ranks;
  for (int r = 0; r < ranks; ++r) offsets.push_back(offsets.back() + base + (r < extra ? 1 : 0));
  return RowPartition(std::move(offsets), rows_per_node);
}

}  // namespace pfem
