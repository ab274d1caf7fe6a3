#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "facetrace/types.hpp"

namespace facetrace {

/// Fixed-width neighbor lists, row i holding the k nearest other points of point i
/// in ascending distance (ties: lower index first).
class NeighborTable {
 public:
  NeighborTable() = default;
  NeighborTable(std::size_t n, std::size_t k) : k_(k), ids_(n * k) {}

  std::size_t size() const { return k_ == 0 ? 0 : ids_.size() / k_; }
  std::size_t k() const { return k_; }

  std::span<const PointIndex> of(std::size_t i) const { return {ids_.data() + i * k_, k_}; }
  std::span<PointIndex> of(std::size_t i) { return {ids_.data() + i * k_, k_}; }

 private:
  std::size_t k_ = 0;
  std::vector<PointIndex> ids_;
};

/// Static k-d tree over a set of positions. Queries are exact.
class KdTree {
 public:
  explicit KdTree(std::span<const Vec3> positions, std::size_t leaf_size = 12);

  /// The k nearest points to `query`, ascending by (squared distance, index).
  /// `exclude` (if < size) is skipped, which is how self-matches are removed.
  void nearest(const Vec3& query, std::size_t k, std::vector<PointIndex>& out,
               std::size_t exclude = static_cast<std::size_t>(-1)) const;

  std::size_t size() const { return positions_.size(); }

 private:
  struct Node {
    // Leaf when split_dim < 0; children index into nodes_.
    int split_dim = -1;
    double split_value = 0.0;
    std::uint32_t left = 0, right = 0;
    std::uint32_t begin = 0, end = 0;
  };

  std::uint32_t build(std::uint32_t begin, std::uint32_t end);

  std::span<const Vec3> positions_;
  std::vector<PointIndex> order_;
  std::vector<Node> nodes_;
  std::size_t leaf_size_;
};

/// K nearest other points for every point. Rejects k >= N.
NeighborTable knn_index(const Cloud& points, std::size_t k, unsigned workers = 1);

}  // namespace facetrace
