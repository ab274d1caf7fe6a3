#include "facetrace/knn.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>

#include "facetrace/parallel.hpp"

namespace facetrace {

KdTree::KdTree(std::span<const Vec3> positions, std::size_t leaf_size)
    : positions_(positions), order_(positions.size()), leaf_size_(std::max<std::size_t>(leaf_size, 1)) {
  std::iota(order_.begin(), order_.end(), PointIndex{0});
  if (!order_.empty()) {
    nodes_.reserve(2 * positions.size() / leaf_size_ + 2);
    build(0, static_cast<std::uint32_t>(order_.size()));
  }
}

std::uint32_t KdTree::build(std::uint32_t begin, std::uint32_t end) {
  const auto id = static_cast<std::uint32_t>(nodes_.size());
  nodes_.push_back({});
  if (end - begin <= leaf_size_) {
    nodes_[id].begin = begin;
    nodes_[id].end = end;
    return id;
  }

  Vec3 lo = positions_[order_[begin]];
  Vec3 hi = lo;
  for (std::uint32_t i = begin + 1; i < end; ++i) {
    lo = lo.cwiseMin(positions_[order_[i]]);
    hi = hi.cwiseMax(positions_[order_[i]]);
  }
  int dim = 0;
  (hi - lo).maxCoeff(&dim);
  if (hi[dim] == lo[dim]) {
    // All coincident: keep as one leaf.
    nodes_[id].begin = begin;
    nodes_[id].end = end;
    return id;
  }

  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](PointIndex a, PointIndex b) {
                     const double pa = positions_[a][dim], pb = positions_[b][dim];
                     return pa < pb || (pa == pb && a < b);
                   });
  const double split = positions_[order_[mid]][dim];
  const std::uint32_t left = build(begin, mid);
  const std::uint32_t right = build(mid, end);
  nodes_[id].split_dim = dim;
  nodes_[id].split_value = split;
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

void KdTree::nearest(const Vec3& query, std::size_t k, std::vector<PointIndex>& out,
                     std::size_t exclude) const {
  out.clear();
  if (k == 0 || nodes_.empty()) return;

  // Max-heap on (squared distance, index): the top is the current worst candidate.
  using Candidate = std::pair<double, PointIndex>;
  std::vector<Candidate> heap;
  heap.reserve(k + 1);

  auto offer = [&](PointIndex idx) {
    if (idx == exclude) return;
    const Candidate c{(positions_[idx] - query).squaredNorm(), idx};
    if (heap.size() < k) {
      heap.push_back(c);
      std::push_heap(heap.begin(), heap.end());
    } else if (c < heap.front()) {
      std::pop_heap(heap.begin(), heap.end());
      heap.back() = c;
      std::push_heap(heap.begin(), heap.end());
    }
  };

  // Explicit stack of (node, lower bound on squared distance to its region).
  std::vector<std::pair<std::uint32_t, double>> stack;
  stack.reserve(64);
  stack.emplace_back(0u, 0.0);
  while (!stack.empty()) {
    const auto [node_id, bound] = stack.back();
    stack.pop_back();
    if (heap.size() == k && bound > heap.front().first) continue;
    const Node& node = nodes_[node_id];
    if (node.split_dim < 0) {
      for (std::uint32_t i = node.begin; i < node.end; ++i) offer(order_[i]);
      continue;
    }
    const double diff = query[node.split_dim] - node.split_value;
    const double far_bound = std::max(bound, diff * diff);
    // Points equal to the split value can sit on either side, so both children
    // are bounded inclusively.
    if (diff < 0.0) {
      stack.emplace_back(node.right, far_bound);
      stack.emplace_back(node.left, bound);
    } else {
      stack.emplace_back(node.left, far_bound);
      stack.emplace_back(node.right, bound);
    }
  }

  std::sort_heap(heap.begin(), heap.end());
  out.reserve(heap.size());
  for (const auto& c : heap) out.push_back(c.second);
}

NeighborTable knn_index(const Cloud& points, std::size_t k, unsigned workers) {
  const std::size_t n = points.size();
  if (k == 0) throw std::invalid_argument("knn_index: K must be positive");
  if (k >= n) {
    throw std::invalid_argument("knn_index: K (" + std::to_string(k) +
                                ") must be smaller than the number of points (" +
                                std::to_string(n) + ")");
  }
  std::vector<Vec3> positions(n);
  for (std::size_t i = 0; i < n; ++i) positions[i] = points[i].position;
  const KdTree tree(positions);

  NeighborTable table(n, k);
  parallel_for(n, workers, [&](std::size_t begin, std::size_t end) {
    std::vector<PointIndex> found;
    for (std::size_t i = begin; i < end; ++i) {
      tree.nearest(positions[i], k, found, i);
      std::copy(found.begin(), found.end(), table.of(i).begin());
    }
  });
  return table;
}

}  // namespace facetrace
