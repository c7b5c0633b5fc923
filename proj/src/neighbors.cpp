#include "lapconv/neighbors.hpp"

#include "lapconv/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>

namespace lapconv {

NeighborIndex::NeighborIndex(std::vector<Point> points, int ambient_dim, std::size_t leaf_size)
    : points_(std::move(points)), dim_(ambient_dim), leaf_size_(std::max<std::size_t>(leaf_size, 1)) {
  if (points_.size() > std::numeric_limits<std::uint32_t>::max())
    throw DomainError("NeighborIndex: too many points");
  if (points_.size() < kBruteForceBelow) return;
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), 0u);
  nodes_.reserve(2 * points_.size() / leaf_size_ + 1);
  build(0, static_cast<std::uint32_t>(points_.size()));
}

std::int32_t NeighborIndex::build(std::uint32_t begin, std::uint32_t end) {
  Node node;
  node.begin = begin;
  node.end = end;
  node.lo.fill(std::numeric_limits<double>::infinity());
  node.hi.fill(-std::numeric_limits<double>::infinity());
  for (std::uint32_t i = begin; i < end; ++i) {
    const Point& p = points_[order_[i]];
    for (int a = 0; a < dim_; ++a) {
      node.lo[a] = std::min(node.lo[a], p[a]);
      node.hi[a] = std::max(node.hi[a], p[a]);
    }
  }
  for (int a = dim_; a < static_cast<int>(kMaxAmbient); ++a) node.lo[a] = node.hi[a] = 0.0;

  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back(node);
  if (end - begin <= leaf_size_) return id;

  int axis = 0;
  for (int a = 1; a < dim_; ++a)
    if (node.hi[a] - node.lo[a] > node.hi[axis] - node.lo[axis]) axis = a;
  const std::uint32_t mid = begin + (end - begin) / 2;
  // Ties broken by index so the split does not depend on the library's
  // nth_element internals.
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     const double pa = points_[a][axis], pb = points_[b][axis];
                     return pa < pb || (pa == pb && a < b);
                   });
  const std::int32_t left = build(begin, mid);
  const std::int32_t right = build(mid, end);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

// Same operation order as chord_distance, so the bound never exceeds the
// computed distance of a point inside the box.
double NeighborIndex::box_distance(const Node& node, const Point& x) const {
  double s = 0.0;
  for (std::size_t a = 0; a < kMaxAmbient; ++a) {
    double t = 0.0;
    if (x[a] < node.lo[a])
      t = x[a] - node.lo[a];
    else if (x[a] > node.hi[a])
      t = x[a] - node.hi[a];
    s += t * t;
  }
  return std::sqrt(s);
}

std::vector<std::uint32_t> NeighborIndex::range_query(const Point& x, double r) const {
  if (!(r >= 0.0)) throw DomainError("range_query: radius must be nonnegative");
  std::vector<std::uint32_t> out;
  if (nodes_.empty()) {
    for (std::uint32_t i = 0; i < points_.size(); ++i)
      if (chord_distance(x, points_[i]) <= r) out.push_back(i);
    return out;
  }
  std::vector<std::int32_t> stack{0};
  while (!stack.empty()) {
    const Node& node = nodes_[stack.back()];
    stack.pop_back();
    if (box_distance(node, x) > r) continue;
    if (node.left < 0) {
      for (std::uint32_t i = node.begin; i < node.end; ++i)
        if (chord_distance(x, points_[order_[i]]) <= r) out.push_back(order_[i]);
    } else {
      stack.push_back(node.right);
      stack.push_back(node.left);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

double NeighborIndex::knn_radius(const Point& x, std::size_t k) const {
  if (k < 1 || k > points_.size()) throw DomainError("knn_radius: k must satisfy 1 <= k <= n");
  if (nodes_.empty()) {
    std::vector<double> d(points_.size());
    for (std::size_t i = 0; i < points_.size(); ++i) d[i] = chord_distance(x, points_[i]);
    std::nth_element(d.begin(), d.begin() + (k - 1), d.end());
    return d[k - 1];
  }
  std::priority_queue<double> heap;
  const auto bound = [&] { return heap.size() < k ? std::numeric_limits<double>::infinity() : heap.top(); };
  // Depth-first, nearer child first.
  std::vector<std::int32_t> stack{0};
  while (!stack.empty()) {
    const Node& node = nodes_[stack.back()];
    stack.pop_back();
    if (box_distance(node, x) > bound()) continue;
    if (node.left < 0) {
      for (std::uint32_t i = node.begin; i < node.end; ++i) {
        const double dist = chord_distance(x, points_[order_[i]]);
        if (heap.size() < k) {
          heap.push(dist);
        } else if (dist < heap.top()) {
          heap.pop();
          heap.push(dist);
        }
      }
    } else {
      const double dl = box_distance(nodes_[node.left], x);
      const double dr = box_distance(nodes_[node.right], x);
      if (dl <= dr) {
        stack.push_back(node.right);
        stack.push_back(node.left);
      } else {
        stack.push_back(node.left);
        stack.push_back(node.right);
      }
    }
  }
  return heap.top();
}

} // namespace lapconv
