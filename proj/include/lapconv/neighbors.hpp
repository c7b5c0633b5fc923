#pragma once

#include "lapconv/point.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace lapconv {

/// Immutable k-d tree over ambient points. All distance comparisons go
/// through chord_distance and use closed balls (<= r).
class NeighborIndex {
public:
  static constexpr std::size_t kDefaultLeafSize = 16;
  /// Below this many points queries scan the whole set.
  static constexpr std::size_t kBruteForceBelow = 256;

  explicit NeighborIndex(std::vector<Point> points, int ambient_dim = static_cast<int>(kMaxAmbient),
                         std::size_t leaf_size = kDefaultLeafSize);

  std::size_t size() const { return points_.size(); }
  const Point& point(std::size_t i) const { return points_[i]; }

  /// Indices i with |x - X_i| <= r, ascending.
  std::vector<std::uint32_t> range_query(const Point& x, double r) const;

  /// k-th smallest |x - X_i| (k-th order statistic, ties counted). Throws
  /// DomainError unless 1 <= k <= n.
  double knn_radius(const Point& x, std::size_t k) const;

  bool uses_tree() const { return !nodes_.empty(); }

private:
  struct Node {
    Point lo{};
    Point hi{};
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    std::int32_t left = -1;
    std::int32_t right = -1;
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end);
  double box_distance(const Node& node, const Point& x) const;

  std::vector<Point> points_;
  int dim_;
  std::size_t leaf_size_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

} // namespace lapconv
