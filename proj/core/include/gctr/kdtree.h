#pragma once

#include <cstddef>
#include <vector>

#include "gctr/geometry.h"

namespace gctr {

struct Neighbor {
  std::size_t index;
  double squared_distance;
};

// Static 3D kd-tree. Results are ordered by (distance, index), so queries are
// fully deterministic even with duplicate points.
class KdTree {
 public:
  explicit KdTree(std::vector<Point3> points);

  std::size_t size() const noexcept { return points_.size(); }
  const Point3& point(std::size_t index) const { return points_[index]; }

  // Throws Error(kInvalidArgument) on an empty tree.
  Neighbor nearest(const Point3& query) const;
  std::vector<Neighbor> knn(const Point3& query, std::size_t k) const;

 private:
  struct Node {
    std::size_t begin;
    std::size_t end;
    int axis;  // -1 for leaves
    double split;
    std::size_t left;
    std::size_t right;
  };

  std::size_t build(std::size_t begin, std::size_t end);
  void search(std::size_t node, const Point3& query, std::size_t k,
              std::vector<Neighbor>& heap) const;

  std::vector<Point3> points_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
};

}  // namespace gctr
