#include "gctr/kdtree.h"

#include <algorithm>

#include "gctr/error.h"

namespace gctr {
namespace {

constexpr std::size_t kLeafSize = 8;

bool closer(const Neighbor& a, const Neighbor& b) {
  if (a.squared_distance != b.squared_distance) {
    return a.squared_distance < b.squared_distance;
  }
  return a.index < b.index;
}

}  // namespace

KdTree::KdTree(std::vector<Point3> points) : points_(std::move(points)) {
  order_.resize(points_.size());
  for (std::size_t k = 0; k < order_.size(); ++k) order_[k] = k;
  if (!points_.empty()) {
    nodes_.reserve(2 * points_.size() / kLeafSize + 1);
    build(0, points_.size());
  }
}

std::size_t KdTree::build(std::size_t begin, std::size_t end) {
  const std::size_t id = nodes_.size();
  nodes_.push_back({begin, end, -1, 0.0, 0, 0});
  if (end - begin <= kLeafSize) return id;

  Point3 lo = points_[order_[begin]];
  Point3 hi = lo;
  for (std::size_t k = begin; k < end; ++k) {
    lo = lo.cwiseMin(points_[order_[k]]);
    hi = hi.cwiseMax(points_[order_[k]]);
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);
  if (hi[axis] == lo[axis]) return id;  // all points coincide

  const std::size_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                   order_.begin() + static_cast<std::ptrdiff_t>(mid),
                   order_.begin() + static_cast<std::ptrdiff_t>(end),
                   [&](std::size_t a, std::size_t b) {
                     if (points_[a][axis] != points_[b][axis]) {
                       return points_[a][axis] < points_[b][axis];
                     }
                     return a < b;
                   });
  const double split = points_[order_[mid]][axis];
  const std::size_t left = build(begin, mid);
  const std::size_t right = build(mid, end);
  nodes_[id].axis = axis;
  nodes_[id].split = split;
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

void KdTree::search(std::size_t node_id, const Point3& query, std::size_t k,
                    std::vector<Neighbor>& heap) const {
  const Node& node = nodes_[node_id];
  if (node.axis < 0) {
    for (std::size_t m = node.begin; m < node.end; ++m) {
      const std::size_t idx = order_[m];
      const Neighbor candidate{idx, (points_[idx] - query).squaredNorm()};
      if (heap.size() < k) {
        heap.push_back(candidate);
        std::push_heap(heap.begin(), heap.end(), closer);
      } else if (closer(candidate, heap.front())) {
        std::pop_heap(heap.begin(), heap.end(), closer);
        heap.back() = candidate;
        std::push_heap(heap.begin(), heap.end(), closer);
      }
    }
    return;
  }
  const double delta = query[node.axis] - node.split;
  const std::size_t near = delta < 0.0 ? node.left : node.right;
  const std::size_t far = delta < 0.0 ? node.right : node.left;
  search(near, query, k, heap);
  // <= keeps equal-distance candidates reachable for index tie-breaking.
  if (heap.size() < k || delta * delta <= heap.front().squared_distance) {
    search(far, query, k, heap);
  }
}

Neighbor KdTree::nearest(const Point3& query) const {
  if (points_.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "nearest() on an empty kd-tree");
  }
  return knn(query, 1).front();
}

std::vector<Neighbor> KdTree::knn(const Point3& query, std::size_t k) const {
  std::vector<Neighbor> heap;
  if (points_.empty() || k == 0) return heap;
  k = std::min(k, points_.size());
  heap.reserve(k + 1);
  search(0, query, k, heap);
  std::sort_heap(heap.begin(), heap.end(), closer);
  return heap;
}

}  // namespace gctr
