#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <vector>

#include "hartgeom/mesh.hpp"

namespace hartgeom {

/// Static 3D kd-tree with exact nearest-neighbor queries (median split).
/// Results equal brute force; the tree only accelerates.
class KdTree3 {
 public:
  explicit KdTree3(std::vector<Vec3> points) : points_(std::move(points)) {
    if (points_.empty()) throw EmptyCloud("kd-tree over empty point set");
    order_.resize(points_.size());
    for (std::uint32_t i = 0; i < order_.size(); ++i) order_[i] = i;
    nodes_.reserve(2 * points_.size());
    root_ = build(0, static_cast<std::uint32_t>(order_.size()));
  }

  std::size_t size() const { return points_.size(); }
  const Vec3& point(std::size_t i) const { return points_[i]; }

  struct Hit {
    std::uint32_t index = 0;
    double distance_sq = std::numeric_limits<double>::infinity();
  };

  Hit nearest(const Vec3& q) const {
    Hit best;
    search(root_, q, best);
    return best;
  }

 private:
  struct Node {
    double split = 0;
    std::int32_t left = -1, right = -1;
    std::uint32_t begin = 0, end = 0;  // leaf payload range in order_
    std::uint8_t axis = 0;
    bool leaf = false;
  };

  static constexpr std::uint32_t kLeafSize = 16;

  std::int32_t build(std::uint32_t begin, std::uint32_t end) {
    Node n;
    if (end - begin <= kLeafSize) {
      n.leaf = true;
      n.begin = begin;
      n.end = end;
      nodes_.push_back(n);
      return static_cast<std::int32_t>(nodes_.size() - 1);
    }
    Vec3 lo = points_[order_[begin]], hi = lo;
    for (std::uint32_t i = begin; i < end; ++i) {
      lo = lo.cwiseMin(points_[order_[i]]);
      hi = hi.cwiseMax(points_[order_[i]]);
    }
    Vec3 ext = hi - lo;
    int axis = 0;
    if (ext.y() > ext.x()) axis = 1;
    if (ext.z() > ext[axis]) axis = 2;
    std::uint32_t mid = (begin + end) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid,
                     order_.begin() + end,
                     [&](std::uint32_t a, std::uint32_t b) {
                       return points_[a][axis] < points_[b][axis];
                     });
    n.axis = static_cast<std::uint8_t>(axis);
    n.split = points_[order_[mid]][axis];
    std::int32_t self = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back(n);
    std::int32_t l = build(begin, mid);
    std::int32_t r = build(mid, end);
    nodes_[self].left = l;
    nodes_[self].right = r;
    return self;
  }

  void search(std::int32_t ni, const Vec3& q, Hit& best) const {
    const Node& n = nodes_[ni];
    if (n.leaf) {
      for (std::uint32_t i = n.begin; i < n.end; ++i) {
        double d = (points_[order_[i]] - q).squaredNorm();
        if (d < best.distance_sq) {
          best.distance_sq = d;
          best.index = order_[i];
        }
      }
      return;
    }
    double delta = q[n.axis] - n.split;
    std::int32_t near = delta < 0 ? n.left : n.right;
    std::int32_t far = delta < 0 ? n.right : n.left;
    search(near, q, best);
    if (delta * delta < best.distance_sq) search(far, q, best);
  }

  std::vector<Vec3> points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
  std::int32_t root_ = -1;
};

}  // namespace hartgeom
