#pragma once

#include <cstdint>
#include <vector>

#include "peelkit/math.hpp"

namespace peelkit {

// Balanced 3d kd-tree over a point set. Points are copied and reordered at
// build time; query results carry the original indices. Ties in distance are
// broken toward the smaller original index, so results do not depend on
// traversal details.
class KdTree {
 public:
  struct Neighbor {
    double dist2 = 0.0;
    uint32_t index = 0;
  };

  static KdTree build(const std::vector<Vec3>& points);  // throws EmptySet

  Neighbor nearest(const Vec3& query) const;

  // k nearest points, sorted by (dist2, index) ascending. Fewer than k come
  // back when the set is smaller. k <= 0 clears out.
  void knn(const Vec3& query, int k, std::vector<Neighbor>& out) const;

  size_t size() const { return slots_.size(); }

 private:
  static constexpr uint32_t kLeaf = 0xffffffffu;
  static constexpr uint32_t kLeafSize = 16;

  struct Slot {
    Vec3 p;
    uint32_t index = 0;
  };
  struct Node {
    double split = 0.0;
    uint32_t left = kLeaf, right = kLeaf;
    uint32_t begin = 0, end = 0;
    uint8_t axis = 0;
    bool is_leaf() const { return left == kLeaf; }
  };

  uint32_t build_range(uint32_t begin, uint32_t end);
  void nearest_rec(uint32_t node, const Vec3& q, Neighbor& best) const;
  void knn_rec(uint32_t node, const Vec3& q, size_t k, std::vector<Neighbor>& heap) const;

  std::vector<Node> nodes_;
  std::vector<Slot> slots_;
};

}  // namespace peelkit
