#include "peelkit/kdtree.hpp"

#include <algorithm>
#include <limits>

#include "peelkit/errors.hpp"

namespace peelkit {

namespace {

// "Better" orders candidates by (dist2, original index); the heap keeps the
// worst candidate at the front.
inline bool better(const KdTree::Neighbor& a, const KdTree::Neighbor& b) {
  return a.dist2 != b.dist2 ? a.dist2 < b.dist2 : a.index < b.index;
}

}  // namespace

KdTree KdTree::build(const std::vector<Vec3>& points) {
  if (points.empty()) throw EmptySet("kd-tree needs at least one point");
  KdTree t;
  t.slots_.resize(points.size());
  for (uint32_t i = 0; i < points.size(); ++i) t.slots_[i] = {points[i], i};
  t.nodes_.reserve(points.size() / (kLeafSize / 2) + 2);
  t.build_range(0, static_cast<uint32_t>(points.size()));
  return t;
}

uint32_t KdTree::build_range(uint32_t begin, uint32_t end) {
  const uint32_t id = static_cast<uint32_t>(nodes_.size());
  nodes_.push_back({});
  const uint32_t n = end - begin;
  if (n <= kLeafSize) {
    nodes_[id].begin = begin;
    nodes_[id].end = end;
    return id;
  }
  Aabb box;
  for (uint32_t i = begin; i < end; ++i) box.expand(slots_[i].p);
  const Vec3 ext = box.extent();
  int axis = 0;
  if (ext.y > ext[axis]) axis = 1;
  if (ext.z > ext[axis]) axis = 2;

  const uint32_t mid = begin + n / 2;
  std::nth_element(slots_.begin() + begin, slots_.begin() + mid, slots_.begin() + end,
                   [axis](const Slot& a, const Slot& b) {
                     return a.p[axis] != b.p[axis] ? a.p[axis] < b.p[axis] : a.index < b.index;
                   });
  const double split = slots_[mid].p[axis];
  const uint32_t left = build_range(begin, mid);
  const uint32_t right = build_range(mid, end);
  nodes_[id].split = split;
  nodes_[id].axis = static_cast<uint8_t>(axis);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

void KdTree::nearest_rec(uint32_t node, const Vec3& q, Neighbor& best) const {
  const Node& nd = nodes_[node];
  if (nd.is_leaf()) {
    for (uint32_t i = nd.begin; i < nd.end; ++i) {
      Neighbor cand{norm2(q - slots_[i].p), slots_[i].index};
      if (better(cand, best)) best = cand;
    }
    return;
  }
  const double delta = q[nd.axis] - nd.split;
  const uint32_t near = delta < 0.0 ? nd.left : nd.right;
  const uint32_t far = delta < 0.0 ? nd.right : nd.left;
  nearest_rec(near, q, best);
  if (delta * delta <= best.dist2) nearest_rec(far, q, best);
}

KdTree::Neighbor KdTree::nearest(const Vec3& query) const {
  Neighbor best{std::numeric_limits<double>::max(), 0xffffffffu};
  nearest_rec(0, query, best);
  return best;
}

void KdTree::knn_rec(uint32_t node, const Vec3& q, size_t k, std::vector<Neighbor>& heap) const {
  const Node& nd = nodes_[node];
  if (nd.is_leaf()) {
    for (uint32_t i = nd.begin; i < nd.end; ++i) {
      Neighbor cand{norm2(q - slots_[i].p), slots_[i].index};
      if (heap.size() < k) {
        heap.push_back(cand);
        std::push_heap(heap.begin(), heap.end(), better);
      } else if (better(cand, heap.front())) {
        std::pop_heap(heap.begin(), heap.end(), better);
        heap.back() = cand;
        std::push_heap(heap.begin(), heap.end(), better);
      }
    }
    return;
  }
  const double delta = q[nd.axis] - nd.split;
  const uint32_t near = delta < 0.0 ? nd.left : nd.right;
  const uint32_t far = delta < 0.0 ? nd.right : nd.left;
  knn_rec(near, q, k, heap);
  if (heap.size() < k || delta * delta <= heap.front().dist2) knn_rec(far, q, k, heap);
}

void KdTree::knn(const Vec3& query, int k, std::vector<Neighbor>& out) const {
  out.clear();
  if (k <= 0) return;
  knn_rec(0, query, static_cast<size_t>(k), out);
  std::sort(out.begin(), out.end(), better);
}

}  // namespace peelkit
