#include "peelkit/bvh.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "peelkit/errors.hpp"

namespace peelkit {

const Aabb Bvh::empty_box_{};

std::optional<Hit> ray_triangle(const Ray& ray, const Vec3& a, const Vec3& b, const Vec3& c,
                                uint32_t triangle_id) {
  // Shear-based watertight test. Pick the dominant direction axis as kz.
  const Vec3& d = ray.direction;
  int kz = 0;
  double ad = std::abs(d.x);
  if (std::abs(d.y) > ad) { kz = 1; ad = std::abs(d.y); }
  if (std::abs(d.z) > ad) kz = 2;
  int kx = (kz + 1) % 3;
  int ky = (kx + 1) % 3;
  if (d[kz] < 0.0) std::swap(kx, ky);

  const double sx = d[kx] / d[kz];
  const double sy = d[ky] / d[kz];
  const double sz = 1.0 / d[kz];

  Vec3 ta = a - ray.origin, tb = b - ray.origin, tc = c - ray.origin;
  const double ax = ta[kx] - sx * ta[kz], ay = ta[ky] - sy * ta[kz];
  const double bx = tb[kx] - sx * tb[kz], by = tb[ky] - sy * tb[kz];
  const double cx = tc[kx] - sx * tc[kz], cy = tc[ky] - sy * tc[kz];

  const double u = cx * by - cy * bx;
  const double v = ax * cy - ay * cx;
  const double w = bx * ay - by * ax;

  const bool pos = u >= 0.0 && v >= 0.0 && w >= 0.0;
  const bool neg = u <= 0.0 && v <= 0.0 && w <= 0.0;
  if (!pos && !neg) return std::nullopt;

  const double det = u + v + w;
  if (det == 0.0) return std::nullopt;

  const double az = sz * ta[kz], bz = sz * tb[kz], cz = sz * tc[kz];
  const double t = (u * az + v * bz + w * cz) / det;
  if (!(t > ray.t_min) || !std::isfinite(t)) return std::nullopt;

  Hit h;
  h.t = t;
  h.triangle = triangle_id;
  h.b0 = u / det;
  h.b1 = v / det;
  h.b2 = w / det;
  return h;
}

void finalize_hits(std::vector<Hit>& hits, double merge_eps) {
  std::sort(hits.begin(), hits.end(), [](const Hit& l, const Hit& r) {
    return l.t != r.t ? l.t < r.t : l.triangle < r.triangle;
  });
  size_t out = 0;
  for (size_t i = 0; i < hits.size(); ++i) {
    if (out == 0 || hits[i].t - hits[out - 1].t >= merge_eps) hits[out++] = hits[i];
  }
  hits.resize(out);
}

namespace {

struct BuildPrim {
  Aabb box;
  Vec3 centroid;
  uint32_t tri = 0;
};

bool ray_box(const Ray& ray, const Vec3& inv_dir, const Aabb& box, double t_min) {
  double t0 = t_min, t1 = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i) {
    double near = (box.lo[i] - ray.origin[i]) * inv_dir[i];
    double far = (box.hi[i] - ray.origin[i]) * inv_dir[i];
    if (near > far) std::swap(near, far);
    // inv_dir can be +-inf; NaN from 0*inf means the axis is degenerate, skip it
    if (std::isnan(near) || std::isnan(far)) continue;
    t0 = std::max(t0, near);
    t1 = std::min(t1, far);
    if (t0 > t1) return false;
  }
  return true;
}

}  // namespace

Bvh Bvh::build(const TriangleMesh& mesh, double area_eps) {
  std::vector<BuildPrim> prims;
  prims.reserve(mesh.triangles.size());
  for (uint32_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    if (tri[0] >= mesh.vertices.size() || tri[1] >= mesh.vertices.size() ||
        tri[2] >= mesh.vertices.size())
      continue;
    if (mesh.triangle_area(t) <= area_eps) continue;
    BuildPrim p;
    p.box.expand(mesh.vertices[tri[0]]);
    p.box.expand(mesh.vertices[tri[1]]);
    p.box.expand(mesh.vertices[tri[2]]);
    p.centroid = p.box.center();
    p.tri = t;
    prims.push_back(p);
  }
  if (prims.empty()) throw EmptyMesh("no triangles survive degeneracy filtering");

  Bvh bvh;
  bvh.nodes_.reserve(prims.size() * 2);

  struct Range {
    uint32_t node;
    uint32_t begin, end;
    uint32_t depth;
  };
  // Past this depth splits become medians, which bounds tree depth by
  // kDepthSwitch + log2(n) and keeps the fixed traversal stacks safe.
  constexpr uint32_t kDepthSwitch = 32;
  std::vector<Range> stack;
  bvh.nodes_.push_back({});
  stack.push_back({0, 0, static_cast<uint32_t>(prims.size()), 0});

  while (!stack.empty()) {
    Range r = stack.back();
    stack.pop_back();
    Aabb box, cbox;
    for (uint32_t i = r.begin; i < r.end; ++i) {
      box.expand(prims[i].box);
      cbox.expand(prims[i].centroid);
    }
    BvhNode& node = bvh.nodes_[r.node];
    node.box = box;
    const uint32_t n = r.end - r.begin;

    auto make_leaf = [&] {
      node.a = static_cast<uint32_t>(bvh.tri_order_.size());
      node.count = n;
      for (uint32_t i = r.begin; i < r.end; ++i) bvh.tri_order_.push_back(prims[i].tri);
    };
    if (n <= kMaxLeafSize) {
      // Binned SAH: below the leaf limit, split only when it pays off.
      if (n <= 2) {
        make_leaf();
        continue;
      }
    }

    int best_axis = -1, best_bin = -1;
    double best_cost = std::numeric_limits<double>::max();
    const Vec3 cext = cbox.extent();
    for (int axis = 0; axis < 3 && r.depth < kDepthSwitch; ++axis) {
      if (cext[axis] <= 0.0) continue;
      const double k = kBins / cext[axis];
      std::array<Aabb, kBins> bin_box;
      std::array<uint32_t, kBins> bin_cnt{};
      for (uint32_t i = r.begin; i < r.end; ++i) {
        int b = std::min(kBins - 1,
                         static_cast<int>((prims[i].centroid[axis] - cbox.lo[axis]) * k));
        bin_box[b].expand(prims[i].box);
        bin_cnt[b]++;
      }
      std::array<double, kBins - 1> right_area;
      Aabb acc;
      uint32_t acc_cnt = 0;
      std::array<uint32_t, kBins - 1> right_cnt;
      for (int b = kBins - 1; b >= 1; --b) {
        acc.expand(bin_box[b]);
        acc_cnt += bin_cnt[b];
        right_area[b - 1] = acc.surface_area();
        right_cnt[b - 1] = acc_cnt;
      }
      acc = Aabb{};
      acc_cnt = 0;
      for (int b = 0; b < kBins - 1; ++b) {
        acc.expand(bin_box[b]);
        acc_cnt += bin_cnt[b];
        if (acc_cnt == 0 || right_cnt[b] == 0) continue;
        double cost = acc.surface_area() * acc_cnt + right_area[b] * right_cnt[b];
        if (cost < best_cost) {
          best_cost = cost;
          best_axis = axis;
          best_bin = b;
        }
      }
    }

    uint32_t mid = r.begin;
    if (best_axis >= 0) {
      // Leaf if splitting costs more than testing every triangle here.
      double leaf_cost = static_cast<double>(n) * box.surface_area();
      if (n <= kMaxLeafSize && best_cost >= leaf_cost) {
        make_leaf();
        continue;
      }
      const double k = kBins / cext[best_axis];
      auto* first = prims.data() + r.begin;
      auto* last = prims.data() + r.end;
      auto* pmid = std::partition(first, last, [&](const BuildPrim& p) {
        int b = std::min(kBins - 1,
                         static_cast<int>((p.centroid[best_axis] - cbox.lo[best_axis]) * k));
        return b <= best_bin;
      });
      mid = static_cast<uint32_t>(pmid - prims.data());
    }
    if (mid == r.begin || mid == r.end) {
      if (n <= kMaxLeafSize) {
        make_leaf();
        continue;
      }
      // Identical centroids or depth cutoff: median split keeps depth bounded.
      int axis = 0;
      if (cext.y > cext[axis]) axis = 1;
      if (cext.z > cext[axis]) axis = 2;
      mid = r.begin + n / 2;
      std::nth_element(prims.begin() + r.begin, prims.begin() + mid, prims.begin() + r.end,
                       [axis](const BuildPrim& a, const BuildPrim& b) {
                         return a.centroid[axis] < b.centroid[axis];
                       });
    }

    const uint32_t left = static_cast<uint32_t>(bvh.nodes_.size());
    bvh.nodes_.push_back({});
    bvh.nodes_.push_back({});
    bvh.nodes_[r.node].a = left;
    bvh.nodes_[r.node].b = left + 1;
    bvh.nodes_[r.node].count = 0;
    stack.push_back({left, r.begin, mid, r.depth + 1});
    stack.push_back({left + 1, mid, r.end, r.depth + 1});
  }
  return bvh;
}

std::vector<Hit> Bvh::intersect_all(const TriangleMesh& mesh, const Ray& ray) const {
  std::vector<Hit> hits;
  if (nodes_.empty()) return hits;
  const Vec3 inv_dir{1.0 / ray.direction.x, 1.0 / ray.direction.y, 1.0 / ray.direction.z};
  uint32_t stack[96];
  int sp = 0;
  stack[sp++] = 0;
  while (sp > 0) {
    const BvhNode& node = nodes_[stack[--sp]];
    if (!ray_box(ray, inv_dir, node.box, ray.t_min)) continue;
    if (node.is_leaf()) {
      for (uint32_t i = 0; i < node.count; ++i) {
        uint32_t tri = tri_order_[node.a + i];
        const auto& idx = mesh.triangles[tri];
        auto h = ray_triangle(ray, mesh.vertices[idx[0]], mesh.vertices[idx[1]],
                              mesh.vertices[idx[2]], tri);
        if (h) hits.push_back(*h);
      }
    } else {
      stack[sp++] = node.a;
      stack[sp++] = node.b;
    }
  }
  finalize_hits(hits, merge_epsilon());
  return hits;
}

double point_triangle_dist2(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c,
                            Vec3* closest) {
  // Ericson, "Real-Time Collision Detection", 5.1.5.
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = dot(ab, ap), d2 = dot(ac, ap);
  Vec3 q;
  if (d1 <= 0.0 && d2 <= 0.0) {
    q = a;
  } else {
    const Vec3 bp = p - b;
    const double d3 = dot(ab, bp), d4 = dot(ac, bp);
    if (d3 >= 0.0 && d4 <= d3) {
      q = b;
    } else {
      const Vec3 cp = p - c;
      const double d5 = dot(ab, cp), d6 = dot(ac, cp);
      if (d6 >= 0.0 && d5 <= d6) {
        q = c;
      } else {
        const double vc = d1 * d4 - d3 * d2;
        if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
          q = a + ab * (d1 / (d1 - d3));
        } else {
          const double vb = d5 * d2 - d1 * d6;
          if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
            q = a + ac * (d2 / (d2 - d6));
          } else {
            const double va = d3 * d6 - d5 * d4;
            if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
              q = b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
            } else {
              const double denom = va + vb + vc;
              const double v = vb / denom, w = vc / denom;
              q = a + ab * v + ac * w;
            }
          }
        }
      }
    }
  }
  if (closest) *closest = q;
  return norm2(p - q);
}

Bvh::SurfacePoint Bvh::closest_point(const TriangleMesh& mesh, const Vec3& query) const {
  SurfacePoint best;
  best.dist2 = std::numeric_limits<double>::max();
  if (nodes_.empty()) return best;
  struct Entry {
    uint32_t node;
    double d2;
  };
  Entry stack[96];
  int sp = 0;
  stack[sp++] = {0, nodes_[0].box.dist2(query)};
  while (sp > 0) {
    Entry e = stack[--sp];
    if (e.d2 >= best.dist2) continue;
    const BvhNode& node = nodes_[e.node];
    if (node.is_leaf()) {
      for (uint32_t i = 0; i < node.count; ++i) {
        uint32_t tri = tri_order_[node.a + i];
        const auto& idx = mesh.triangles[tri];
        Vec3 q;
        double d2 = point_triangle_dist2(query, mesh.vertices[idx[0]], mesh.vertices[idx[1]],
                                         mesh.vertices[idx[2]], &q);
        if (d2 < best.dist2) {
          best.dist2 = d2;
          best.point = q;
          best.triangle = tri;
        }
      }
    } else {
      Entry l{node.a, nodes_[node.a].box.dist2(query)};
      Entry r{node.b, nodes_[node.b].box.dist2(query)};
      if (l.d2 > r.d2) std::swap(l, r);  // nearer child popped first
      if (r.d2 < best.dist2) stack[sp++] = r;
      if (l.d2 < best.dist2) stack[sp++] = l;
    }
  }
  return best;
}

}  // namespace peelkit
