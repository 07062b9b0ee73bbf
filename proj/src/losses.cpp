#include "peelkit/losses.hpp"

#include <cmath>
#include <cstdlib>

#include "peelkit/errors.hpp"

namespace peelkit {

namespace {

void require_planes(int wa, int ha, int la, int wb, int hb, int lb) {
  if (wa != wb || ha != hb) throw ResolutionMismatch("loss operands differ in resolution");
  if (la != lb) throw DimensionMismatch("loss operands differ in layer count");
}

// Mean of |a - b| over the masked pixels of one plane; 0 when the mask is
// empty.
double masked_l1(const float* a, const float* b, const uint8_t* mask, size_t n) {
  double sum = 0.0;
  size_t count = 0;
  for (size_t i = 0; i < n; ++i) {
    if (mask && !mask[i]) continue;
    sum += std::abs(static_cast<double>(a[i]) - b[i]);
    ++count;
  }
  return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

// Gradient-difference term for one plane pair. Forward differences, with the
// last column and row carrying zero gradient.
double smooth_l1(const float* p, const float* g, int w, int h) {
  double sum = 0.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const size_t i = static_cast<size_t>(y) * w + x;
      double gx = 0.0, gy = 0.0;
      if (x + 1 < w)
        gx = (static_cast<double>(p[i + 1]) - p[i]) - (static_cast<double>(g[i + 1]) - g[i]);
      if (y + 1 < h)
        gy = (static_cast<double>(p[i + w]) - p[i]) - (static_cast<double>(g[i + w]) - g[i]);
      sum += std::abs(gx) + std::abs(gy);
    }
  }
  return sum / (static_cast<double>(w) * h);
}

}  // namespace

double loss_fuse(const PeelStack& pred, const PeelStack& gt, const MaskStack& masks) {
  require_planes(pred.width, pred.height, pred.layers, gt.width, gt.height, gt.layers);
  require_planes(pred.width, pred.height, pred.layers, masks.width, masks.height, masks.layers);
  const size_t n = pred.plane();
  double total = 0.0;
  for (int l = 0; l < pred.layers; ++l)
    total += masked_l1(&pred.depth[l * n], &gt.depth[l * n], masks.fg.data(), n);
  return total;
}

double loss_rd(const ResidualStack& pred, const ResidualStack& gt, const MaskStack& masks) {
  require_planes(pred.width, pred.height, pred.layers, gt.width, gt.height, gt.layers);
  require_planes(pred.width, pred.height, pred.layers, masks.width, masks.height, masks.layers);
  const size_t n = pred.plane();
  double total = 0.0;
  for (int l = 0; l < pred.layers; ++l) {
    const float* p = &pred.delta[l * n];
    const float* g = &gt.delta[l * n];
    const uint8_t* gam = &masks.gamma[l * n];
    const uint8_t* conflict = &gt.conflict[l * n];
    double sum = 0.0;
    size_t count = 0;
    for (size_t i = 0; i < n; ++i) {
      if (!gam[i] || conflict[i]) continue;
      sum += std::abs(static_cast<double>(p[i]) - g[i]);
      ++count;
    }
    total += count == 0 ? 0.0 : sum / static_cast<double>(count);
  }
  return total;
}

double loss_rgb(const PeelStack& pred, const PeelStack& gt) {
  require_planes(pred.width, pred.height, pred.layers, gt.width, gt.height, gt.layers);
  if (!pred.has_rgb || !gt.has_rgb) throw Error("color loss needs rgb on both stacks");
  const size_t n = pred.plane();
  double total = 0.0;
  for (int l = 1; l < pred.layers; ++l) {
    double sum = 0.0;
    for (int ch = 0; ch < 3; ++ch) {
      const size_t off = (static_cast<size_t>(l) * 3 + ch) * n;
      for (size_t i = 0; i < n; ++i)
        sum += std::abs(static_cast<double>(pred.rgb[off + i]) - gt.rgb[off + i]);
    }
    total += sum / (3.0 * static_cast<double>(n));
  }
  return total;
}

double loss_smooth(const PeelStack& pred, const PeelStack& gt) {
  require_planes(pred.width, pred.height, pred.layers, gt.width, gt.height, gt.layers);
  const size_t n = pred.plane();
  double total = 0.0;
  for (int l = 0; l < pred.layers; ++l)
    total += smooth_l1(&pred.depth[l * n], &gt.depth[l * n], pred.width, pred.height);
  return total;
}

double loss_smooth(const ResidualStack& pred, const ResidualStack& gt) {
  require_planes(pred.width, pred.height, pred.layers, gt.width, gt.height, gt.layers);
  const size_t n = pred.plane();
  double total = 0.0;
  for (int l = 0; l < pred.layers; ++l)
    total += smooth_l1(&pred.delta[l * n], &gt.delta[l * n], pred.width, pred.height);
  return total;
}

LossReport total_loss(const PeelStack& pred_fused, const PeelStack& gt_fused,
                      const ResidualStack& pred_rd, const ResidualStack& gt_rd,
                      const MaskStack& masks, const PeelStack* pred_rgb,
                      const PeelStack* gt_rgb, const LossWeights& weights) {
  LossReport r;
  r.fuse = loss_fuse(pred_fused, gt_fused, masks);
  r.rd = loss_rd(pred_rd, gt_rd, masks);
  if (pred_rgb && gt_rgb) r.rgb = loss_rgb(*pred_rgb, *gt_rgb);
  r.smooth_rd = loss_smooth(pred_rd, gt_rd);
  r.smooth_fuse = loss_smooth(pred_fused, gt_fused);
  r.total = r.fuse + weights.rd * r.rd + weights.rgb * r.rgb +
            weights.smooth * (r.smooth_rd + r.smooth_fuse);
  return r;
}

}  // namespace peelkit
