#pragma once

#include "peelkit/peel.hpp"

namespace peelkit {

// Term weights for the training objective. The fused-depth term is always
// weighted 1; the rest default to the reference configuration.
struct LossWeights {
  double rd = 1.0;
  double rgb = 0.1;
  double smooth = 0.001;
};

struct LossReport {
  double fuse = 0.0;
  double rd = 0.0;
  double rgb = 0.0;
  double smooth_rd = 0.0;
  double smooth_fuse = 0.0;
  double total = 0.0;
};

// Every term reduces the same way: a mean over its per-layer support, then a
// sum over layers. Layers with empty support contribute zero.

// L1 fused-depth error over the foreground mask.
double loss_fuse(const PeelStack& pred, const PeelStack& gt, const MaskStack& masks);

// L1 residual error over gamma minus the ground-truth conflict pixels.
double loss_rd(const ResidualStack& pred, const ResidualStack& gt, const MaskStack& masks);

// L1 color error on peel layers 2..L, averaged over pixels and channels.
// Both stacks must carry rgb. The first layer is excluded.
double loss_rgb(const PeelStack& pred, const PeelStack& gt);

// L1 difference of forward-difference gradients, averaged over all pixels.
// The gradient is defined as zero on the last column (x) and last row (y).
double loss_smooth(const PeelStack& pred, const PeelStack& gt);
double loss_smooth(const ResidualStack& pred, const ResidualStack& gt);

// Weighted combination: fuse + w.rd * rd + w.rgb * rgb + w.smooth *
// (smooth_rd + smooth_fuse). The rgb term is zero when either rgb stack
// pointer is null.
LossReport total_loss(const PeelStack& pred_fused, const PeelStack& gt_fused,
                      const ResidualStack& pred_rd, const ResidualStack& gt_rd,
                      const MaskStack& masks, const PeelStack* pred_rgb,
                      const PeelStack* gt_rgb, const LossWeights& weights = {});

}  // namespace peelkit
