#pragma once

#include <utility>
#include <vector>

#include "peelkit/peel.hpp"

namespace peelkit {

// Per-layer mask: gamma_i = (prior layer-i depth > 0) AND foreground. fg is a
// row-major 0/1 map at the prior's resolution.
MaskStack compute_mask(const PeelStack& prior, const std::vector<uint8_t>& fg);

// Ground-truth decomposition against the prior. On gamma: delta = gt - prior;
// where the prior has a layer the target lacks, delta is 0 and the pixel is
// flagged in the conflict plane. Off gamma but inside the foreground: aux =
// gt. Everything else is zero. All arithmetic in float32.
std::pair<ResidualStack, AuxiliaryStack> decompose(const PeelStack& gt, const PeelStack& prior,
                                                   const MaskStack& masks);

// Layer-wise fusion: gamma ? (prior + delta) : aux, clamped to >= 0 and
// zeroed outside the foreground. Output carries the prior's camera and has
// no rgb planes. Exactly one branch applies per pixel; the branches never
// blend.
PeelStack fuse(const PeelStack& prior, const ResidualStack& rd, const AuxiliaryStack& aux,
               const MaskStack& masks);

// Clamps delta / range to [lo, hi], then rescales by range. range is the
// depth-normalization span (t_far - t_near) of the stack the residual
// applies to. Conflict flags pass through.
ResidualStack clamp_residual(const ResidualStack& rd, double lo, double hi, double range);

}  // namespace peelkit
