#include "peelkit/fusion.hpp"

#include <algorithm>

#include "peelkit/errors.hpp"

namespace peelkit {

namespace {

void require_same_shape(int wa, int ha, int la, int wb, int hb, int lb, const char* what) {
  if (wa != wb || ha != hb)
    throw ResolutionMismatch(std::string(what) + ": " + std::to_string(wa) + "x" +
                             std::to_string(ha) + " vs " + std::to_string(wb) + "x" +
                             std::to_string(hb));
  if (la != lb)
    throw DimensionMismatch(std::string(what) + ": " + std::to_string(la) + " vs " +
                            std::to_string(lb) + " layers");
}

}  // namespace

MaskStack compute_mask(const PeelStack& prior, const std::vector<uint8_t>& fg) {
  if (fg.size() != prior.plane())
    throw ResolutionMismatch("foreground mask has " + std::to_string(fg.size()) +
                             " pixels, prior needs " + std::to_string(prior.plane()));
  MaskStack m;
  m.width = prior.width;
  m.height = prior.height;
  m.layers = prior.layers;
  m.allocate();
  const size_t plane = m.plane();
  for (size_t i = 0; i < plane; ++i) m.fg[i] = fg[i] ? 1 : 0;
  for (int l = 0; l < m.layers; ++l) {
    const float* d = prior.depth.data() + static_cast<size_t>(l) * plane;
    uint8_t* g = m.gamma.data() + static_cast<size_t>(l) * plane;
    for (size_t i = 0; i < plane; ++i) g[i] = (d[i] > 0.0f && fg[i]) ? 1 : 0;
  }
  return m;
}

std::pair<ResidualStack, AuxiliaryStack> decompose(const PeelStack& gt, const PeelStack& prior,
                                                   const MaskStack& masks) {
  require_same_shape(gt.width, gt.height, gt.layers, prior.width, prior.height, prior.layers,
                     "target vs prior");
  require_same_shape(gt.width, gt.height, gt.layers, masks.width, masks.height, masks.layers,
                     "target vs masks");
  ResidualStack rd;
  rd.width = gt.width;
  rd.height = gt.height;
  rd.layers = gt.layers;
  rd.allocate();
  AuxiliaryStack aux;
  aux.width = gt.width;
  aux.height = gt.height;
  aux.layers = gt.layers;
  aux.allocate();

  const size_t plane = rd.plane();
  for (int l = 0; l < rd.layers; ++l) {
    const size_t off = static_cast<size_t>(l) * plane;
    const float* gd = gt.depth.data() + off;
    const float* pd = prior.depth.data() + off;
    const uint8_t* g = masks.gamma.data() + off;
    float* delta = rd.delta.data() + off;
    uint8_t* conflict = rd.conflict.data() + off;
    float* a = aux.a.data() + off;
    for (size_t i = 0; i < plane; ++i) {
      if (g[i]) {
        if (gd[i] == 0.0f)
          conflict[i] = 1;  // prior layer with no target surface; delta stays 0
        else
          delta[i] = gd[i] - pd[i];
      } else if (masks.fg[i]) {
        a[i] = gd[i];
      }
    }
  }
  return {std::move(rd), std::move(aux)};
}

PeelStack fuse(const PeelStack& prior, const ResidualStack& rd, const AuxiliaryStack& aux,
               const MaskStack& masks) {
  require_same_shape(prior.width, prior.height, prior.layers, rd.width, rd.height, rd.layers,
                     "prior vs residual");
  require_same_shape(prior.width, prior.height, prior.layers, aux.width, aux.height, aux.layers,
                     "prior vs auxiliary");
  require_same_shape(prior.width, prior.height, prior.layers, masks.width, masks.height,
                     masks.layers, "prior vs masks");
  PeelStack out;
  out.width = prior.width;
  out.height = prior.height;
  out.layers = prior.layers;
  out.has_rgb = false;
  out.camera = prior.camera;
  out.allocate();

  const size_t plane = out.plane();
  for (int l = 0; l < out.layers; ++l) {
    const size_t off = static_cast<size_t>(l) * plane;
    const float* pd = prior.depth.data() + off;
    const float* delta = rd.delta.data() + off;
    const float* a = aux.a.data() + off;
    const uint8_t* g = masks.gamma.data() + off;
    float* dst = out.depth.data() + off;
    for (size_t i = 0; i < plane; ++i) {
      if (!masks.fg[i]) continue;  // zero outside the foreground
      const float v = g[i] ? pd[i] + delta[i] : a[i];
      dst[i] = std::max(0.0f, v);
    }
  }
  return out;
}

ResidualStack clamp_residual(const ResidualStack& rd, double lo, double hi, double range) {
  if (!(lo < hi)) throw InvertedRange("clamp range needs lo < hi, got [" + std::to_string(lo) +
                                      ", " + std::to_string(hi) + "]");
  if (!(range > 0.0)) throw NonPositiveScale("normalization range must be positive");
  ResidualStack out = rd;
  const float flo = static_cast<float>(lo), fhi = static_cast<float>(hi);
  const float r = static_cast<float>(range);
  for (float& v : out.delta) v = std::clamp(v / r, flo, fhi) * r;
  return out;
}

}  // namespace peelkit
