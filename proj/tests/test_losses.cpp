#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "peelkit/errors.hpp"
#include "peelkit/fusion.hpp"
#include "peelkit/losses.hpp"
#include "peelkit/peel.hpp"

using namespace peelkit;

namespace {

PeelStack flat_stack(int w, int h, int layers, float value, bool with_rgb = false) {
  PeelStack s;
  s.width = w;
  s.height = h;
  s.layers = layers;
  s.has_rgb = with_rgb;
  s.camera = Camera::standard(Projection::Perspective, 0.3, w, h);
  s.allocate();
  std::fill(s.depth.begin(), s.depth.end(), value);
  if (with_rgb) std::fill(s.rgb.begin(), s.rgb.end(), 0.5f);
  return s;
}

PeelStack random_stack(int w, int h, int layers, uint64_t seed, bool with_rgb) {
  PeelStack s = flat_stack(w, h, layers, 0.0f, with_rgb);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> depth(8.0f, 14.0f);
  std::uniform_real_distribution<float> color(0.0f, 1.0f);
  for (float& v : s.depth) v = depth(rng);
  for (float& v : s.rgb) v = color(rng);
  return s;
}

MaskStack random_masks(int w, int h, int layers, uint64_t seed) {
  MaskStack m;
  m.width = w;
  m.height = h;
  m.layers = layers;
  m.allocate();
  std::mt19937_64 rng(seed);
  for (auto& f : m.fg) f = rng() % 4 != 0;
  for (int l = 0; l < layers; ++l)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        m.gamma[(size_t(l) * h + y) * w + x] = m.f(y, x) && rng() % 3 != 0;
  return m;
}

ResidualStack random_residual(int w, int h, int layers, uint64_t seed) {
  ResidualStack rd;
  rd.width = w;
  rd.height = h;
  rd.layers = layers;
  rd.allocate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> delta(-0.5f, 0.5f);
  for (float& v : rd.delta) v = delta(rng);
  return rd;
}

double naive_masked_l1(const std::vector<float>& pred, const std::vector<float>& gt,
                       const std::vector<uint8_t>& keep, int layers, size_t plane) {
  double total = 0.0;
  for (int l = 0; l < layers; ++l) {
    double sum = 0.0;
    size_t count = 0;
    for (size_t i = 0; i < plane; ++i) {
      if (!keep[size_t(l) * plane + i]) continue;
      sum += std::abs(double(pred[size_t(l) * plane + i]) - double(gt[size_t(l) * plane + i]));
      ++count;
    }
    if (count > 0) total += sum / double(count);
  }
  return total;
}

double naive_gradient_l1(const std::vector<float>& pred, const std::vector<float>& gt,
                         int layers, int w, int h) {
  double total = 0.0;
  const size_t plane = size_t(w) * h;
  auto grad = [&](const std::vector<float>& img, int l, int y, int x, double& gx, double& gy) {
    const size_t i = size_t(l) * plane + size_t(y) * w + x;
    gx = x + 1 < w ? double(img[i + 1]) - double(img[i]) : 0.0;
    gy = y + 1 < h ? double(img[i + w]) - double(img[i]) : 0.0;
  };
  for (int l = 0; l < layers; ++l) {
    double sum = 0.0;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double pgx, pgy, ggx, ggy;
        grad(pred, l, y, x, pgx, pgy);
        grad(gt, l, y, x, ggx, ggy);
        sum += std::abs(pgx - ggx) + std::abs(pgy - ggy);
      }
    total += sum / double(plane);
  }
  return total;
}

}  // namespace

TEST_CASE("every loss term is zero on identical inputs") {
  PeelStack gt = random_stack(8, 8, 4, 5, true);
  MaskStack masks = random_masks(8, 8, 4, 6);
  ResidualStack rd = random_residual(8, 8, 4, 7);
  CHECK(loss_fuse(gt, gt, masks) == 0.0);
  CHECK(loss_rd(rd, rd, masks) == 0.0);
  CHECK(loss_rgb(gt, gt) == 0.0);
  CHECK(loss_smooth(gt, gt) == 0.0);
  CHECK(loss_smooth(rd, rd) == 0.0);
  LossReport report = total_loss(gt, gt, rd, rd, masks, &gt, &gt);
  CHECK(report.fuse == 0.0);
  CHECK(report.rd == 0.0);
  CHECK(report.rgb == 0.0);
  CHECK(report.smooth_rd == 0.0);
  CHECK(report.smooth_fuse == 0.0);
  CHECK(report.total == 0.0);
}

TEST_CASE("a uniform depth offset on four layers costs four hundredths") {
  PeelStack gt = flat_stack(8, 8, 4, 10.0f);
  PeelStack pred = flat_stack(8, 8, 4, 10.01f);
  MaskStack masks;
  masks.width = 8;
  masks.height = 8;
  masks.layers = 4;
  masks.allocate();
  std::fill(masks.fg.begin(), masks.fg.end(), 1);
  std::fill(masks.gamma.begin(), masks.gamma.end(), 1);
  CHECK(std::abs(loss_fuse(pred, gt, masks) - 0.04) < 1e-6);
}

TEST_CASE("the fused-depth loss only counts foreground pixels") {
  PeelStack gt = flat_stack(4, 4, 1, 10.0f);
  PeelStack pred = gt;
  pred.d(0, 0, 0) = 12.0f;
  pred.d(0, 3, 3) = 11.0f;
  MaskStack masks;
  masks.width = 4;
  masks.height = 4;
  masks.layers = 1;
  masks.allocate();
  std::fill(masks.fg.begin(), masks.fg.end(), 1);
  masks.fg[15] = 0;  // hide the (3,3) error
  CHECK(loss_fuse(pred, gt, masks) == doctest::Approx(2.0 / 15.0).epsilon(1e-12));
  std::fill(masks.fg.begin(), masks.fg.end(), 0);
  CHECK(loss_fuse(pred, gt, masks) == 0.0);
}

TEST_CASE("the residual loss skips conflict pixels and empty support") {
  ResidualStack gt = random_residual(4, 4, 2, 11);
  ResidualStack pred = gt;
  MaskStack masks;
  masks.width = 4;
  masks.height = 4;
  masks.layers = 2;
  masks.allocate();
  std::fill(masks.fg.begin(), masks.fg.end(), 1);
  std::fill(masks.gamma.begin(), masks.gamma.end(), 1);

  pred.delta[0] += 0.32f;
  gt.conflict[0] = 1;
  CHECK(loss_rd(pred, gt, masks) == 0.0);

  gt.conflict[0] = 0;
  // Layer 1 carries the single error; layer 2 is clean.
  CHECK(loss_rd(pred, gt, masks) ==
        doctest::Approx(std::abs(double(pred.delta[0]) - double(gt.delta[0])) / 16.0)
            .epsilon(1e-12));

  std::fill(masks.gamma.begin(), masks.gamma.end(), 0);
  CHECK(loss_rd(pred, gt, masks) == 0.0);
}

TEST_CASE("random eight-by-eight stacks match the scalar-loop oracle") {
  const int w = 8, h = 8, layers = 4;
  const size_t plane = size_t(w) * h;
  PeelStack gt = random_stack(w, h, layers, 21, true);
  PeelStack pred = random_stack(w, h, layers, 22, true);
  MaskStack masks = random_masks(w, h, layers, 23);
  ResidualStack rd_gt = random_residual(w, h, layers, 24);
  ResidualStack rd_pred = random_residual(w, h, layers, 25);

  std::vector<uint8_t> fg_by_layer(plane * layers);
  for (int l = 0; l < layers; ++l)
    for (size_t i = 0; i < plane; ++i) fg_by_layer[l * plane + i] = masks.fg[i];
  CHECK(std::abs(loss_fuse(pred, gt, masks) -
                 naive_masked_l1(pred.depth, gt.depth, fg_by_layer, layers, plane)) < 1e-12);

  std::vector<uint8_t> rd_keep(plane * layers);
  for (size_t i = 0; i < rd_keep.size(); ++i)
    rd_keep[i] = masks.gamma[i] && !rd_gt.conflict[i];
  CHECK(std::abs(loss_rd(rd_pred, rd_gt, masks) -
                 naive_masked_l1(rd_pred.delta, rd_gt.delta, rd_keep, layers, plane)) < 1e-12);

  double rgb_naive = 0.0;
  for (int l = 1; l < layers; ++l) {
    double sum = 0.0;
    for (int ch = 0; ch < 3; ++ch)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          sum += std::abs(double(pred.c(l, ch, y, x)) - double(gt.c(l, ch, y, x)));
    rgb_naive += sum / double(3 * plane);
  }
  CHECK(std::abs(loss_rgb(pred, gt) - rgb_naive) < 1e-12);

  CHECK(std::abs(loss_smooth(pred, gt) -
                 naive_gradient_l1(pred.depth, gt.depth, layers, w, h)) < 1e-12);
  CHECK(std::abs(loss_smooth(rd_pred, rd_gt) -
                 naive_gradient_l1(rd_pred.delta, rd_gt.delta, layers, w, h)) < 1e-12);
}

TEST_CASE("a uniform color offset on one channel of three layers costs one tenth") {
  PeelStack gt = flat_stack(8, 8, 4, 10.0f, true);
  PeelStack pred = gt;
  for (int l = 1; l < 4; ++l)
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 8; ++x) pred.c(l, 1, y, x) += 0.1f;
  CHECK(std::abs(loss_rgb(pred, gt) - 0.1) < 1e-6);
  // Layer 1 is carried by the input image, so changing it costs nothing.
  PeelStack first_layer_only = gt;
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) first_layer_only.c(0, 0, y, x) = 0.9f;
  CHECK(loss_rgb(first_layer_only, gt) == 0.0);
}

TEST_CASE("the color loss requires rgb planes on both stacks") {
  PeelStack with = flat_stack(4, 4, 2, 1.0f, true);
  PeelStack without = flat_stack(4, 4, 2, 1.0f, false);
  CHECK_THROWS_AS(loss_rgb(with, without), Error);
  CHECK_THROWS_AS(loss_rgb(without, with), Error);
}

TEST_CASE("gradient smoothness ignores constant offsets") {
  PeelStack gt = random_stack(8, 8, 2, 31, false);
  PeelStack pred = gt;
  for (float& v : pred.depth) v += 3.25f;
  CHECK(loss_smooth(pred, gt) == 0.0);
}

TEST_CASE("a linear ramp scores its slope on every interior column") {
  const int w = 16, h = 16;
  PeelStack gt = flat_stack(w, h, 2, 10.0f);
  PeelStack pred = gt;
  const float slope = 0.25f;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) pred.d(0, y, x) += slope * float(x);
  const double expect = double(slope) * double(w - 1) / double(w);
  CHECK(loss_smooth(pred, gt) == doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("losses reject mismatched shapes") {
  PeelStack a = flat_stack(8, 8, 2, 1.0f);
  PeelStack b = flat_stack(4, 4, 2, 1.0f);
  PeelStack c = flat_stack(8, 8, 3, 1.0f);
  MaskStack masks;
  masks.width = 8;
  masks.height = 8;
  masks.layers = 2;
  masks.allocate();
  CHECK_THROWS_AS(loss_fuse(a, b, masks), ResolutionMismatch);
  CHECK_THROWS_AS(loss_fuse(a, c, masks), DimensionMismatch);
  CHECK_THROWS_AS(loss_smooth(a, b), ResolutionMismatch);
  PeelStack d = flat_stack(4, 4, 2, 1.0f);
  CHECK_THROWS_AS(loss_fuse(b, d, masks), ResolutionMismatch);
}

TEST_CASE("zeroed weights reduce the total to the fused term") {
  PeelStack gt = random_stack(8, 8, 3, 41, true);
  PeelStack pred = random_stack(8, 8, 3, 42, true);
  MaskStack masks = random_masks(8, 8, 3, 43);
  ResidualStack rd_gt = random_residual(8, 8, 3, 44);
  ResidualStack rd_pred = random_residual(8, 8, 3, 45);
  LossWeights zero;
  zero.rd = 0.0;
  zero.rgb = 0.0;
  zero.smooth = 0.0;
  LossReport report = total_loss(pred, gt, rd_pred, rd_gt, masks, &pred, &gt, zero);
  CHECK(report.total == report.fuse);
  CHECK(report.fuse == loss_fuse(pred, gt, masks));
}

TEST_CASE("the report total recomposes from its parts with default weights") {
  PeelStack gt = random_stack(8, 8, 4, 51, true);
  PeelStack pred = random_stack(8, 8, 4, 52, true);
  MaskStack masks = random_masks(8, 8, 4, 53);
  ResidualStack rd_gt = random_residual(8, 8, 4, 54);
  ResidualStack rd_pred = random_residual(8, 8, 4, 55);
  LossReport report = total_loss(pred, gt, rd_pred, rd_gt, masks, &pred, &gt);
  const double recomposed = report.fuse + 1.0 * report.rd + 0.1 * report.rgb +
                            0.001 * (report.smooth_rd + report.smooth_fuse);
  CHECK(report.total == doctest::Approx(recomposed).epsilon(1e-9));
  CHECK(report.total > 0.0);
  CHECK(report.fuse == loss_fuse(pred, gt, masks));
  CHECK(report.rd == loss_rd(rd_pred, rd_gt, masks));
  CHECK(report.rgb == loss_rgb(pred, gt));
  CHECK(report.smooth_rd == loss_smooth(rd_pred, rd_gt));
  CHECK(report.smooth_fuse == loss_smooth(pred, gt));
  LossReport no_rgb = total_loss(pred, gt, rd_pred, rd_gt, masks, nullptr, nullptr);
  CHECK(no_rgb.rgb == 0.0);
}
