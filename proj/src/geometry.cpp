#include "ramvs/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ramvs {

DepthRange global_range(const Camera& cam, const StageConfig& first_stage) {
  const double interval = first_stage.interval_multiplier * cam.depth_interval;
  return {cam.depth_min, cam.depth_min + (first_stage.hypothesis_count - 1) * interval};
}

HypothesisSet HypothesisSet::global(std::vector<double> planes, int height, int width) {
  if (planes.size() < 2) throw Error(ErrorCategory::domain, "need at least two depth hypotheses");
  for (std::size_t i = 0; i < planes.size(); ++i) {
    if (!(planes[i] > 0.0) || (i > 0 && !(planes[i] > planes[i - 1]))) {
      throw Error(ErrorCategory::domain, "depth hypotheses must be positive and strictly increasing");
    }
  }
  HypothesisSet h;
  h.count_ = static_cast<int>(planes.size());
  h.height_ = height;
  h.width_ = width;
  h.planes_ = std::move(planes);
  return h;
}

HypothesisSet HypothesisSet::per_pixel(Volume<double> depths) {
  if (depths.depth() < 2) throw Error(ErrorCategory::domain, "need at least two depth hypotheses");
  HypothesisSet h;
  h.count_ = depths.depth();
  h.height_ = depths.height();
  h.width_ = depths.width();
  h.per_pixel_ = std::move(depths);
  return h;
}

DepthMap upsample_depth(const DepthMap& coarse, int height, int width) {
  const int ch = coarse.height();
  const int cw = coarse.width();
  const double ry = static_cast<double>(ch) / height;
  const double rx = static_cast<double>(cw) / width;
  DepthMap out(height, width, std::numeric_limits<double>::quiet_NaN());
  for (int v = 0; v < height; ++v) {
    const double y = std::clamp((v + 0.5) * ry - 0.5, 0.0, double(ch - 1));
    const int y0 = std::min(static_cast<int>(y), ch - 1);
    const int y1 = std::min(y0 + 1, ch - 1);
    const double fy = y - y0;
    for (int u = 0; u < width; ++u) {
      const double x = std::clamp((u + 0.5) * rx - 0.5, 0.0, double(cw - 1));
      const int x0 = std::min(static_cast<int>(x), cw - 1);
      const int x1 = std::min(x0 + 1, cw - 1);
      const double fx = x - x0;
      double acc = 0.0;
      bool ok = true;
      const int ys[2] = {y0, y1};
      const int xs[2] = {x0, x1};
      const double wy[2] = {1.0 - fy, fy};
      const double wx[2] = {1.0 - fx, fx};
      for (int a = 0; a < 2 && ok; ++a) {
        for (int b = 0; b < 2; ++b) {
          const double w = wy[a] * wx[b];
          if (w == 0.0) continue;
          if (!coarse.is_valid(ys[a], xs[b])) {
            ok = false;
            break;
          }
          acc += w * coarse.depth(ys[a], xs[b]);
        }
      }
      out.valid(v, u) = ok;
      if (ok) out.depth(v, u) = acc;
    }
  }
  return out;
}

HypothesisSet sample_hypotheses(int stage, const StageConfig& cfg, double unit_interval,
                                const DepthRange& range, int height, int width,
                                const DepthMap* prev_depth) {
  const int count = cfg.hypothesis_count;
  if (stage < 1) throw Error(ErrorCategory::domain, "stage is 1-based");
  if (count < 2) throw Error(ErrorCategory::domain, "hypothesis_count must be at least 2");
  if (!(unit_interval > 0.0) || !(cfg.interval_multiplier > 0.0)) {
    throw Error(ErrorCategory::domain, "depth interval must be positive");
  }
  if (!(range.min > 0.0) || !(range.max > range.min)) {
    throw Error(ErrorCategory::domain, "invalid global depth range");
  }
  const double interval = cfg.interval_multiplier * unit_interval;

  if (stage == 1) {
    std::vector<double> planes(count);
    for (int i = 0; i < count; ++i) planes[i] = range.min + i * interval;
    return HypothesisSet::global(std::move(planes), height, width);
  }
  if (prev_depth == nullptr) throw Error(ErrorCategory::domain, "stages after the first need a previous depth map");

  const DepthMap prev = (prev_depth->height() == height && prev_depth->width() == width)
                            ? *prev_depth
                            : upsample_depth(*prev_depth, height, width);
  // Samples sit at exact interval spacing, symmetric about the previous depth;
  // near the global range ends the run is shifted rather than compressed.
  const double span = (count - 1) * interval;
  Volume<double> depths(count, height, width);
  for (int v = 0; v < height; ++v) {
    for (int u = 0; u < width; ++u) {
      double lo = range.min;
      double step = (range.max - range.min) / (count - 1);
      if (prev.is_valid(v, u) && span < range.max - range.min) {
        const double c = std::clamp(prev.depth(v, u), range.min, range.max);
        lo = std::clamp(c - 0.5 * span, range.min, range.max - span);
        step = interval;
      }
      for (int d = 0; d < count; ++d) depths(d, v, u) = std::min(lo + d * step, range.max);
    }
  }
  return HypothesisSet::per_pixel(std::move(depths));
}

}  // namespace ramvs
