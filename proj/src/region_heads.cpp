#include "ramvs/region_heads.hpp"

#include "ramvs/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ramvs {

namespace {

// In-place clipped box mean along one axis; `stride` steps between
// neighbours, `count` elements per line.
void box_line(double* line, std::size_t stride, int count, int radius, std::vector<double>& scratch) {
  scratch.resize(static_cast<std::size_t>(count) + 1);
  scratch[0] = 0.0;
  for (int i = 0; i < count; ++i) scratch[i + 1] = scratch[i] + line[i * stride];
  for (int i = 0; i < count; ++i) {
    const int lo = std::max(i - radius, 0);
    const int hi = std::min(i + radius, count - 1);
    line[i * stride] = (scratch[hi + 1] - scratch[lo]) / (hi - lo + 1);
  }
}

}  // namespace

Volume<double> box_smooth(const Volume<double>& vol, int radius) {
  if (radius < 0) throw Error(ErrorCategory::domain, "smoothing radius must be >= 0");
  Volume<double> out = vol;
  if (radius == 0 || vol.empty()) return out;
  const int nd = vol.depth();
  const int h = vol.height();
  const int w = vol.width();
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  double* base = out.data().data();
  std::vector<double> scratch;
  for (int d = 0; d < nd; ++d) {
    for (int v = 0; v < h; ++v) box_line(base + out.index(d, v, 0), 1, w, radius, scratch);
    for (int u = 0; u < w; ++u) box_line(base + out.index(d, 0, u), static_cast<std::size_t>(w), h, radius, scratch);
  }
  for (std::size_t p = 0; p < plane; ++p) box_line(base + p, plane, nd, radius, scratch);
  return out;
}

ProbabilityVolume probability_from_mean_cost(const Volume<double>& mean_cost, const ValidityVolume& valid,
                                             double temperature, int smoothing_radius) {
  if (!(temperature > 0.0)) throw Error(ErrorCategory::domain, "temperature must be positive");
  if (!mean_cost.same_shape(valid)) throw Error(ErrorCategory::domain, "cost and validity shapes differ");
  const int nd = mean_cost.depth();
  const int h = mean_cost.height();
  const int w = mean_cost.width();

  Volume<double> cost = mean_cost;
  Mask low(h, w);
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      double worst = -std::numeric_limits<double>::infinity();
      for (int d = 0; d < nd; ++d) {
        if (valid(d, v, u) && std::isfinite(cost(d, v, u))) worst = std::max(worst, cost(d, v, u));
      }
      low(v, u) = !std::isfinite(worst);
      const double fill = low(v, u) ? 0.0 : worst;
      for (int d = 0; d < nd; ++d) {
        if (!valid(d, v, u) || !std::isfinite(cost(d, v, u))) cost(d, v, u) = fill;
      }
    }
  }
  cost = box_smooth(cost, smoothing_radius);

  ProbabilityVolume out{Volume<double>(nd, h, w), std::move(low)};
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      if (out.low_confidence(v, u)) {
        for (int d = 0; d < nd; ++d) out.prob(d, v, u) = 1.0 / nd;
        continue;
      }
      double lowest = std::numeric_limits<double>::infinity();
      for (int d = 0; d < nd; ++d) lowest = std::min(lowest, cost(d, v, u));
      double total = 0.0;
      for (int d = 0; d < nd; ++d) {
        const double e = std::exp(-(cost(d, v, u) - lowest) / temperature);
        out.prob(d, v, u) = e;
        total += e;
      }
      for (int d = 0; d < nd; ++d) out.prob(d, v, u) /= total;
    }
  }
  return out;
}

ProbabilityVolume probability_from_cost(const CostVolume& cv, double temperature, int smoothing_radius) {
  return probability_from_mean_cost(cv.channel_mean(), cv.valid, temperature, smoothing_radius);
}

double stage_distance_scale(const StageConfig& stage, double unit_interval) {
  return 0.5 * stage.hypothesis_count * stage.interval_multiplier * unit_interval;
}

DistanceVolume distance_from_provisional(const ProbabilityVolume& P, const HypothesisSet& hyps, const Camera& cam,
                                         int patch_k, double scale) {
  if (!(scale > 0.0)) throw Error(ErrorCategory::domain, "distance scale must be positive");
  const SearchConfig search{patch_k};
  search.validate();
  const int nd = P.depth();
  const int h = P.height();
  const int w = P.width();
  if (hyps.count() != nd || hyps.height() != h || hyps.width() != w) {
    throw Error(ErrorCategory::domain, "probability volume and hypotheses differ in shape");
  }

  DepthMap provisional = softargmax_depth(P, hyps);
  const SurfacePointSet surface = surface_points_from_depth(provisional, cam);

  DistanceVolume out{Volume<double>(nd, h, w), scale};
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      if (!surface.valid(v, u)) {
        const double extent = hyps.back(v, u) - hyps.front(v, u);
        const double sat = std::tanh(extent / scale);
        const double mid = 0.5 * (hyps.back(v, u) + hyps.front(v, u));
        for (int d = 0; d < nd; ++d) out.values(d, v, u) = hyps.at(d, v, u) < mid ? sat : -sat;
        continue;
      }
      const double surf_depth = provisional.depth(v, u);
      for (int d = 0; d < nd; ++d) {
        const double hyp = hyps.at(d, v, u);
        const Vec3 q = back_project(Pixel{double(u), double(v)}, hyp, cam);
        // The anchor pixel itself is valid, so the window is never empty.
        const auto nn = nearest_in_patch(q, v, u, surface, search);
        const double sign = hyp < surf_depth ? 1.0 : (hyp > surf_depth ? -1.0 : 0.0);
        out.values(d, v, u) = std::tanh(sign * nn->distance / scale);
      }
    }
  }
  return out;
}

}  // namespace ramvs
