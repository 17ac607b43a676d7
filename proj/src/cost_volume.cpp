#include "ramvs/cost_volume.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace ramvs {

Volume<double> CostVolume::channel_mean() const {
  Volume<double> out(depth(), height(), width());
  if (channels.empty()) return out;
  auto dst = out.data();
  for (const auto& ch : channels) {
    auto src = ch.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  }
  const double inv = 1.0 / static_cast<double>(channels.size());
  for (double& x : dst) x *= inv;
  return out;
}

GridXd area_downsample(const GridXd& image, int divisor) {
  if (divisor < 1) throw Error(ErrorCategory::domain, "resolution divisor must be >= 1");
  if (divisor == 1) return image;
  const Eigen::Index h = image.rows() / divisor;
  const Eigen::Index w = image.cols() / divisor;
  if (h == 0 || w == 0) throw Error(ErrorCategory::domain, "image too small for resolution divisor");
  GridXd out(h, w);
  const double inv = 1.0 / (divisor * divisor);
  for (Eigen::Index v = 0; v < h; ++v) {
    for (Eigen::Index u = 0; u < w; ++u) {
      out(v, u) = image.block(v * divisor, u * divisor, divisor, divisor).sum() * inv;
    }
  }
  return out;
}

GridXd to_grayscale(const GridXd& r, const GridXd& g, const GridXd& b) {
  return 0.299 * r + 0.587 * g + 0.114 * b;
}

FeatureMap extract_features(const GridXd& image, int divisor) {
  if (image.size() == 0) throw Error(ErrorCategory::empty_input, "extract_features: empty image");
  if (!image.allFinite()) throw Error(ErrorCategory::domain, "extract_features: non-finite pixel");
  const GridXd small = area_downsample(image, divisor);
  const double mean = small.mean();
  const double var = (small - mean).square().mean();
  const double sd = std::max(std::sqrt(var), 1e-6);
  GridXd intensity = !(small == small(0, 0)).all() ? GridXd((small - mean) / sd) : GridXd(GridXd::Zero(small.rows(), small.cols()));

  const Eigen::Index h = intensity.rows();
  const Eigen::Index w = intensity.cols();
  GridXd gx(h, w);
  GridXd gy(h, w);
  for (Eigen::Index v = 0; v < h; ++v) {
    const Eigen::Index vm = std::max<Eigen::Index>(v - 1, 0);
    const Eigen::Index vp = std::min<Eigen::Index>(v + 1, h - 1);
    for (Eigen::Index u = 0; u < w; ++u) {
      const Eigen::Index um = std::max<Eigen::Index>(u - 1, 0);
      const Eigen::Index up = std::min<Eigen::Index>(u + 1, w - 1);
      gx(v, u) = 0.5 * (intensity(v, up) - intensity(v, um));
      gy(v, u) = 0.5 * (intensity(vp, u) - intensity(vm, u));
    }
  }
  FeatureMap out;
  out.channels = {std::move(intensity), std::move(gx), std::move(gy)};
  return out;
}

double sample_bilinear(const GridXd& map, double u, double v) {
  const auto h = static_cast<int>(map.rows());
  const auto w = static_cast<int>(map.cols());
  const int u0 = std::min(static_cast<int>(u), w - 1);
  const int v0 = std::min(static_cast<int>(v), h - 1);
  const int u1 = std::min(u0 + 1, w - 1);
  const int v1 = std::min(v0 + 1, h - 1);
  const double fu = u - u0;
  const double fv = v - v0;
  const double top = (1.0 - fu) * map(v0, u0) + fu * map(v0, u1);
  const double bottom = (1.0 - fu) * map(v1, u0) + fu * map(v1, u1);
  return (1.0 - fv) * top + fv * bottom;
}

FeatureVolume reference_feature_volume(const FeatureMap& feat_ref, int depth_count) {
  const int h = feat_ref.height();
  const int w = feat_ref.width();
  FeatureVolume out;
  out.valid = ValidityVolume(depth_count, h, w, 1);
  out.channels.reserve(feat_ref.channels.size());
  for (const auto& ch : feat_ref.channels) {
    Volume<double> vol(depth_count, h, w);
    for (int d = 0; d < depth_count; ++d) vol.slice(d) = ch;
    out.channels.push_back(std::move(vol));
  }
  return out;
}

FeatureVolume build_feature_volume(const FeatureMap& feat_src, const Camera& cam_ref, const Camera& cam_src,
                                   const HypothesisSet& hyps) {
  const int depth_count = hyps.count();
  const int h = hyps.height();
  const int w = hyps.width();
  const int sh = feat_src.height();
  const int sw = feat_src.width();
  const int nc = feat_src.channel_count();

  FeatureVolume out;
  out.valid = ValidityVolume(depth_count, h, w, 0);
  out.channels.assign(nc, Volume<double>(depth_count, h, w, 0.0));

  const SweepWarp<double> warp(cam_ref, cam_src);
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      const Vec3 ray = warp.ray({double(u), double(v)});
      for (int d = 0; d < depth_count; ++d) {
        const auto p = warp(ray, hyps.at(d, v, u));
        if (!p || !inside_image(*p, sh, sw)) continue;
        out.valid(d, v, u) = 1;
        for (int c = 0; c < nc; ++c) out.channels[c](d, v, u) = sample_bilinear(feat_src.channels[c], p->u, p->v);
      }
    }
  }
  return out;
}

namespace {

void check_same_shape(const FeatureVolume& a, const FeatureVolume& b) {
  if (!a.valid.same_shape(b.valid) || a.channel_count() != b.channel_count()) {
    throw Error(ErrorCategory::domain, "feature volume shapes differ");
  }
}

}  // namespace

CostVolume aggregate_cost(const FeatureVolume& ref, std::span<const FeatureVolume> sources,
                          std::span<const ViewWeightMap> weights) {
  if (sources.empty()) throw Error(ErrorCategory::insufficient_views, "aggregate_cost needs at least one source view");
  for (const auto& s : sources) check_same_shape(ref, s);
  if (!weights.empty() && weights.size() != sources.size()) {
    throw Error(ErrorCategory::domain, "one weight map per source view is required");
  }
  const int depth_count = ref.depth();
  const int h = ref.height();
  const int w = ref.width();
  const int nc = ref.channel_count();
  const std::size_t nviews = sources.size();

  CostVolume out;
  out.view_count = static_cast<int>(nviews) + 1;
  out.valid = ValidityVolume(depth_count, h, w, 0);
  out.channels.assign(nc, Volume<double>(depth_count, h, w, 0.0));

  std::vector<double> terms(nviews);
  for (int d = 0; d < depth_count; ++d) {
    for (int v = 0; v < h; ++v) {
      for (int u = 0; u < w; ++u) {
        const std::size_t idx = ref.valid.index(d, v, u);
        int nvalid = 0;
        for (const auto& s : sources) nvalid += s.valid.data()[idx] ? 1 : 0;
        if (nvalid == 0) continue;
        out.valid.data()[idx] = 1;
        const double inv = 1.0 / nvalid;
        for (int c = 0; c < nc; ++c) {
          const double r = ref.channels[c].data()[idx];
          std::size_t n = 0;
          for (std::size_t i = 0; i < nviews; ++i) {
            if (!sources[i].valid.data()[idx]) continue;
            const double diff = sources[i].channels[c].data()[idx] - r;
            const double wgt = weights.empty() ? 1.0 : weights[i].at(d, v, u);
            terms[n++] = wgt * diff * diff;
          }
          std::sort(terms.begin(), terms.begin() + static_cast<std::ptrdiff_t>(n));
          double acc = 0.0;
          for (std::size_t i = 0; i < n; ++i) acc += terms[i];
          out.channels[c].data()[idx] = acc * inv;
        }
      }
    }
  }
  return out;
}

std::vector<ViewWeightMap> compute_view_weights(const FeatureVolume& ref, std::span<const FeatureVolume> sources,
                                                WeightMode mode) {
  for (const auto& s : sources) check_same_shape(ref, s);
  const int h = ref.height();
  const int w = ref.width();
  std::vector<ViewWeightMap> out(sources.size());
  for (auto& m : out) m.weights = Volume<double>(1, h, w, 1.0);
  if (mode == WeightMode::uniform || sources.empty()) return out;

  const int depth_count = ref.depth();
  const int nc = ref.channel_count();
  for (std::size_t i = 0; i < sources.size(); ++i) {
    const auto& s = sources[i];
    for (int v = 0; v < h; ++v) {
      for (int u = 0; u < w; ++u) {
        double best = std::numeric_limits<double>::infinity();
        for (int d = 0; d < depth_count; ++d) {
          if (!s.valid(d, v, u)) continue;
          double acc = 0.0;
          for (int c = 0; c < nc; ++c) {
            const double diff = s.channels[c](d, v, u) - ref.channels[c](d, v, u);
            acc += diff * diff;
          }
          best = std::min(best, acc / nc);
        }
        out[i].weights(0, v, u) = std::isfinite(best) ? std::exp(-best) : 0.0;
      }
    }
  }
  const double n = static_cast<double>(sources.size());
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      double total = 0.0;
      for (const auto& m : out) total += m.weights(0, v, u);
      for (auto& m : out) m.weights(0, v, u) = total > 0.0 ? m.weights(0, v, u) * n / total : 1.0;
    }
  }
  return out;
}

}  // namespace ramvs
