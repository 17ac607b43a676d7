#include "ramvs/sdf_supervision.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ramvs {

SurfacePointSet::SurfacePointSet(int height, int width, std::vector<Vec3> points, std::vector<std::uint8_t> valid)
    : height_(height), width_(width), points_(std::move(points)), valid_(std::move(valid)) {
  const auto n = static_cast<std::size_t>(height) * width;
  if (points_.size() != n || valid_.size() != n) {
    throw Error(ErrorCategory::domain, "surface point grid does not match its dimensions");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (valid_[i] && !points_[i].allFinite()) valid_[i] = 0;
    if (!valid_[i]) continue;
    xs_.push_back(points_[i].x());
    ys_.push_back(points_[i].y());
    zs_.push_back(points_[i].z());
    valid_index_.push_back(static_cast<int>(i));
  }
}

void SearchConfig::validate() const {
  if (patch_k < 1 || patch_k % 2 == 0) throw Error(ErrorCategory::domain, "patch_k must be an odd integer >= 1");
}

SurfacePointSet surface_points_from_depth(const DepthMap& depth, const Camera& cam) {
  const int h = depth.height();
  const int w = depth.width();
  std::vector<Vec3> points(static_cast<std::size_t>(h) * w, Vec3::Zero());
  std::vector<std::uint8_t> valid(points.size(), 0);
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      if (!depth.is_valid(v, u)) continue;
      const std::size_t i = static_cast<std::size_t>(v) * w + u;
      points[i] = back_project(Pixel{double(u), double(v)}, depth.depth(v, u), cam);
      valid[i] = 1;
    }
  }
  return SurfacePointSet(h, w, std::move(points), std::move(valid));
}

NearestResult nearest_global(const Vec3& query, const SurfacePointSet& surface) {
  if (surface.valid_count() == 0) throw Error(ErrorCategory::empty_surface, "surface has no valid points");
  const double* xs = surface.xs().data();
  const double* ys = surface.ys().data();
  const double* zs = surface.zs().data();
  const double qx = query.x();
  const double qy = query.y();
  const double qz = query.z();
  const std::size_t n = surface.xs().size();
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_i = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = qx - xs[i];
    const double dy = qy - ys[i];
    const double dz = qz - zs[i];
    const double d2 = dx * dx + dy * dy + dz * dz;
    if (d2 < best) {
      best = d2;
      best_i = i;
    }
  }
  return {std::sqrt(best), surface.valid_index()[best_i]};
}

std::optional<NearestResult> nearest_in_patch(const Vec3& query, int anchor_v, int anchor_u,
                                              const SurfacePointSet& surface, const SearchConfig& cfg) {
  if (anchor_v < 0 || anchor_u < 0 || anchor_v >= surface.height() || anchor_u >= surface.width()) {
    throw Error(ErrorCategory::domain, "patch anchor outside image");
  }
  const int r = cfg.patch_k / 2;
  const int v0 = std::max(anchor_v - r, 0);
  const int v1 = std::min(anchor_v + r, surface.height() - 1);
  const int u0 = std::max(anchor_u - r, 0);
  const int u1 = std::min(anchor_u + r, surface.width() - 1);
  double best = std::numeric_limits<double>::infinity();
  int best_i = -1;
  for (int v = v0; v <= v1; ++v) {
    for (int u = u0; u <= u1; ++u) {
      if (!surface.valid(v, u)) continue;
      const Vec3& p = surface.point(v, u);
      const double dx = query.x() - p.x();
      const double dy = query.y() - p.y();
      const double dz = query.z() - p.z();
      const double d2 = dx * dx + dy * dy + dz * dz;
      if (d2 < best) {
        best = d2;
        best_i = static_cast<int>(surface.index(v, u));
      }
    }
  }
  if (best_i < 0) return std::nullopt;
  return NearestResult{std::sqrt(best), best_i};
}

SignedDistanceGT generate_sdf_gt(const HypothesisSet& hyps, const DepthMap& depth_gt, const Camera& cam,
                                 const SearchConfig& cfg) {
  cfg.validate();
  const int h = hyps.height();
  const int w = hyps.width();
  if (depth_gt.height() != h || depth_gt.width() != w) {
    throw Error(ErrorCategory::domain, "ground-truth depth and hypotheses differ in resolution");
  }
  const SurfacePointSet surface = surface_points_from_depth(depth_gt, cam);
  const int depth_count = hyps.count();
  SignedDistanceGT out{Volume<double>(depth_count, h, w, 0.0), ValidityVolume(depth_count, h, w, 0)};
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      if (!surface.valid(v, u)) continue;
      const double gt = depth_gt.depth(v, u);
      for (int d = 0; d < depth_count; ++d) {
        const double hyp = hyps.at(d, v, u);
        const Vec3 q = back_project(Pixel{double(u), double(v)}, hyp, cam);
        const auto nn = nearest_in_patch(q, v, u, surface, cfg);
        if (!nn) continue;
        const double sign = hyp < gt ? 1.0 : (hyp > gt ? -1.0 : 0.0);
        out.distance(d, v, u) = sign * nn->distance;
        out.valid(d, v, u) = 1;
      }
    }
  }
  return out;
}

LossReport losses(std::span<const StageLossInput> stages, double lambda) {
  LossReport report;
  report.lambda = lambda;
  for (const auto& s : stages) {
    if (!s.depth_pred || !s.depth_gt || !s.distance_pred || !s.distance_gt) {
      throw Error(ErrorCategory::domain, "losses: every stage needs predictions and ground truth");
    }
    const DepthMap& pred = *s.depth_pred;
    const DepthMap& gt = *s.depth_gt;
    if (pred.height() != gt.height() || pred.width() != gt.width()) {
      throw Error(ErrorCategory::domain, "losses: depth shapes differ");
    }
    double acc = 0.0;
    std::size_t n = 0;
    for (int v = 0; v < gt.height(); ++v) {
      for (int u = 0; u < gt.width(); ++u) {
        if (!gt.is_valid(v, u) || !std::isfinite(pred.depth(v, u))) continue;
        if (s.depth_mask && !(*s.depth_mask)(v, u)) continue;
        acc += std::abs(gt.depth(v, u) - pred.depth(v, u));
        ++n;
      }
    }
    report.depth_per_stage.push_back(n ? acc / static_cast<double>(n) : 0.0);
    report.depth_stage_empty.push_back(n == 0);

    const Volume<double>& sp = *s.distance_pred;
    const SignedDistanceGT& sg = *s.distance_gt;
    if (!sp.same_shape(sg.distance)) throw Error(ErrorCategory::domain, "losses: distance shapes differ");
    if (!(s.distance_scale > 0.0)) throw Error(ErrorCategory::domain, "losses: distance scale must be positive");
    acc = 0.0;
    n = 0;
    const auto pred_s = sp.data();
    const auto gt_s = sg.distance.data();
    const auto gt_ok = sg.valid.data();
    for (std::size_t i = 0; i < pred_s.size(); ++i) {
      if (!gt_ok[i]) continue;
      if (s.distance_mask && !s.distance_mask->data()[i]) continue;
      acc += std::abs(std::tanh(gt_s[i] / s.distance_scale) - pred_s[i]);
      ++n;
    }
    report.distance_per_stage.push_back(n ? acc / static_cast<double>(n) : 0.0);
    report.distance_stage_empty.push_back(n == 0);
  }
  for (double x : report.depth_per_stage) report.l_depth += x;
  for (double x : report.distance_per_stage) report.l_sdf += x;
  report.total = report.l_depth + lambda * report.l_sdf;
  return report;
}

}  // namespace ramvs
