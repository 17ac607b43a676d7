#pragma once

#include "ramvs/core.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <vector>

namespace ramvs {

template <typename Scalar>
struct PixelCoord {
  Scalar u{};  // column
  Scalar v{};  // row
};

/// Pinhole camera: x_cam = R * x_world + t, pixel ~ K * x_cam.
/// depth_min and depth_interval describe the per-view sweep in world units;
/// depth_interval is the unit that stage interval multipliers scale.
template <typename Scalar>
struct CameraParams {
  using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;
  using Vector3 = Eigen::Matrix<Scalar, 3, 1>;

  Matrix3 intrinsics = Matrix3::Identity();
  Matrix3 rotation = Matrix3::Identity();
  Vector3 translation = Vector3::Zero();
  Scalar depth_min = Scalar(1);
  Scalar depth_interval = Scalar(1);

  Vector3 center() const { return -rotation.transpose() * translation; }

  /// Throws Error(domain) when an invariant does not hold.
  void validate() const;

  /// Intrinsics for an image area-downsampled by an integer factor. Pixel
  /// centers of a block of `divisor` pixels map onto the coarse pixel center.
  CameraParams scaled(int divisor) const {
    CameraParams out = *this;
    const Scalar s = Scalar(divisor);
    const Scalar shift = (s - Scalar(1)) / Scalar(2);
    out.intrinsics.row(0) /= s;
    out.intrinsics.row(1) /= s;
    out.intrinsics(0, 2) = (intrinsics(0, 2) - shift) / s;
    out.intrinsics(1, 2) = (intrinsics(1, 2) - shift) / s;
    return out;
  }
};

using Camera = CameraParams<double>;
using Pixel = PixelCoord<double>;

template <typename Scalar>
void CameraParams<Scalar>::validate() const {
  using std::abs;
  const Matrix3 rtr = rotation.transpose() * rotation;
  if (!rotation.allFinite() || (rtr - Matrix3::Identity()).cwiseAbs().maxCoeff() > Scalar(1e-9)) {
    throw Error(ErrorCategory::domain, "camera rotation is not orthonormal");
  }
  if (!intrinsics.allFinite() || intrinsics(1, 0) != Scalar(0) || intrinsics(2, 0) != Scalar(0) ||
      intrinsics(2, 1) != Scalar(0) || !(intrinsics(0, 0) > Scalar(0)) ||
      !(intrinsics(1, 1) > Scalar(0)) || !(intrinsics(2, 2) > Scalar(0))) {
    throw Error(ErrorCategory::domain, "camera intrinsics must be upper-triangular with positive diagonal");
  }
  if (!translation.allFinite()) throw Error(ErrorCategory::domain, "camera translation is not finite");
  if (!(depth_min > Scalar(0))) throw Error(ErrorCategory::domain, "depth_min must be positive");
  if (!(depth_interval > Scalar(0))) throw Error(ErrorCategory::domain, "depth_interval must be positive");
}

template <typename Scalar>
Eigen::Matrix<Scalar, 3, 1> back_project(const PixelCoord<Scalar>& p, Scalar depth,
                                         const CameraParams<Scalar>& cam) {
  using std::isfinite;
  if (!isfinite(p.u) || !isfinite(p.v) || !isfinite(depth)) {
    throw Error(ErrorCategory::domain, "back_project: non-finite input");
  }
  if (!(depth > Scalar(0))) throw Error(ErrorCategory::domain, "back_project: depth must be positive");
  const Eigen::Matrix<Scalar, 3, 1> pix(p.u, p.v, Scalar(1));
  const Eigen::Matrix<Scalar, 3, 1> x_cam =
      depth * cam.intrinsics.template triangularView<Eigen::Upper>().solve(pix);
  return cam.rotation.transpose() * (x_cam - cam.translation);
}

template <typename Scalar>
struct Projection {
  PixelCoord<Scalar> pixel;
  Scalar depth{};
};

/// Throws Error(behind_camera) when the camera-frame depth is not positive.
template <typename Scalar>
Projection<Scalar> project(const Eigen::Matrix<Scalar, 3, 1>& x, const CameraParams<Scalar>& cam) {
  const Eigen::Matrix<Scalar, 3, 1> x_cam = cam.rotation * x + cam.translation;
  if (!(x_cam.z() > Scalar(0))) throw Error(ErrorCategory::behind_camera, "point is behind camera");
  const Eigen::Matrix<Scalar, 3, 1> h = cam.intrinsics * x_cam;
  return {{h.x() / h.z(), h.y() / h.z()}, x_cam.z()};
}

/// Reprojects reference pixel p at depth d into the source view. Returns
/// nullopt when the point is behind the source camera ("invisible").
template <typename Scalar>
std::optional<PixelCoord<Scalar>> warp_pixel(const PixelCoord<Scalar>& p, Scalar depth,
                                             const CameraParams<Scalar>& ref,
                                             const CameraParams<Scalar>& src) {
  const auto x = back_project(p, depth, ref);
  const Eigen::Matrix<Scalar, 3, 1> x_cam = src.rotation * x + src.translation;
  if (!(x_cam.z() > Scalar(0))) return std::nullopt;
  const Eigen::Matrix<Scalar, 3, 1> h = src.intrinsics * x_cam;
  return PixelCoord<Scalar>{h.x() / h.z(), h.y() / h.z()};
}

/// Plane-sweep form of the reference-to-source warp. For a fixed pixel the
/// homogeneous source coordinate is depth * (H p) + K_src t_rel, so the
/// per-pixel ray term is computed once and reused for every hypothesis.
template <typename Scalar>
class SweepWarp {
 public:
  using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;
  using Vector3 = Eigen::Matrix<Scalar, 3, 1>;

  SweepWarp(const CameraParams<Scalar>& ref, const CameraParams<Scalar>& src) {
    const Matrix3 r_rel = src.rotation * ref.rotation.transpose();
    homography_ = src.intrinsics * r_rel * ref.intrinsics.inverse();
    offset_ = src.intrinsics * (src.translation - r_rel * ref.translation);
  }

  Vector3 ray(const PixelCoord<Scalar>& p) const { return homography_ * Vector3(p.u, p.v, Scalar(1)); }

  std::optional<PixelCoord<Scalar>> operator()(const Vector3& ray, Scalar depth) const {
    const Vector3 h = depth * ray + offset_;
    // Source intrinsics have a positive (2,2) entry, so h.z() shares the sign of the camera depth.
    if (!(h.z() > Scalar(0))) return std::nullopt;
    return PixelCoord<Scalar>{h.x() / h.z(), h.y() / h.z()};
  }

  const Matrix3& homography() const { return homography_; }
  const Vector3& offset() const { return offset_; }

 private:
  Matrix3 homography_;
  Vector3 offset_;
};

template <typename Scalar>
bool inside_image(const PixelCoord<Scalar>& p, int height, int width) {
  return p.u >= Scalar(0) && p.v >= Scalar(0) && p.u <= Scalar(width - 1) && p.v <= Scalar(height - 1);
}

// ---------------------------------------------------------------------------
// Depth hypotheses

struct StageConfig {
  int hypothesis_count = 64;
  double interval_multiplier = 4.0;
  int resolution_divisor = 4;
};

struct DepthRange {
  double min = 0.0;
  double max = 0.0;
};

/// Global sweep range of the first stage: `count` planes starting at
/// depth_min, spaced by multiplier * depth_interval.
DepthRange global_range(const Camera& cam, const StageConfig& first_stage);

/// Depth hypotheses of one cascade stage. Stage 1 is a single global list of
/// planes; later stages hold D per-pixel hypotheses (D x H x W).
class HypothesisSet {
 public:
  static HypothesisSet global(std::vector<double> planes, int height, int width);
  static HypothesisSet per_pixel(Volume<double> depths);

  int count() const { return count_; }
  int height() const { return height_; }
  int width() const { return width_; }
  bool is_per_pixel() const { return !per_pixel_.empty(); }

  double at(int d, int v, int u) const { return per_pixel_.empty() ? planes_[d] : per_pixel_(d, v, u); }
  double front(int v, int u) const { return at(0, v, u); }
  double back(int v, int u) const { return at(count_ - 1, v, u); }

  /// Global plane list; empty for per-pixel sets.
  const std::vector<double>& planes() const { return planes_; }

 private:
  int count_ = 0;
  int height_ = 0;
  int width_ = 0;
  std::vector<double> planes_;
  Volume<double> per_pixel_;
};

/// Bilinear resampling of a depth map onto a finer (or equal) grid using the
/// pixel-center convention of area downsampling. A fine pixel whose bilinear
/// support touches an invalid or non-finite coarse pixel is invalid.
DepthMap upsample_depth(const DepthMap& coarse, int height, int width);

/// `stage` is 1-based. Stage 1 sweeps the global range; later stages place
/// Dₛ hypotheses intervalₛ apart, centered on the upsampled previous depth and
/// kept inside `range` (nominal per-pixel range Dₛ * intervalₛ). Pixels without
/// a valid previous depth spread Dₛ samples over the global range.
HypothesisSet sample_hypotheses(int stage, const StageConfig& cfg, double unit_interval,
                                const DepthRange& range, int height, int width,
                                const DepthMap* prev_depth);

}  // namespace ramvs
