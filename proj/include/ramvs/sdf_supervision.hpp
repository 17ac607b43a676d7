#pragma once

#include "ramvs/core.hpp"
#include "ramvs/geometry.hpp"

#include <optional>
#include <span>
#include <vector>

namespace ramvs {

/// Depth map back-projected into a pixel-indexed grid of world points.
class SurfacePointSet {
 public:
  SurfacePointSet() = default;
  /// `points` and `valid` are row-major, height * width entries each.
  SurfacePointSet(int height, int width, std::vector<Vec3> points, std::vector<std::uint8_t> valid);

  int height() const { return height_; }
  int width() const { return width_; }
  int valid_count() const { return static_cast<int>(valid_index_.size()); }

  const Vec3& point(int v, int u) const { return points_[index(v, u)]; }
  bool valid(int v, int u) const { return valid_[index(v, u)] != 0; }
  std::size_t index(int v, int u) const { return static_cast<std::size_t>(v) * width_ + u; }

  // Valid points in row-major order, structure-of-arrays for the exhaustive scan.
  const std::vector<double>& xs() const { return xs_; }
  const std::vector<double>& ys() const { return ys_; }
  const std::vector<double>& zs() const { return zs_; }
  const std::vector<int>& valid_index() const { return valid_index_; }

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<Vec3> points_;
  std::vector<std::uint8_t> valid_;
  std::vector<double> xs_, ys_, zs_;
  std::vector<int> valid_index_;
};

struct SearchConfig {
  int patch_k = 5;

  void validate() const;
};

struct NearestResult {
  double distance = 0.0;
  int index = -1;  // row-major pixel index v * W + u
};

struct SignedDistanceGT {
  Volume<double> distance;  // world units
  ValidityVolume valid;
};

inline double squared_distance(const Vec3& a, double x, double y, double z) {
  const double dx = a.x() - x;
  const double dy = a.y() - y;
  const double dz = a.z() - z;
  return dx * dx + dy * dy + dz * dz;
}

SurfacePointSet surface_points_from_depth(const DepthMap& depth, const Camera& cam);

/// Exhaustive nearest valid surface point; ties go to the smallest row-major
/// pixel index. Throws Error(empty_surface) when no point is valid.
NearestResult nearest_global(const Vec3& query, const SurfacePointSet& surface);

/// Nearest valid surface point inside the k x k window centered on `anchor`,
/// clipped at the image border. nullopt when the window has no valid point.
std::optional<NearestResult> nearest_in_patch(const Vec3& query, int anchor_v, int anchor_u,
                                              const SurfacePointSet& surface, const SearchConfig& cfg);

/// Signed distance of every hypothesis point to the ground-truth surface:
/// magnitude from the patch search anchored at the query's own pixel, sign
/// positive when the hypothesis is nearer the camera than the ground truth.
SignedDistanceGT generate_sdf_gt(const HypothesisSet& hyps, const DepthMap& depth_gt, const Camera& cam,
                                 const SearchConfig& cfg);

// ---------------------------------------------------------------------------
// Two-branch L1 losses

struct StageLossInput {
  const DepthMap* depth_pred = nullptr;
  const DepthMap* depth_gt = nullptr;
  const Volume<double>* distance_pred = nullptr;  // tanh-space
  double distance_scale = 1.0;                     // world units per tanh argument
  const SignedDistanceGT* distance_gt = nullptr;   // world units
  const Mask* depth_mask = nullptr;                // optional, ANDed with GT validity
  const ValidityVolume* distance_mask = nullptr;   // optional, ANDed with GT validity
};

struct LossReport {
  std::vector<double> depth_per_stage;
  std::vector<double> distance_per_stage;
  std::vector<bool> depth_stage_empty;
  std::vector<bool> distance_stage_empty;
  double l_depth = 0.0;
  double l_sdf = 0.0;
  double lambda = 0.1;
  double total = 0.0;
};

/// L_d = sum over stages of mean |D* - D|; L_S = sum over stages of
/// mean |tanh(S*/scale) - S|; total = L_d + lambda * L_S. A stage whose mask is
/// empty contributes 0 and is flagged.
LossReport losses(std::span<const StageLossInput> stages, double lambda);

}  // namespace ramvs
