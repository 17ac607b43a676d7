#pragma once

#include "ramvs/core.hpp"
#include "ramvs/geometry.hpp"
#include "ramvs/region_heads.hpp"

#include <array>
#include <optional>
#include <span>
#include <vector>

namespace ramvs {

using Color = std::array<std::uint8_t, 3>;

struct PointSource {
  int view = 0;
  int v = 0;
  int u = 0;
};

struct PointCloud {
  std::vector<Vec3> points;
  std::vector<Color> colors;                      // empty or one per point
  std::vector<std::vector<PointSource>> sources;  // empty or one list per point

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<Vec3> normals;  // empty or one per vertex
};

/// Regular grid of signed distances; value(i, j, k) sits at origin + spacing * (i, j, k).
struct VoxelSDF {
  Vec3 origin = Vec3::Zero();
  double spacing = 1.0;
  int nx = 0, ny = 0, nz = 0;
  std::vector<double> values;
  std::vector<std::uint8_t> valid;

  VoxelSDF() = default;
  VoxelSDF(const Vec3& origin, double spacing, int nx, int ny, int nz);

  std::size_t index(int i, int j, int k) const { return (static_cast<std::size_t>(k) * ny + j) * nx + i; }
  Vec3 position(int i, int j, int k) const { return origin + spacing * Vec3(i, j, k); }
  double& at(int i, int j, int k) { return values[index(i, j, k)]; }
  double at(int i, int j, int k) const { return values[index(i, j, k)]; }
  bool is_valid(int i, int j, int k) const { return valid[index(i, j, k)] != 0; }

  /// Trilinear interpolation at a world point inside the grid; nullopt if any
  /// of the eight surrounding samples is invalid.
  std::optional<double> interpolate(const Vec3& x) const;
};

struct FilterThresholds {
  double eps_px = 1.0;
  double eps_rel = 0.01;
  int min_views = 3;
  double min_conf = 0.3;
};

/// Geometric consistency check of one depth estimate against another view:
/// project into view j, read its depth at the nearest pixel, back-project and
/// reproject into the original view.
bool consistent_with(const Pixel& p, double depth, const Camera& cam, const DepthMap& other_depth,
                     const Camera& other_cam, const FilterThresholds& t, int* other_v = nullptr,
                     int* other_u = nullptr);

/// Throws Error(insufficient_views) for fewer than two views.
std::vector<Mask> cross_view_filter(std::span<const DepthMap> depths, std::span<const ConfidenceMap> confidences,
                                    std::span<const Camera> cams, const FilterThresholds& thresholds);

/// Back-projects kept pixels; mutually consistent estimates from different
/// views are merged into one averaged point. `images` may be empty (no colors);
/// otherwise grayscale in [0, 1] per view.
PointCloud fuse_point_cloud(std::span<const DepthMap> depths, std::span<const Mask> masks,
                            std::span<const GridXd> images, std::span<const Camera> cams,
                            const FilterThresholds& thresholds);

struct GridConfig {
  Vec3 origin = Vec3::Zero();
  double spacing = 1.0;
  int nx = 0, ny = 0, nz = 0;
};

/// Resamples the reference-view distance volume onto a regular grid.
/// Throws Error(grid_outside_frustum) if no voxel lands inside the swept volume.
VoxelSDF sdf_grid_from_volume(const DistanceVolume& S, const HypothesisSet& hyps, const Camera& cam,
                              const GridConfig& grid);

/// Iso-surface extraction. Cells are visited in x-fastest row-major order;
/// vertices on shared edges are shared; cells touching invalid samples are skipped.
TriangleMesh marching_cubes(const VoxelSDF& grid, double iso = 0.0);

}  // namespace ramvs
