#pragma once

#include "ramvs/core.hpp"
#include "ramvs/geometry.hpp"
#include "ramvs/reconstruct.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ramvs {

/// Half-space m . x <= c restricting where a primitive exists.
struct HalfSpace {
  Vec3 normal = Vec3::UnitX();
  double offset = 0.0;

  bool contains(const Vec3& x) const { return normal.dot(x) <= offset; }
};

struct PlanePrimitive {
  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();  // unit length
  std::optional<HalfSpace> clip;
};

struct SpherePrimitive {
  Vec3 center = Vec3::Zero();
  double radius = 1.0;
};

/// Axis-aligned region of a plane (x/y range in world units) painted with a
/// constant albedo.
struct FlatPatch {
  double x0 = 0.0, x1 = 0.0, y0 = 0.0, y1 = 0.0;
  double albedo = 0.5;
};

struct Geometry {
  std::vector<PlanePrimitive> planes;
  std::vector<SpherePrimitive> spheres;

  struct Hit {
    double t = 0.0;
    Vec3 point = Vec3::Zero();
    Vec3 normal = Vec3::Zero();  // facing the ray origin
  };
  /// First intersection with t > 0 along origin + t * dir.
  std::optional<Hit> intersect(const Vec3& origin, const Vec3& dir) const;
  /// Unsigned distance from x to the nearest surface point.
  double distance(const Vec3& x) const;
};

enum class SceneKind { fronto, slanted, sphere, step, lowtex, sphere_slanted };

SceneKind parse_scene_kind(const std::string& name);
const char* scene_kind_name(SceneKind kind);

struct TextureSpec {
  double cell = 6.0;  // world units of the coarsest noise octave
  int octaves = 3;
  double persistence = 0.5;
  std::uint64_t seed = 1;
};

struct SceneSpec {
  SceneKind kind = SceneKind::sphere_slanted;
  int height = 256;
  int width = 320;
  int views = 5;
  double focal = 320.0;
  double baseline = 150.0;   // radius of the source-camera circle
  double look_at = 600.0;    // sources look at (0, 0, look_at)
  double depth_min = 425.0;
  double depth_interval = 2.5;
  int supersample = 3;
  TextureSpec texture;
  std::optional<Geometry> geometry;  // overrides the kind's default geometry
  std::vector<FlatPatch> flat_patches;
};

struct SyntheticScene {
  SceneSpec spec;
  Geometry geometry;
  std::vector<Camera> cameras;
  std::vector<GridXd> images;      // grayscale in [0, 1]
  std::vector<DepthMap> depths;    // analytic depth at pixel centers
  std::vector<std::vector<int>> pairs;  // per view, other views by increasing center distance

  /// Depth along the ray of pixel (u, v) of view `view`, nullopt on a miss.
  std::optional<double> surface_depth(int view, double u, double v) const;
  /// True when x is inside the image of `view` and not occluded.
  bool visible(int view, const Vec3& x) const;
  /// Surface points hit by subdivision^2 rays per pixel of every view, kept
  /// when at least `min_views` cameras see them.
  PointCloud gt_cloud(int subdivision = 1, int min_views = 1) const;
};

Geometry default_geometry(SceneKind kind);

/// Throws Error(no_geometry) when a view sees no surface and Error(domain) for
/// an invalid spec (fewer than two views, non-positive sizes).
SyntheticScene render_synthetic_scene(const SceneSpec& spec);

}  // namespace ramvs
