#include "ramvs/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace ramvs {

namespace {

constexpr double kPi = 3.14159265358979323846;

double plane_distance(const PlanePrimitive& pl, const Vec3& x) {
  const double signed_h = pl.normal.dot(x - pl.point);
  const Vec3 foot = x - signed_h * pl.normal;
  if (!pl.clip || pl.clip->contains(foot)) return std::abs(signed_h);
  // Nearest point of the clipped half-plane lies on its boundary line.
  const Vec3 m = pl.clip->normal;
  Vec3 w = m - m.dot(pl.normal) * pl.normal;
  const double wn = w.squaredNorm();
  if (wn < 1e-24) return std::abs(signed_h);
  const double s = (pl.clip->offset - m.dot(foot)) / m.dot(w);
  return (x - (foot + s * w)).norm();
}

class ValueNoise {
 public:
  explicit ValueNoise(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::iota(perm_.begin(), perm_.end(), 0);
    std::shuffle(perm_.begin(), perm_.end(), rng);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (double& v : values_) v = uni(rng);
  }

  double operator()(const Vec3& p) const {
    const Eigen::Vector3d f = p.array().floor();
    const Eigen::Vector3d t = p - f;
    const Eigen::Vector3d s = t.array() * t.array() * (3.0 - 2.0 * t.array());
    const int i = static_cast<int>(f.x());
    const int j = static_cast<int>(f.y());
    const int k = static_cast<int>(f.z());
    double acc = 0.0;
    for (int c = 0; c < 8; ++c) {
      const int di = c & 1, dj = (c >> 1) & 1, dk = (c >> 2) & 1;
      const double w = (di ? s.x() : 1.0 - s.x()) * (dj ? s.y() : 1.0 - s.y()) * (dk ? s.z() : 1.0 - s.z());
      acc += w * lattice(i + di, j + dj, k + dk);
    }
    return acc;
  }

 private:
  double lattice(int i, int j, int k) const {
    const int h = perm_[(perm_[(perm_[i & 255] + j) & 255] + k) & 255];
    return values_[h];
  }

  std::array<int, 256> perm_{};
  std::array<double, 256> values_{};
};

Camera look_at_camera(const Vec3& center, const Vec3& target, const SceneSpec& spec) {
  const Vec3 z = (target - center).normalized();
  const Vec3 x = Vec3::UnitY().cross(z).normalized();
  const Vec3 y = z.cross(x);
  Camera cam;
  cam.rotation.row(0) = x.transpose();
  cam.rotation.row(1) = y.transpose();
  cam.rotation.row(2) = z.transpose();
  cam.translation = -cam.rotation * center;
  cam.intrinsics << spec.focal, 0.0, 0.5 * (spec.width - 1), 0.0, spec.focal, 0.5 * (spec.height - 1), 0.0, 0.0, 1.0;
  cam.depth_min = spec.depth_min;
  cam.depth_interval = spec.depth_interval;
  return cam;
}

// World-space ray through pixel (u, v) scaled so that t equals camera depth.
Vec3 pixel_ray(const Camera& cam, double u, double v) {
  const Vec3 dir_cam = cam.intrinsics.triangularView<Eigen::Upper>().solve(Vec3(u, v, 1.0));
  return cam.rotation.transpose() * dir_cam;
}

}  // namespace

std::optional<Geometry::Hit> Geometry::intersect(const Vec3& origin, const Vec3& dir) const {
  std::optional<Hit> best;
  const auto consider = [&](double t, const Vec3& normal) {
    if (!(t > 0.0) || (best && t >= best->t)) return;
    Vec3 n = normal;
    if (n.dot(dir) > 0.0) n = -n;
    best = Hit{t, origin + t * dir, n};
  };
  for (const PlanePrimitive& pl : planes) {
    const double denom = pl.normal.dot(dir);
    if (std::abs(denom) < 1e-15) continue;
    const double t = pl.normal.dot(pl.point - origin) / denom;
    if (pl.clip && !pl.clip->contains(origin + t * dir)) continue;
    consider(t, pl.normal);
  }
  for (const SpherePrimitive& sp : spheres) {
    const Vec3 oc = origin - sp.center;
    const double a = dir.squaredNorm();
    const double b = oc.dot(dir);
    const double c = oc.squaredNorm() - sp.radius * sp.radius;
    const double disc = b * b - a * c;
    if (disc < 0.0) continue;
    const double root = std::sqrt(disc);
    // Numerically stable pair of roots.
    const double q = b >= 0.0 ? -(b + root) : -(b - root);
    double t0 = q / a;
    double t1 = q != 0.0 ? c / q : t0;
    if (t0 > t1) std::swap(t0, t1);
    const double t = t0 > 0.0 ? t0 : t1;
    if (t > 0.0) consider(t, (origin + t * dir - sp.center) / sp.radius);
  }
  return best;
}

double Geometry::distance(const Vec3& x) const {
  double best = std::numeric_limits<double>::infinity();
  for (const PlanePrimitive& pl : planes) best = std::min(best, plane_distance(pl, x));
  for (const SpherePrimitive& sp : spheres) best = std::min(best, std::abs((x - sp.center).norm() - sp.radius));
  return best;
}

SceneKind parse_scene_kind(const std::string& name) {
  if (name == "fronto") return SceneKind::fronto;
  if (name == "slanted") return SceneKind::slanted;
  if (name == "sphere") return SceneKind::sphere;
  if (name == "step") return SceneKind::step;
  if (name == "lowtex") return SceneKind::lowtex;
  if (name == "sphere-slanted") return SceneKind::sphere_slanted;
  throw Error(ErrorCategory::domain, "unknown scene kind '" + name + "'");
}

const char* scene_kind_name(SceneKind kind) {
  switch (kind) {
    case SceneKind::fronto: return "fronto";
    case SceneKind::slanted: return "slanted";
    case SceneKind::sphere: return "sphere";
    case SceneKind::step: return "step";
    case SceneKind::lowtex: return "lowtex";
    case SceneKind::sphere_slanted: return "sphere-slanted";
  }
  return "unknown";
}

Geometry default_geometry(SceneKind kind) {
  const double tilt = 20.0 * kPi / 180.0;
  const PlanePrimitive slanted{Vec3(0, 0, 700), Vec3(std::sin(tilt), 0.0, -std::cos(tilt)), std::nullopt};
  const PlanePrimitive fronto{Vec3(0, 0, 600), -Vec3::UnitZ(), std::nullopt};
  const SpherePrimitive sphere{Vec3(0, 0, 620), 50.0};
  Geometry g;
  switch (kind) {
    case SceneKind::fronto:
    case SceneKind::lowtex:
      g.planes.push_back(fronto);
      break;
    case SceneKind::slanted:
      g.planes.push_back(slanted);
      break;
    case SceneKind::sphere:
      g.spheres.push_back(sphere);
      break;
    case SceneKind::step:
      g.planes.push_back({Vec3(0, 0, 560), -Vec3::UnitZ(), HalfSpace{Vec3::UnitX(), 0.0}});
      g.planes.push_back({Vec3(0, 0, 640), -Vec3::UnitZ(), HalfSpace{-Vec3::UnitX(), 0.0}});
      break;
    case SceneKind::sphere_slanted:
      g.spheres.push_back(sphere);
      g.planes.push_back(slanted);
      break;
  }
  return g;
}

std::optional<double> SyntheticScene::surface_depth(int view, double u, double v) const {
  const Camera& cam = cameras.at(view);
  const auto hit = geometry.intersect(cam.center(), pixel_ray(cam, u, v));
  if (!hit) return std::nullopt;
  return hit->t;
}

bool SyntheticScene::visible(int view, const Vec3& x) const {
  const Camera& cam = cameras.at(view);
  const Vec3 x_cam = cam.rotation * x + cam.translation;
  if (!(x_cam.z() > 0.0)) return false;
  const Vec3 h = cam.intrinsics * x_cam;
  const double u = h.x() / h.z();
  const double v = h.y() / h.z();
  if (u < -0.5 || v < -0.5 || u > spec.width - 0.5 || v > spec.height - 0.5) return false;
  const auto hit = geometry.intersect(cam.center(), pixel_ray(cam, u, v));
  return hit && std::abs(hit->t - x_cam.z()) <= 1e-6 * x_cam.z();
}

PointCloud SyntheticScene::gt_cloud(int subdivision, int min_views) const {
  if (subdivision < 1) throw Error(ErrorCategory::domain, "gt_cloud: subdivision must be at least 1");
  const int n = static_cast<int>(cameras.size());
  PointCloud cloud;
  for (int i = 0; i < n; ++i) {
    const Camera& cam = cameras[i];
    const Vec3 origin = cam.center();
    for (int v = 0; v < spec.height; ++v) {
      for (int u = 0; u < spec.width; ++u) {
        for (int sv = 0; sv < subdivision; ++sv) {
          for (int su = 0; su < subdivision; ++su) {
            const double pu = u + double(su) / subdivision;
            const double pv = v + double(sv) / subdivision;
            const auto hit = geometry.intersect(origin, pixel_ray(cam, pu, pv));
            if (!hit) continue;
            int seen = 1;
            for (int j = 0; j < n && seen < min_views; ++j) {
              if (j != i && visible(j, hit->point)) ++seen;
            }
            if (seen >= min_views) cloud.points.push_back(hit->point);
          }
        }
      }
    }
  }
  return cloud;
}

SyntheticScene render_synthetic_scene(const SceneSpec& spec) {
  if (spec.views < 2) throw Error(ErrorCategory::domain, "synthetic scene needs at least two views");
  if (spec.height <= 0 || spec.width <= 0 || !(spec.focal > 0.0) || spec.supersample < 1) {
    throw Error(ErrorCategory::domain, "synthetic scene: invalid image size, focal length or supersampling");
  }
  if (spec.texture.octaves < 1 || !(spec.texture.cell > 0.0)) {
    throw Error(ErrorCategory::domain, "synthetic scene: invalid texture spec");
  }

  SyntheticScene scene;
  scene.spec = spec;
  scene.geometry = spec.geometry ? *spec.geometry : default_geometry(spec.kind);
  std::vector<FlatPatch> patches = spec.flat_patches;
  if (spec.kind == SceneKind::lowtex && patches.empty()) patches.push_back({-60.0, 60.0, -40.0, 40.0, 0.5});

  const Vec3 target(0.0, 0.0, spec.look_at);
  scene.cameras.push_back(look_at_camera(Vec3::Zero(), Vec3(0.0, 0.0, 1.0), spec));
  for (int i = 1; i < spec.views; ++i) {
    const double a = 2.0 * kPi * (i - 1) / (spec.views - 1);
    const Vec3 c(spec.baseline * std::cos(a), spec.baseline * std::sin(a), 0.0);
    scene.cameras.push_back(look_at_camera(c, target, spec));
  }

  const ValueNoise noise(spec.texture.seed);
  const Vec3 light = Vec3(0.3, -0.5, -1.0).normalized();
  const auto albedo = [&](const Vec3& x) {
    for (const FlatPatch& p : patches) {
      if (x.x() >= p.x0 && x.x() <= p.x1 && x.y() >= p.y0 && x.y() <= p.y1) return p.albedo;
    }
    double acc = 0.0, amp = 1.0, norm = 0.0, freq = 1.0 / spec.texture.cell;
    for (int o = 0; o < spec.texture.octaves; ++o) {
      acc += amp * noise(x * freq + Vec3(17.0 * o, 31.0 * o, 7.0 * o));
      norm += amp;
      amp *= spec.texture.persistence;
      freq *= 2.0;
    }
    return 0.15 + 0.7 * acc / norm;
  };
  const auto radiance = [&](const Geometry::Hit& hit) {
    return albedo(hit.point) * (0.35 + 0.65 * std::max(0.0, hit.normal.dot(light)));
  };

  const int ss = spec.supersample;
  for (std::size_t view = 0; view < scene.cameras.size(); ++view) {
    const Camera& cam = scene.cameras[view];
    const Vec3 origin = cam.center();
    GridXd image = GridXd::Zero(spec.height, spec.width);
    GridXd depth = GridXd::Constant(spec.height, spec.width, std::numeric_limits<double>::quiet_NaN());
    for (int v = 0; v < spec.height; ++v) {
      for (int u = 0; u < spec.width; ++u) {
        if (const auto hit = scene.geometry.intersect(origin, pixel_ray(cam, u, v))) depth(v, u) = hit->t;
        double acc = 0.0;
        for (int sv = 0; sv < ss; ++sv) {
          for (int su = 0; su < ss; ++su) {
            const double pu = u + (su + 0.5) / ss - 0.5;
            const double pv = v + (sv + 0.5) / ss - 0.5;
            if (const auto hit = scene.geometry.intersect(origin, pixel_ray(cam, pu, pv))) acc += radiance(*hit);
          }
        }
        image(v, u) = acc / (ss * ss);
      }
    }
    DepthMap dm(std::move(depth));
    if (!dm.valid.any()) {
      throw Error(ErrorCategory::no_geometry, "synthetic scene: view " + std::to_string(view) + " sees no geometry");
    }
    scene.images.push_back(std::move(image));
    scene.depths.push_back(std::move(dm));
  }

  const int n = static_cast<int>(scene.cameras.size());
  for (int i = 0; i < n; ++i) {
    std::vector<int> others;
    for (int j = 0; j < n; ++j) {
      if (j != i) others.push_back(j);
    }
    const Vec3 ci = scene.cameras[i].center();
    std::stable_sort(others.begin(), others.end(), [&](int a, int b) {
      return (scene.cameras[a].center() - ci).norm() < (scene.cameras[b].center() - ci).norm();
    });
    scene.pairs.push_back(std::move(others));
  }
  return scene;
}

}  // namespace ramvs
