#include "ramvs/reconstruct.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace ramvs {

namespace {
#include "mc_tables.inc"

constexpr int kCorner[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                               {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
constexpr int kEdgeCorners[12][2] = {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {5, 6},
                                     {6, 7}, {7, 4}, {0, 4}, {1, 5}, {2, 6}, {3, 7}};

std::optional<Projection<double>> try_project(const Vec3& x, const Camera& cam) {
  const Vec3 xc = cam.rotation * x + cam.translation;
  if (!(xc.z() > 0.0)) return std::nullopt;
  const Vec3 h = cam.intrinsics * xc;
  return Projection<double>{{h.x() / h.z(), h.y() / h.z()}, xc.z()};
}

}  // namespace

VoxelSDF::VoxelSDF(const Vec3& origin_, double spacing_, int nx_, int ny_, int nz_)
    : origin(origin_), spacing(spacing_), nx(nx_), ny(ny_), nz(nz_),
      values(static_cast<std::size_t>(nx_) * ny_ * nz_, 0.0),
      valid(static_cast<std::size_t>(nx_) * ny_ * nz_, 0) {
  if (!(spacing_ > 0.0)) throw Error(ErrorCategory::domain, "voxel spacing must be positive");
  if (nx_ < 1 || ny_ < 1 || nz_ < 1) throw Error(ErrorCategory::domain, "voxel grid must be non-empty");
}

std::optional<double> VoxelSDF::interpolate(const Vec3& x) const {
  const Vec3 g = (x - origin) / spacing;
  const int dims[3] = {nx, ny, nz};
  int i0[3];
  double f[3];
  for (int a = 0; a < 3; ++a) {
    if (!(g[a] >= 0.0) || g[a] > dims[a] - 1) return std::nullopt;
    i0[a] = std::min(static_cast<int>(g[a]), std::max(dims[a] - 2, 0));
    f[a] = g[a] - i0[a];
  }
  double acc = 0.0;
  for (int c = 0; c < 8; ++c) {
    const int i = std::min(i0[0] + kCorner[c][0], nx - 1);
    const int j = std::min(i0[1] + kCorner[c][1], ny - 1);
    const int k = std::min(i0[2] + kCorner[c][2], nz - 1);
    const double w = (kCorner[c][0] ? f[0] : 1.0 - f[0]) * (kCorner[c][1] ? f[1] : 1.0 - f[1]) *
                     (kCorner[c][2] ? f[2] : 1.0 - f[2]);
    if (w == 0.0) continue;
    if (!is_valid(i, j, k)) return std::nullopt;
    acc += w * at(i, j, k);
  }
  return acc;
}

// ---------------------------------------------------------------------------
// Consistency filtering and point fusion

bool consistent_with(const Pixel& p, double depth, const Camera& cam, const DepthMap& other_depth,
                     const Camera& other_cam, const FilterThresholds& t, int* other_v, int* other_u) {
  const Vec3 x = back_project(p, depth, cam);
  const auto proj = try_project(x, other_cam);
  if (!proj) return false;
  const int u = static_cast<int>(std::lround(proj->pixel.u));
  const int v = static_cast<int>(std::lround(proj->pixel.v));
  if (u < 0 || v < 0 || u >= other_depth.width() || v >= other_depth.height()) return false;
  if (!other_depth.is_valid(v, u)) return false;
  const Vec3 x2 = back_project(Pixel{double(u), double(v)}, other_depth.depth(v, u), other_cam);
  const auto back = try_project(x2, cam);
  if (!back) return false;
  const double du = back->pixel.u - p.u;
  const double dv = back->pixel.v - p.v;
  if (std::sqrt(du * du + dv * dv) >= t.eps_px) return false;
  if (std::abs(back->depth - depth) / depth >= t.eps_rel) return false;
  if (other_v) *other_v = v;
  if (other_u) *other_u = u;
  return true;
}

std::vector<Mask> cross_view_filter(std::span<const DepthMap> depths, std::span<const ConfidenceMap> confidences,
                                    std::span<const Camera> cams, const FilterThresholds& t) {
  const std::size_t n = depths.size();
  if (n < 2) throw Error(ErrorCategory::insufficient_views, "cross_view_filter needs at least two views");
  if (cams.size() != n || (!confidences.empty() && confidences.size() != n)) {
    throw Error(ErrorCategory::domain, "cross_view_filter: per-view inputs differ in count");
  }
  std::vector<Mask> masks;
  masks.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const DepthMap& dm = depths[i];
    Mask keep = Mask::Constant(dm.height(), dm.width(), false);
    for (int v = 0; v < dm.height(); ++v) {
      for (int u = 0; u < dm.width(); ++u) {
        if (!dm.is_valid(v, u)) continue;
        if (!confidences.empty() && !(confidences[i](v, u) >= t.min_conf)) continue;
        int agree = 0;
        for (std::size_t j = 0; j < n; ++j) {
          if (j == i) continue;
          if (consistent_with({double(u), double(v)}, dm.depth(v, u), cams[i], depths[j], cams[j], t)) ++agree;
        }
        keep(v, u) = agree >= t.min_views;
      }
    }
    masks.push_back(std::move(keep));
  }
  return masks;
}

PointCloud fuse_point_cloud(std::span<const DepthMap> depths, std::span<const Mask> masks,
                            std::span<const GridXd> images, std::span<const Camera> cams,
                            const FilterThresholds& t) {
  const std::size_t n = depths.size();
  if (masks.size() != n || cams.size() != n || (!images.empty() && images.size() != n)) {
    throw Error(ErrorCategory::domain, "fuse_point_cloud: per-view inputs differ in count");
  }
  std::vector<Mask> consumed;
  consumed.reserve(n);
  for (const auto& d : depths) consumed.push_back(Mask::Constant(d.height(), d.width(), false));

  const auto gray_at = [&](std::size_t view, int v, int u) { return images.empty() ? 0.0 : images[view](v, u); };

  PointCloud cloud;
  for (std::size_t i = 0; i < n; ++i) {
    const DepthMap& dm = depths[i];
    for (int v = 0; v < dm.height(); ++v) {
      for (int u = 0; u < dm.width(); ++u) {
        if (!masks[i](v, u) || consumed[i](v, u) || !dm.is_valid(v, u)) continue;
        consumed[i](v, u) = true;
        const Pixel p{double(u), double(v)};
        Vec3 sum = back_project(p, dm.depth(v, u), cams[i]);
        double gray = gray_at(i, v, u);
        std::vector<PointSource> src{{static_cast<int>(i), v, u}};
        for (std::size_t j = 0; j < n; ++j) {
          if (j == i) continue;
          int vj = 0;
          int uj = 0;
          if (!consistent_with(p, dm.depth(v, u), cams[i], depths[j], cams[j], t, &vj, &uj)) continue;
          if (!masks[j](vj, uj) || consumed[j](vj, uj)) continue;
          consumed[j](vj, uj) = true;
          sum += back_project(Pixel{double(uj), double(vj)}, depths[j].depth(vj, uj), cams[j]);
          gray += gray_at(j, vj, uj);
          src.push_back({static_cast<int>(j), vj, uj});
        }
        const double count = static_cast<double>(src.size());
        cloud.points.push_back(sum / count);
        if (!images.empty()) {
          const auto level = static_cast<std::uint8_t>(std::lround(std::clamp(gray / count, 0.0, 1.0) * 255.0));
          cloud.colors.push_back({level, level, level});
        }
        cloud.sources.push_back(std::move(src));
      }
    }
  }
  return cloud;
}

// ---------------------------------------------------------------------------
// Distance volume resampling

namespace {

constexpr double kSaturated = 0.999;

// Linear interpolation of world-unit signed distance along one pixel's
// hypotheses; nullopt outside the swept range or in saturated cells.
std::optional<double> distance_along_ray(const DistanceVolume& S, const HypothesisSet& hyps, int v, int u, double z) {
  const int nd = hyps.count();
  if (z < hyps.front(v, u) || z > hyps.back(v, u)) return std::nullopt;
  int k = 0;
  while (k < nd - 2 && hyps.at(k + 1, v, u) < z) ++k;
  const double h0 = hyps.at(k, v, u);
  const double h1 = hyps.at(k + 1, v, u);
  const double s0 = S.values(k, v, u);
  const double s1 = S.values(k + 1, v, u);
  const double t = (z - h0) / (h1 - h0);
  if ((t < 1.0 && std::abs(s0) >= kSaturated) || (t > 0.0 && std::abs(s1) >= kSaturated)) return std::nullopt;
  const double a = t < 1.0 ? S.scale * std::atanh(s0) : 0.0;
  const double b = t > 0.0 ? S.scale * std::atanh(s1) : 0.0;
  return (1.0 - t) * a + t * b;
}

}  // namespace

VoxelSDF sdf_grid_from_volume(const DistanceVolume& S, const HypothesisSet& hyps, const Camera& cam,
                              const GridConfig& grid) {
  if (hyps.count() != S.depth() || hyps.height() != S.height() || hyps.width() != S.width()) {
    throw Error(ErrorCategory::domain, "distance volume and hypotheses differ in shape");
  }
  VoxelSDF out(grid.origin, grid.spacing, grid.nx, grid.ny, grid.nz);
  const int h = S.height();
  const int w = S.width();
  std::size_t nvalid = 0;
  for (int k = 0; k < grid.nz; ++k) {
    for (int j = 0; j < grid.ny; ++j) {
      for (int i = 0; i < grid.nx; ++i) {
        const auto proj = try_project(out.position(i, j, k), cam);
        if (!proj || !inside_image(proj->pixel, h, w)) continue;
        const double pu = proj->pixel.u;
        const double pv = proj->pixel.v;
        const int u0 = std::min(static_cast<int>(pu), w - 1);
        const int v0 = std::min(static_cast<int>(pv), h - 1);
        const double fu = pu - u0;
        const double fv = pv - v0;
        double acc = 0.0;
        bool ok = true;
        for (int a = 0; a < 2 && ok; ++a) {
          for (int b = 0; b < 2; ++b) {
            const double wgt = (a ? fv : 1.0 - fv) * (b ? fu : 1.0 - fu);
            if (wgt == 0.0) continue;
            const auto s = distance_along_ray(S, hyps, std::min(v0 + a, h - 1), std::min(u0 + b, w - 1), proj->depth);
            if (!s) {
              ok = false;
              break;
            }
            acc += wgt * *s;
          }
        }
        if (!ok) continue;
        out.at(i, j, k) = acc;
        out.valid[out.index(i, j, k)] = 1;
        ++nvalid;
      }
    }
  }
  if (nvalid == 0) throw Error(ErrorCategory::grid_outside_frustum, "voxel grid does not intersect the swept volume");
  return out;
}

// ---------------------------------------------------------------------------
// Marching cubes

namespace {

Vec3 grid_gradient(const VoxelSDF& g, int i, int j, int k) {
  const int idx[3] = {i, j, k};
  const int dims[3] = {g.nx, g.ny, g.nz};
  Vec3 grad = Vec3::Zero();
  for (int a = 0; a < 3; ++a) {
    int lo[3] = {i, j, k};
    int hi[3] = {i, j, k};
    lo[a] = std::max(idx[a] - 1, 0);
    hi[a] = std::min(idx[a] + 1, dims[a] - 1);
    if (!g.is_valid(lo[0], lo[1], lo[2])) lo[a] = idx[a];
    if (!g.is_valid(hi[0], hi[1], hi[2])) hi[a] = idx[a];
    if (hi[a] == lo[a]) continue;
    grad[a] = (g.at(hi[0], hi[1], hi[2]) - g.at(lo[0], lo[1], lo[2])) / ((hi[a] - lo[a]) * g.spacing);
  }
  return grad;
}

}  // namespace

TriangleMesh marching_cubes(const VoxelSDF& grid, double iso) {
  TriangleMesh mesh;
  std::vector<Vec3> gradients;
  std::unordered_map<std::size_t, int> edge_vertex;

  const auto vertex_on_edge = [&](int i, int j, int k, int edge, const double* vals) {
    const int c0 = kEdgeCorners[edge][0];
    const int c1 = kEdgeCorners[edge][1];
    const int a[3] = {i + kCorner[c0][0], j + kCorner[c0][1], k + kCorner[c0][2]};
    const int b[3] = {i + kCorner[c1][0], j + kCorner[c1][1], k + kCorner[c1][2]};
    // Key the edge by its lower endpoint and axis so neighbouring cells share it.
    const bool a_low = grid.index(a[0], a[1], a[2]) < grid.index(b[0], b[1], b[2]);
    const int* lo = a_low ? a : b;
    const int axis = (a[0] != b[0]) ? 0 : (a[1] != b[1] ? 1 : 2);
    const std::size_t key = grid.index(lo[0], lo[1], lo[2]) * 3 + axis;
    if (auto it = edge_vertex.find(key); it != edge_vertex.end()) return it->second;
    const double v0 = vals[c0];
    const double v1 = vals[c1];
    const double t = (iso - v0) / (v1 - v0);
    const Vec3 p0 = grid.position(a[0], a[1], a[2]);
    const Vec3 p1 = grid.position(b[0], b[1], b[2]);
    const Vec3 g0 = grid_gradient(grid, a[0], a[1], a[2]);
    const Vec3 g1 = grid_gradient(grid, b[0], b[1], b[2]);
    const int id = static_cast<int>(mesh.vertices.size());
    mesh.vertices.push_back(p0 + t * (p1 - p0));
    gradients.push_back(g0 + t * (g1 - g0));
    edge_vertex.emplace(key, id);
    return id;
  };

  for (int k = 0; k + 1 < grid.nz; ++k) {
    for (int j = 0; j + 1 < grid.ny; ++j) {
      for (int i = 0; i + 1 < grid.nx; ++i) {
        double vals[8];
        int cube = 0;
        bool ok = true;
        for (int c = 0; c < 8 && ok; ++c) {
          const int ci = i + kCorner[c][0];
          const int cj = j + kCorner[c][1];
          const int ck = k + kCorner[c][2];
          ok = grid.is_valid(ci, cj, ck);
          vals[c] = grid.at(ci, cj, ck);
          if (vals[c] < iso) cube |= 1 << c;
        }
        if (!ok || kEdgeTable[cube] == 0) continue;
        for (int t = 0; kTriTable[cube][t] != -1; t += 3) {
          std::array<int, 3> tri{vertex_on_edge(i, j, k, kTriTable[cube][t], vals),
                                 vertex_on_edge(i, j, k, kTriTable[cube][t + 1], vals),
                                 vertex_on_edge(i, j, k, kTriTable[cube][t + 2], vals)};
          const Vec3& a = mesh.vertices[tri[0]];
          const Vec3 n = (mesh.vertices[tri[1]] - a).cross(mesh.vertices[tri[2]] - a);
          if (0.5 * n.norm() <= 1e-12) continue;
          // Wind triangles so the face normal follows the field gradient.
          if (n.dot(gradients[tri[0]] + gradients[tri[1]] + gradients[tri[2]]) < 0.0) std::swap(tri[1], tri[2]);
          mesh.triangles.push_back(tri);
        }
      }
    }
  }
  mesh.normals.reserve(gradients.size());
  for (const Vec3& g : gradients) {
    const double len = g.norm();
    mesh.normals.push_back(len > 0.0 ? Vec3(g / len) : Vec3::Zero());
  }
  return mesh;
}

}  // namespace ramvs
