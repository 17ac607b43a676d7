#include "ramvs/validation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace ramvs {

double Triangle::max_edge() const {
  return std::max({(b - a).norm(), (c - b).norm(), (a - c).norm()});
}

double Triangle::min_edge() const {
  return std::min({(b - a).norm(), (c - b).norm(), (a - c).norm()});
}

char case_label(ClosestCase c) {
  switch (c) {
    case ClosestCase::vertex: return 'a';
    case ClosestCase::edge: return 'b';
    case ClosestCase::face: return 'c';
  }
  return '?';
}

// Closest point by Voronoi region classification of the triangle's features.
TriangleDistance point_triangle_distance(const Vec3& q, const Triangle& tri) {
  if (!(tri.area() > 1e-12)) throw Error(ErrorCategory::degenerate, "degenerate triangle");
  const Vec3& a = tri.a;
  const Vec3& b = tri.b;
  const Vec3& c = tri.c;
  const Vec3 ab = b - a;
  const Vec3 ac = c - a;
  const Vec3 ap = q - a;

  const auto result = [&](const Vec3& p, ClosestCase where, int feature) {
    return TriangleDistance{(q - p).norm(), where, p, feature};
  };

  const double d1 = ab.dot(ap);
  const double d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return result(a, ClosestCase::vertex, 0);

  const Vec3 bp = q - b;
  const double d3 = ab.dot(bp);
  const double d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return result(b, ClosestCase::vertex, 1);

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
    const double t = d1 / (d1 - d3);
    return result(a + t * ab, ClosestCase::edge, 0);
  }

  const Vec3 cp = q - c;
  const double d5 = ab.dot(cp);
  const double d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return result(c, ClosestCase::vertex, 2);

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
    const double t = d2 / (d2 - d6);
    return result(a + t * ac, ClosestCase::edge, 2);
  }

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    const double t = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return result(b + t * (c - b), ClosestCase::edge, 1);
  }

  const double denom = 1.0 / (va + vb + vc);
  const double v = vb * denom;
  const double w = vc * denom;
  return result(a + v * ab + w * ac, ClosestCase::face, 0);
}

BoundReport bound_check(const Vec3& q, const Triangle& tri) {
  const TriangleDistance td = point_triangle_distance(q, tri);
  BoundReport r;
  r.exact = td.distance;
  r.vertex_distance = std::min({(q - tri.a).norm(), (q - tri.b).norm(), (q - tri.c).norm()});
  r.where = td.where;
  r.error = std::max(r.vertex_distance - r.exact, 0.0);
  const double e2 = r.error * r.error;
  const double max_edge = tri.max_edge();
  const double slack = 1e-12 * max_edge * max_edge;
  switch (td.where) {
    case ClosestCase::vertex:
      r.case_bound = 0.0;
      break;
    case ClosestCase::edge: {
      const Vec3* ends[3][2] = {{&tri.a, &tri.b}, {&tri.b, &tri.c}, {&tri.c, &tri.a}};
      const double len = (*ends[td.feature][1] - *ends[td.feature][0]).norm();
      r.case_bound = len * len / 4.0;
      break;
    }
    case ClosestCase::face: {
      const double m = tri.min_edge();
      r.case_bound = m * m / 3.0;
      break;
    }
  }
  r.final_bound = max_edge * max_edge;
  r.case_holds = e2 <= r.case_bound + slack;
  r.final_holds = e2 <= r.final_bound + slack;
  return r;
}

namespace {

struct IndexedTriangles {
  std::vector<Triangle> triangles;
  std::vector<int> quad;  // row-major index of the quad's top-left pixel
};

IndexedTriangles triangulate(const DepthMap& depth, const Camera& cam, double disc_ratio) {
  const int h = depth.height();
  const int w = depth.width();
  const double focal = 0.5 * (cam.intrinsics(0, 0) + cam.intrinsics(1, 1));
  std::vector<Vec3> pts(static_cast<std::size_t>(h) * w);
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      if (depth.is_valid(v, u)) pts[static_cast<std::size_t>(v) * w + u] = back_project(Pixel{double(u), double(v)}, depth.depth(v, u), cam);
    }
  }
  const auto at = [&](int v, int u) -> const Vec3& { return pts[static_cast<std::size_t>(v) * w + u]; };

  IndexedTriangles out;
  const auto emit = [&](int quad, int v0, int u0, int v1, int u1, int v2, int u2) {
    const double z = std::min({depth.depth(v0, u0), depth.depth(v1, u1), depth.depth(v2, u2)});
    // Diagonal quad edges span sqrt(2) pixels.
    const double limit = disc_ratio * z / focal * std::sqrt(2.0);
    const Triangle t{at(v0, u0), at(v1, u1), at(v2, u2)};
    if (t.max_edge() > limit || !(t.area() > 1e-12)) return;
    out.triangles.push_back(t);
    out.quad.push_back(quad);
  };
  for (int v = 0; v + 1 < h; ++v) {
    for (int u = 0; u + 1 < w; ++u) {
      if (!depth.is_valid(v, u) || !depth.is_valid(v, u + 1) || !depth.is_valid(v + 1, u) ||
          !depth.is_valid(v + 1, u + 1)) {
        continue;
      }
      const int quad = v * w + u;
      emit(quad, v, u, v + 1, u, v, u + 1);
      emit(quad, v, u + 1, v + 1, u, v + 1, u + 1);
    }
  }
  return out;
}

}  // namespace

std::vector<Triangle> triangulate_depth_map(const DepthMap& depth, const Camera& cam, double disc_ratio) {
  return triangulate(depth, cam, disc_ratio).triangles;
}

void BoundSummary::add(const BoundReport& r) {
  const auto c = static_cast<std::size_t>(r.where);
  ++queries;
  ++per_case[c];
  if (!r.case_holds) ++case_violations[c];
  if (!r.final_holds) ++final_violations;
  const double e2 = r.error * r.error;
  max_error = std::max(max_error, r.error);
  if (r.case_bound > 0.0) max_case_ratio = std::max(max_case_ratio, e2 / r.case_bound);
  if (r.final_bound > 0.0) max_final_ratio = std::max(max_final_ratio, e2 / r.final_bound);
}

std::size_t BoundSummary::total_case_violations() const {
  return case_violations[0] + case_violations[1] + case_violations[2];
}

BoundSummary bound_check_depth_map(const DepthMap& depth, const Camera& cam, int hypotheses, double interval,
                                   int stride, double disc_ratio, int window) {
  if (hypotheses < 1 || !(interval > 0.0) || stride < 1 || window < 0) {
    throw Error(ErrorCategory::domain, "bound_check_depth_map: invalid sampling parameters");
  }
  const int h = depth.height();
  const int w = depth.width();
  const IndexedTriangles mesh = triangulate(depth, cam, disc_ratio);
  // Triangles per quad, in emission order.
  std::vector<std::vector<int>> by_quad(static_cast<std::size_t>(h) * w);
  for (std::size_t i = 0; i < mesh.quad.size(); ++i) by_quad[mesh.quad[i]].push_back(static_cast<int>(i));

  BoundSummary summary;
  for (int v = 0; v < h; v += stride) {
    for (int u = 0; u < w; u += stride) {
      if (!depth.is_valid(v, u)) continue;
      for (int d = 0; d < hypotheses; ++d) {
        const double z = depth.depth(v, u) + (d - 0.5 * (hypotheses - 1)) * interval;
        if (!(z > 0.0)) continue;
        const Vec3 q = back_project(Pixel{double(u), double(v)}, z, cam);
        int best = -1;
        double best_d = std::numeric_limits<double>::infinity();
        for (int qv = std::max(0, v - window); qv <= std::min(h - 2, v + window); ++qv) {
          for (int qu = std::max(0, u - window); qu <= std::min(w - 2, u + window); ++qu) {
            for (int t : by_quad[static_cast<std::size_t>(qv) * w + qu]) {
              const double dist = point_triangle_distance(q, mesh.triangles[t]).distance;
              if (dist < best_d) {
                best_d = dist;
                best = t;
              }
            }
          }
        }
        if (best >= 0) summary.add(bound_check(q, mesh.triangles[best]));
      }
    }
  }
  return summary;
}

// ---------------------------------------------------------------------------

KdTree::KdTree(std::vector<Vec3> points) : points_(std::move(points)), order_(points_.size()) {
  std::iota(order_.begin(), order_.end(), 0);
  if (!points_.empty()) build(0, static_cast<int>(points_.size()), 0);
}

int KdTree::build(int begin, int end, int depth) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(Node{begin, end});
  if (end - begin <= 8) return id;
  Eigen::AlignedBox3d box;
  for (int i = begin; i < end; ++i) box.extend(points_[order_[i]]);
  int axis = 0;
  box.sizes().maxCoeff(&axis);
  const int mid = (begin + end) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](int x, int y) { return points_[x][axis] < points_[y][axis]; });
  nodes_[id].axis = axis;
  nodes_[id].split = points_[order_[mid]][axis];
  const int left = build(begin, mid, depth + 1);
  const int right = build(mid, end, depth + 1);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

void KdTree::search(int node_id, const Vec3& q, double& best, std::size_t& best_i) const {
  const Node& node = nodes_[node_id];
  if (node.left < 0) {
    for (int i = node.begin; i < node.end; ++i) {
      const auto idx = static_cast<std::size_t>(order_[i]);
      const double d2 = (points_[idx] - q).squaredNorm();
      if (d2 < best || (d2 == best && idx < best_i)) {
        best = d2;
        best_i = idx;
      }
    }
    return;
  }
  const double diff = q[node.axis] - node.split;
  const int near = diff < 0.0 ? node.left : node.right;
  const int far = diff < 0.0 ? node.right : node.left;
  search(near, q, best, best_i);
  if (diff * diff <= best) search(far, q, best, best_i);
}

double KdTree::nearest_distance(const Vec3& q, std::size_t* index) const {
  if (points_.empty()) throw Error(ErrorCategory::empty_input, "nearest neighbour query on an empty tree");
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_i = std::numeric_limits<std::size_t>::max();
  search(0, q, best, best_i);
  if (index) *index = best_i;
  return std::sqrt(best);
}

namespace {

struct OneWay {
  double mean = 0.0;
  double within = 0.0;  // fraction below tau
};

OneWay one_way(const PointCloud& from, const KdTree& to, double max_dist, double tau) {
  double acc = 0.0;
  std::size_t n = 0;
  std::size_t hits = 0;
  for (const Vec3& p : from.points) {
    const double d = to.nearest_distance(p);
    if (d < tau) ++hits;
    if (d > max_dist) continue;
    acc += d;
    ++n;
  }
  return {n ? acc / static_cast<double>(n) : 0.0, static_cast<double>(hits) / static_cast<double>(from.size())};
}

}  // namespace

EvalReport evaluate_point_clouds(const PointCloud& recon, const PointCloud& gt, double max_dist, double tau) {
  if (recon.empty() || gt.empty()) throw Error(ErrorCategory::empty_input, "evaluate_point_clouds: empty point cloud");
  if (!(tau > 0.0) || !(max_dist > 0.0)) throw Error(ErrorCategory::domain, "tau and max_dist must be positive");
  const KdTree gt_tree(gt.points);
  const KdTree recon_tree(recon.points);
  const OneWay acc = one_way(recon, gt_tree, max_dist, tau);
  const OneWay comp = one_way(gt, recon_tree, max_dist, tau);
  EvalReport r;
  r.accuracy = acc.mean;
  r.completeness = comp.mean;
  r.overall = 0.5 * (r.accuracy + r.completeness);
  r.precision = 100.0 * acc.within;
  r.recall = 100.0 * comp.within;
  const double sum = acc.within + comp.within;
  r.f_score = sum > 0.0 ? 100.0 * 2.0 * acc.within * comp.within / sum : 0.0;
  r.tau = tau;
  r.max_dist = max_dist;
  r.recon_points = recon.size();
  r.gt_points = gt.size();
  return r;
}

}  // namespace ramvs
