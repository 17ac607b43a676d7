#pragma once

#include "ramvs/core.hpp"
#include "ramvs/geometry.hpp"
#include "ramvs/reconstruct.hpp"

#include <array>
#include <vector>

namespace ramvs {

struct Triangle {
  Vec3 a, b, c;

  double area() const { return 0.5 * (b - a).cross(c - a).norm(); }
  double max_edge() const;
  double min_edge() const;
};

/// Where the closest point of a triangle lies: a vertex (a), the interior of
/// an edge (b) or the interior of the face (c).
enum class ClosestCase { vertex, edge, face };

char case_label(ClosestCase c);

struct TriangleDistance {
  double distance = 0.0;
  ClosestCase where = ClosestCase::face;
  Vec3 closest = Vec3::Zero();
  int feature = 0;  // vertex index (0..2) or edge index (0: ab, 1: bc, 2: ca)
};

/// Exact point-to-triangle distance. Throws Error(degenerate) when the area is
/// at most 1e-12.
TriangleDistance point_triangle_distance(const Vec3& q, const Triangle& tri);

/// Error of approximating the distance to a triangle by the distance to its
/// nearest vertex, with the per-case and overall bounds it should satisfy.
/// Squared quantities are compared; the bound checks admit a relative slack of
/// 1e-12 for rounding.
struct BoundReport {
  double exact = 0.0;
  double vertex_distance = 0.0;
  ClosestCase where = ClosestCase::face;
  double error = 0.0;       // vertex_distance - exact
  double case_bound = 0.0;  // on error^2: 0, edge^2 / 4 or min_edge^2 / 3
  double final_bound = 0.0; // on error^2: max_edge^2
  bool case_holds = true;
  bool final_holds = true;
};

BoundReport bound_check(const Vec3& q, const Triangle& tri);

/// Two triangles per pixel quad of back-projected points. Quads touching an
/// invalid pixel are skipped, as are triangles with an edge longer than
/// disc_ratio * depth * pixel footprint (depth discontinuities).
std::vector<Triangle> triangulate_depth_map(const DepthMap& depth, const Camera& cam, double disc_ratio = 3.0);

struct BoundSummary {
  std::size_t queries = 0;
  std::array<std::size_t, 3> per_case{};          // indexed by ClosestCase
  std::array<std::size_t, 3> case_violations{};
  std::size_t final_violations = 0;
  double max_error = 0.0;
  double max_case_ratio = 0.0;   // e^2 / case bound, cases b and c
  double max_final_ratio = 0.0;  // e^2 / max_edge^2

  void add(const BoundReport& r);
  std::size_t total_case_violations() const;
};

/// Bound check with the queries of the plane sweep: at every `stride`-th pixel
/// of the depth map, `hypotheses` points spaced `interval` apart along the
/// pixel ray, centered on the surface depth. Each query is checked against
/// the closest triangle among the quads within `window` pixels.
BoundSummary bound_check_depth_map(const DepthMap& depth, const Camera& cam, int hypotheses, double interval,
                                   int stride = 1, double disc_ratio = 3.0, int window = 2);

// ---------------------------------------------------------------------------
// Point cloud metrics

/// Static 3D k-d tree for exact nearest-neighbour queries.
class KdTree {
 public:
  explicit KdTree(std::vector<Vec3> points);

  std::size_t size() const { return points_.size(); }
  /// Distance to the nearest stored point; ties resolve to the smallest input index.
  double nearest_distance(const Vec3& q, std::size_t* index = nullptr) const;

 private:
  struct Node {
    int begin, end;  // range in order_
    int left = -1, right = -1;
    int axis = 0;
    double split = 0.0;
  };
  int build(int begin, int end, int depth);
  void search(int node, const Vec3& q, double& best, std::size_t& best_i) const;

  std::vector<Vec3> points_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
};

struct EvalReport {
  double accuracy = 0.0;
  double completeness = 0.0;
  double overall = 0.0;
  double precision = 0.0;  // percent
  double recall = 0.0;     // percent
  double f_score = 0.0;    // percent
  double tau = 0.0;
  double max_dist = 0.0;
  std::size_t recon_points = 0;
  std::size_t gt_points = 0;
};

/// Accuracy/completeness are mean nearest-neighbour distances with distances
/// above max_dist excluded; precision/recall count distances below tau.
/// Throws Error(empty_input) for an empty cloud.
EvalReport evaluate_point_clouds(const PointCloud& recon, const PointCloud& gt, double max_dist, double tau);

}  // namespace ramvs
