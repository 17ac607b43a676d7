#include "ramvs/validation.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <map>

using namespace ramvs;

namespace {

// Zooming grid search over barycentric coordinates; the squared distance is
// convex on the triangle, so shrinking around the best sample converges.
double brute_force_distance(const Vec3& q, const Triangle& t) {
  double best = std::numeric_limits<double>::infinity();
  double ca = 1.0 / 3.0, cb = 1.0 / 3.0, half = 1.0;
  constexpr int n = 40;
  for (int level = 0; level < 40; ++level) {
    double ba = ca, bb = cb;
    for (int i = 0; i <= n; ++i) {
      for (int j = 0; j <= n; ++j) {
        const double a = std::clamp(ca - half + 2.0 * half * i / n, 0.0, 1.0);
        const double b = std::clamp(cb - half + 2.0 * half * j / n, 0.0, 1.0 - a);
        const double d = (q - (t.a + a * (t.b - t.a) + b * (t.c - t.a))).norm();
        if (d < best) {
          best = d;
          ba = a;
          bb = b;
        }
      }
    }
    ca = ba;
    cb = bb;
    half *= 0.25;
  }
  return best;
}

Triangle random_triangle(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  for (;;) {
    const Triangle t{Vec3(uni(rng), uni(rng), uni(rng)), Vec3(uni(rng), uni(rng), uni(rng)),
                     Vec3(uni(rng), uni(rng), uni(rng))};
    if (t.area() > 1e-3) return t;
  }
}

}  // namespace

TEST(PointTriangle, AboveCentroidIsFaceCase) {
  const Triangle t{Vec3(0, 0, 0), Vec3(2, 0, 0), Vec3(1, std::sqrt(3.0), 0)};
  const Vec3 centroid = (t.a + t.b + t.c) / 3.0;
  const auto r = point_triangle_distance(centroid + Vec3(0, 0, 1.7), t);
  EXPECT_EQ(r.where, ClosestCase::face);
  EXPECT_EQ(case_label(r.where), 'c');
  EXPECT_NEAR(r.distance, 1.7, 1e-12);
}

TEST(PointTriangle, BeyondVertexIsVertexCase) {
  const Triangle t{Vec3(0, 0, 0), Vec3(2, 0, 0), Vec3(1, std::sqrt(3.0), 0)};
  const Vec3 q(-1.0, -1.0, 0.5);
  const auto r = point_triangle_distance(q, t);
  EXPECT_EQ(r.where, ClosestCase::vertex);
  EXPECT_EQ(r.feature, 0);
  EXPECT_NEAR(r.distance, q.norm(), 1e-12);
}

TEST(PointTriangle, MatchesDenseSampling) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> uni(-2.0, 2.0);
  std::map<ClosestCase, int> seen;
  for (int i = 0; i < 10000; ++i) {
    const Triangle t = random_triangle(rng);
    const Vec3 q(uni(rng), uni(rng), uni(rng));
    const auto r = point_triangle_distance(q, t);
    ASSERT_NEAR(r.distance, brute_force_distance(q, t), 1e-6);
    EXPECT_NEAR((q - r.closest).norm(), r.distance, 1e-12);
    ++seen[r.where];
  }
  EXPECT_EQ(seen.size(), 3u);
}

TEST(PointTriangle, DegenerateRejected) {
  try {
    point_triangle_distance(Vec3::Zero(), Triangle{Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(2, 0, 0)});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::degenerate);
  }
}

TEST(BoundCheck, VertexCaseHasZeroError) {
  const Triangle t{Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)};
  const BoundReport r = bound_check(Vec3(-1, -1, 1), t);
  EXPECT_EQ(r.where, ClosestCase::vertex);
  EXPECT_EQ(r.error, 0.0);
  EXPECT_TRUE(r.case_holds);
  EXPECT_TRUE(r.final_holds);
}

TEST(BoundCheck, EdgeMidpointOfIsoscelesTriangle) {
  const Triangle t{Vec3(0, 0, 0), Vec3(2, 0, 0), Vec3(1, 3, 0)};
  const BoundReport r = bound_check(Vec3(1, -0.5, 0.3), t);
  EXPECT_EQ(r.where, ClosestCase::edge);
  EXPECT_NEAR(r.exact, std::hypot(0.5, 0.3), 1e-12);
  EXPECT_NEAR(r.vertex_distance, std::sqrt(1.0 + 0.25 + 0.09), 1e-12);
  EXPECT_LE(r.error, 2.0 / 2.0);
  EXPECT_DOUBLE_EQ(r.case_bound, 1.0);
  EXPECT_TRUE(r.case_holds);
}

TEST(BoundCheck, SkinnyTriangleViolatesFaceCaseBound) {
  const Triangle t{Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0.5, 10, 0)};
  const BoundReport r = bound_check(Vec3(0.5, 5, 0.01), t);
  EXPECT_EQ(r.where, ClosestCase::face);
  EXPECT_NEAR(r.exact, 0.01, 1e-12);
  EXPECT_FALSE(r.case_holds);
  EXPECT_TRUE(r.final_holds);
}

TEST(BoundCheck, RandomPairsRespectFinalBound) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> uni(-2.0, 2.0);
  BoundSummary s;
  for (int i = 0; i < 20000; ++i) {
    const BoundReport r = bound_check(Vec3(uni(rng), uni(rng), uni(rng)), random_triangle(rng));
    ASSERT_GE(r.error, 0.0);
    s.add(r);
  }
  EXPECT_EQ(s.final_violations, 0u);
  EXPECT_EQ(s.case_violations[0], 0u);
  EXPECT_EQ(s.case_violations[1], 0u);
  EXPECT_EQ(s.queries, 20000u);
}

TEST(Triangulate, ConstantTwoByTwo) {
  const Camera c = ramvs::test::pinhole(10.0, 0.5, 0.5);
  const auto tris = triangulate_depth_map(DepthMap(2, 2, 5.0), c);
  ASSERT_EQ(tris.size(), 2u);
  for (const auto& t : tris) {
    EXPECT_DOUBLE_EQ(t.a.z(), 5.0);
    EXPECT_DOUBLE_EQ(t.b.z(), 5.0);
    EXPECT_DOUBLE_EQ(t.c.z(), 5.0);
  }
}

TEST(Triangulate, SlantedPlaneNormals) {
  const Camera c = ramvs::test::pinhole(80.0, 15.5, 11.5);
  const Vec3 n = Vec3(0.2, 0.4, -1.0).normalized();
  const Vec3 x0(0, 0, 300.0);
  DepthMap d(24, 32);
  for (int v = 0; v < 24; ++v) {
    for (int u = 0; u < 32; ++u) {
      const Vec3 ray = back_project(Pixel{double(u), double(v)}, 1.0, c);
      d.depth(v, u) = n.dot(x0) / n.dot(ray);
    }
  }
  const auto tris = triangulate_depth_map(d, c);
  EXPECT_EQ(tris.size(), 2u * 23 * 31);
  for (const auto& t : tris) {
    const Vec3 tn = (t.b - t.a).cross(t.c - t.a).normalized();
    EXPECT_LT(std::min((tn - n).norm(), (tn + n).norm()), 1e-6);
  }
}

TEST(Triangulate, StepEdgeIsNotBridged) {
  const Camera c = ramvs::test::pinhole(80.0, 15.5, 11.5);
  DepthMap d(24, 32, 500.0);
  d.depth.rightCols(16) = 600.0;
  for (const auto& t : triangulate_depth_map(d, c)) {
    const double zmin = std::min({t.a.z(), t.b.z(), t.c.z()});
    const double zmax = std::max({t.a.z(), t.b.z(), t.c.z()});
    EXPECT_EQ(zmin, zmax);
  }
}

TEST(BoundCheckDepthMap, SmoothMapHasNoViolations) {
  std::mt19937_64 rng(3);
  const Camera c = ramvs::test::pinhole(80.0, 39.5, 31.5);
  const BoundSummary s = bound_check_depth_map(ramvs::test::smooth_depth(rng, 32, 40), c, 16, 2.5, 2);
  EXPECT_GT(s.queries, 1000u);
  EXPECT_EQ(s.total_case_violations(), 0u);
  EXPECT_EQ(s.final_violations, 0u);
}

TEST(KdTree, MatchesBruteForce) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> uni(-5.0, 5.0);
  std::vector<Vec3> pts(2000);
  for (auto& p : pts) p = Vec3(uni(rng), uni(rng), uni(rng));
  pts[7] = pts[1500];
  const KdTree tree(pts);
  for (int i = 0; i < 500; ++i) {
    const Vec3 q(uni(rng), uni(rng), uni(rng));
    double best = 1e300;
    std::size_t bi = 0;
    for (std::size_t k = 0; k < pts.size(); ++k) {
      const double d = (q - pts[k]).norm();
      if (d < best) {
        best = d;
        bi = k;
      }
    }
    std::size_t idx = 0;
    EXPECT_NEAR(tree.nearest_distance(q, &idx), best, 1e-12);
    EXPECT_EQ(idx, bi);
  }
  std::size_t idx = 0;
  tree.nearest_distance(pts[1500], &idx);
  EXPECT_EQ(idx, 7u);
  EXPECT_THROW(KdTree({}).nearest_distance(Vec3::Zero()), Error);
}

TEST(Evaluate, IdentityCloud) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> uni(-5.0, 5.0);
  PointCloud c;
  for (int i = 0; i < 300; ++i) c.points.emplace_back(uni(rng), uni(rng), uni(rng));
  const EvalReport r = evaluate_point_clouds(c, c, 10.0, 0.5);
  EXPECT_EQ(r.accuracy, 0.0);
  EXPECT_EQ(r.completeness, 0.0);
  EXPECT_EQ(r.overall, 0.0);
  EXPECT_EQ(r.f_score, 100.0);
}

TEST(Evaluate, UniformOffset) {
  PointCloud a, b;
  const Vec3 delta(0.03, -0.04, 0.0);
  for (int i = 0; i < 10; ++i) {
    for (int j = 0; j < 10; ++j) {
      a.points.emplace_back(i, j, 0.0);
      b.points.push_back(a.points.back() + delta);
    }
  }
  const EvalReport r = evaluate_point_clouds(a, b, 1.0, 0.1);
  EXPECT_NEAR(r.accuracy, 0.05, 1e-9);
  EXPECT_NEAR(r.completeness, 0.05, 1e-9);
  EXPECT_EQ(r.f_score, 100.0);
}

TEST(Evaluate, HandComputedClouds) {
  PointCloud recon, gt;
  recon.points = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(5, 0, 0)};
  gt.points = {Vec3(0, 0, 0.5), Vec3(1, 1, 0), Vec3(3, 0, 0)};
  // recon -> gt: 0.5, 1, 2; gt -> recon: 0.5, 1, 2.
  EvalReport r = evaluate_point_clouds(recon, gt, 3.0, 1.0);
  EXPECT_DOUBLE_EQ(r.accuracy, 3.5 / 3.0);
  EXPECT_DOUBLE_EQ(r.completeness, 3.5 / 3.0);
  EXPECT_DOUBLE_EQ(r.overall, 3.5 / 3.0);
  EXPECT_DOUBLE_EQ(r.precision, 100.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.recall, 100.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.f_score, 100.0 / 3.0);
  r = evaluate_point_clouds(recon, gt, 1.5, 1.0);
  EXPECT_DOUBLE_EQ(r.accuracy, 0.75);
  r = evaluate_point_clouds(recon, gt, 3.0, 0.25);
  EXPECT_EQ(r.f_score, 0.0);
}

TEST(Evaluate, SwapSymmetry) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  PointCloud a, b;
  for (int i = 0; i < 200; ++i) a.points.emplace_back(uni(rng), uni(rng), uni(rng));
  for (int i = 0; i < 150; ++i) b.points.emplace_back(uni(rng), uni(rng), uni(rng));
  const EvalReport r = evaluate_point_clouds(a, b, 0.5, 0.1);
  const EvalReport s = evaluate_point_clouds(b, a, 0.5, 0.1);
  EXPECT_EQ(r.accuracy, s.completeness);
  EXPECT_EQ(r.completeness, s.accuracy);
  EXPECT_EQ(r.precision, s.recall);
  EXPECT_EQ(r.recall, s.precision);
  EXPECT_NEAR(r.f_score, 2 * r.precision * r.recall / (r.precision + r.recall), 1e-12);
  EXPECT_GE(r.f_score, 0.0);
  EXPECT_LE(r.f_score, 100.0);
}

TEST(Evaluate, EmptyCloudRejected) {
  PointCloud a, b;
  b.points.emplace_back(0, 0, 0);
  try {
    evaluate_point_clouds(a, b, 1.0, 0.1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::empty_input);
  }
}
