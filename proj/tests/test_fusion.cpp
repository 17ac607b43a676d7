#include "ramvs/fusion.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

using namespace ramvs;

namespace {

ProbabilityVolume random_probability(std::mt19937_64& rng, int d, int h, int w) {
  ProbabilityVolume P{ramvs::test::random_volume(rng, d, h, w, 0.0, 1.0), Mask::Constant(h, w, false)};
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      double s = 0.0;
      for (int k = 0; k < d; ++k) s += P.prob(k, v, u);
      for (int k = 0; k < d; ++k) P.prob(k, v, u) /= s;
    }
  }
  return P;
}

HypothesisSet random_hypotheses(std::mt19937_64& rng, int d, int h, int w) {
  std::uniform_real_distribution<double> start(400.0, 800.0), step(0.5, 5.0);
  Volume<double> depths(d, h, w);
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      double z = start(rng);
      for (int k = 0; k < d; ++k) {
        depths(k, v, u) = z;
        z += step(rng);
      }
    }
  }
  return HypothesisSet::per_pixel(std::move(depths));
}

DistanceVolume random_distance(std::mt19937_64& rng, int d, int h, int w) {
  return DistanceVolume{ramvs::test::random_volume(rng, d, h, w, -0.999, 0.999), 1.0};
}

}  // namespace

TEST(SoftArgmax, OneHotAndUniform) {
  const HypothesisSet h = HypothesisSet::global({10.0, 20.0, 30.0, 40.0}, 2, 2);
  ProbabilityVolume P{Volume<double>(4, 2, 2, 0.0), Mask::Constant(2, 2, false)};
  for (int v = 0; v < 2; ++v) {
    for (int u = 0; u < 2; ++u) P.prob(2, v, u) = 1.0;
  }
  EXPECT_TRUE((softargmax_depth(P, h).depth == 30.0).all());
  const ProbabilityVolume U{Volume<double>(4, 2, 2, 0.25), Mask::Constant(2, 2, false)};
  const DepthMap m = softargmax_depth(U, h);
  EXPECT_TRUE((m.depth == 25.0).all());
  EXPECT_TRUE(m.valid.all());
}

TEST(SoftArgmax, MatchesScalarLoop) {
  std::mt19937_64 rng(1);
  const ProbabilityVolume P = random_probability(rng, 16, 5, 6);
  const HypothesisSet h = random_hypotheses(rng, 16, 5, 6);
  const DepthMap m = softargmax_depth(P, h);
  for (int v = 0; v < 5; ++v) {
    for (int u = 0; u < 6; ++u) {
      double acc = 0.0;
      for (int d = 0; d < 16; ++d) acc += P.prob(d, v, u) * h.at(d, v, u);
      EXPECT_NEAR(m.depth(v, u), acc, 1e-9);
    }
  }
}

TEST(SoftArgmax, LowConfidenceIsInvalid) {
  ProbabilityVolume P{Volume<double>(2, 1, 2, 0.5), Mask::Constant(1, 2, false)};
  P.low_confidence(0, 1) = true;
  const DepthMap m = softargmax_depth(P, HypothesisSet::global({1.0, 3.0}, 1, 2));
  EXPECT_TRUE(m.is_valid(0, 0));
  EXPECT_FALSE(m.is_valid(0, 1));
}

TEST(FuseBranches, ThetaOneEqualsSoftArgmax) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const ProbabilityVolume P = random_probability(rng, 16, 4, 5);
    const HypothesisSet h = random_hypotheses(rng, 16, 4, 5);
    const FusionResult r = fuse_branches(P, random_distance(rng, 16, 4, 5), h, FusionConfig{1.0});
    const DepthMap s = softargmax_depth(P, h);
    ASSERT_TRUE((r.depth.depth == s.depth).all());
    ASSERT_TRUE((r.retained == 16).all());
    ASSERT_FALSE(r.fallback.any());
  }
}

TEST(FuseBranches, TwoHypothesisExample) {
  const HypothesisSet h = HypothesisSet::global({100.0, 110.0}, 1, 1);
  ProbabilityVolume P{Volume<double>(2, 1, 1, 0.5), Mask::Constant(1, 1, false)};
  DistanceVolume S{Volume<double>(2, 1, 1), 1.0};
  S.values(0, 0, 0) = 0.0;
  S.values(1, 0, 0) = 0.9;
  const FusionResult r = fuse_branches(P, S, h, FusionConfig{0.1});
  EXPECT_DOUBLE_EQ(r.depth.depth(0, 0), 100.0);
  EXPECT_EQ(r.retained(0, 0), 1);
  EXPECT_FALSE(r.fallback(0, 0));
}

TEST(FuseBranches, MatchesNaiveLoopAndStaysInRetainedRange) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const ProbabilityVolume P = random_probability(rng, 16, 4, 4);
    const HypothesisSet h = random_hypotheses(rng, 16, 4, 4);
    const DistanceVolume S = random_distance(rng, 16, 4, 4);
    const double theta = 0.5;
    const FusionResult r = fuse_branches(P, S, h, FusionConfig{theta});
    for (int v = 0; v < 4; ++v) {
      for (int u = 0; u < 4; ++u) {
        double mass = 0.0, acc = 0.0, lo = 1e300, hi = -1e300;
        int kept = 0;
        for (int d = 0; d < 16; ++d) {
          if (std::abs(S.values(d, v, u)) > theta) continue;
          mass += P.prob(d, v, u);
          acc += P.prob(d, v, u) * h.at(d, v, u);
          lo = std::min(lo, h.at(d, v, u));
          hi = std::max(hi, h.at(d, v, u));
          ++kept;
        }
        EXPECT_EQ(r.retained(v, u), kept);
        if (kept == 0) {
          EXPECT_TRUE(r.fallback(v, u));
          continue;
        }
        EXPECT_NEAR(r.depth.depth(v, u), acc / mass, 1e-9);
        EXPECT_GE(r.depth.depth(v, u), lo - 1e-9);
        EXPECT_LE(r.depth.depth(v, u), hi + 1e-9);
      }
    }
  }
}

TEST(FuseBranches, RetentionMonotoneInTheta) {
  std::mt19937_64 rng(4);
  const ProbabilityVolume P = random_probability(rng, 16, 6, 6);
  const HypothesisSet h = random_hypotheses(rng, 16, 6, 6);
  const DistanceVolume S = random_distance(rng, 16, 6, 6);
  Grid<int> prev = fuse_branches(P, S, h, FusionConfig{1.0}).retained;
  for (double theta = 0.95; theta > 0.0; theta -= 0.05) {
    const Grid<int> cur = fuse_branches(P, S, h, FusionConfig{theta}).retained;
    ASSERT_TRUE((cur <= prev).all());
    prev = cur;
  }
}

TEST(FuseBranches, FallbackIsArgmaxHypothesis) {
  const HypothesisSet h = HypothesisSet::global({10.0, 20.0, 30.0}, 1, 1);
  ProbabilityVolume P{Volume<double>(3, 1, 1), Mask::Constant(1, 1, false)};
  P.prob(0, 0, 0) = 0.2;
  P.prob(1, 0, 0) = 0.5;
  P.prob(2, 0, 0) = 0.3;
  const DistanceVolume S{Volume<double>(3, 1, 1, 0.8), 1.0};
  const FusionResult r = fuse_branches(P, S, h, FusionConfig{0.1});
  EXPECT_TRUE(r.fallback(0, 0));
  EXPECT_DOUBLE_EQ(r.depth.depth(0, 0), 20.0);
  EXPECT_DOUBLE_EQ(confidence_map(P, h, r.depth, r.fallback)(0, 0), 0.0);
  EXPECT_THROW(fuse_branches(P, S, h, FusionConfig{0.0}), Error);
  EXPECT_THROW(fuse_branches(P, S, h, FusionConfig{1.5}), Error);
}

TEST(Confidence, OneHotAndUniform) {
  std::vector<double> planes;
  for (int i = 0; i < 64; ++i) planes.push_back(100.0 + i);
  const HypothesisSet h = HypothesisSet::global(planes, 2, 2);
  ProbabilityVolume P{Volume<double>(64, 2, 2, 0.0), Mask::Constant(2, 2, false)};
  for (int v = 0; v < 2; ++v) {
    for (int u = 0; u < 2; ++u) P.prob(10, v, u) = 1.0;
  }
  EXPECT_TRUE((confidence_map(P, h, softargmax_depth(P, h), Mask()) == 1.0).all());
  const ProbabilityVolume U{Volume<double>(64, 2, 2, 1.0 / 64), Mask::Constant(2, 2, false)};
  const ConfidenceMap c = confidence_map(U, h, softargmax_depth(U, h), Mask());
  for (double x : c.reshaped()) EXPECT_NEAR(x, 4.0 / 64.0, 1e-15);
}

TEST(Confidence, MatchesScalarReference) {
  std::mt19937_64 rng(5);
  const ProbabilityVolume P = random_probability(rng, 16, 5, 5);
  const HypothesisSet h = random_hypotheses(rng, 16, 5, 5);
  const DepthMap depth = softargmax_depth(P, h);
  const ConfidenceMap c = confidence_map(P, h, depth, Mask());
  for (int v = 0; v < 5; ++v) {
    for (int u = 0; u < 5; ++u) {
      std::vector<std::pair<double, int>> byd;
      for (int d = 0; d < 16; ++d) byd.emplace_back(std::abs(h.at(d, v, u) - depth.depth(v, u)), d);
      std::sort(byd.begin(), byd.end());
      double mass = 0.0;
      for (int k = 0; k < 4; ++k) mass += P.prob(byd[k].second, v, u);
      EXPECT_NEAR(c(v, u), mass, 1e-9);
      EXPECT_GE(c(v, u), 0.0);
      EXPECT_LE(c(v, u), 1.0);
    }
  }
}
