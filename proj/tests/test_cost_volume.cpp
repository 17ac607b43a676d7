#include "ramvs/cost_volume.hpp"
#include "ramvs/synthetic.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <algorithm>

using namespace ramvs;

namespace {

FeatureVolume random_feature_volume(std::mt19937_64& rng, int d, int c, int h, int w, double invalid_rate) {
  std::bernoulli_distribution drop(invalid_rate);
  FeatureVolume fv;
  fv.valid = ValidityVolume(d, h, w, 1);
  for (int i = 0; i < c; ++i) fv.channels.push_back(ramvs::test::random_volume(rng, d, h, w, -2.0, 2.0));
  for (std::size_t i = 0; i < fv.valid.size(); ++i) {
    if (drop(rng)) {
      fv.valid.data()[i] = 0;
      for (auto& ch : fv.channels) ch.data()[i] = 0.0;
    }
  }
  return fv;
}

FeatureVolume as_reference(FeatureVolume fv) {
  std::fill(fv.valid.data().begin(), fv.valid.data().end(), std::uint8_t{1});
  return fv;
}

}  // namespace

TEST(Features, ConstantImageGivesZeroChannels) {
  const FeatureMap f = extract_features(GridXd::Constant(8, 10, 0.4), 1);
  ASSERT_EQ(f.channel_count(), 3);
  for (const auto& ch : f.channels) EXPECT_TRUE((ch == 0.0).all());
}

TEST(Features, VerticalStepEdgeBand) {
  GridXd img = GridXd::Zero(6, 10);
  img.rightCols(5) = 1.0;
  const FeatureMap f = extract_features(img, 1);
  for (int v = 0; v < 6; ++v) {
    for (int u = 0; u < 10; ++u) {
      if (u == 4 || u == 5) {
        EXPECT_GT(f.channels[1](v, u), 0.0);
      } else {
        EXPECT_EQ(f.channels[1](v, u), 0.0);
      }
      EXPECT_EQ(f.channels[2](v, u), 0.0);
    }
  }
}

TEST(Features, MatchesScalarReference) {
  std::mt19937_64 rng(2);
  const GridXd img = ramvs::test::random_grid(rng, 16, 16);
  const FeatureMap f = extract_features(img, 1);
  double mean = 0.0;
  for (int v = 0; v < 16; ++v) {
    for (int u = 0; u < 16; ++u) mean += img(v, u);
  }
  mean /= 256.0;
  double var = 0.0;
  for (int v = 0; v < 16; ++v) {
    for (int u = 0; u < 16; ++u) var += (img(v, u) - mean) * (img(v, u) - mean);
  }
  const double sd = std::sqrt(var / 256.0);
  const auto n = [&](int v, int u) { return (img(std::clamp(v, 0, 15), std::clamp(u, 0, 15)) - mean) / sd; };
  for (int v = 0; v < 16; ++v) {
    for (int u = 0; u < 16; ++u) {
      EXPECT_NEAR(f.channels[0](v, u), n(v, u), 1e-12);
      EXPECT_NEAR(f.channels[1](v, u), 0.5 * (n(v, u + 1) - n(v, u - 1)), 1e-12);
      EXPECT_NEAR(f.channels[2](v, u), 0.5 * (n(v + 1, u) - n(v - 1, u)), 1e-12);
    }
  }
}

TEST(Features, AreaDownsample) {
  GridXd img(4, 4);
  img << 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16;
  const GridXd small = area_downsample(img, 2);
  ASSERT_EQ(small.rows(), 2);
  EXPECT_DOUBLE_EQ(small(0, 0), 3.5);
  EXPECT_DOUBLE_EQ(small(1, 1), 13.5);
  EXPECT_THROW(area_downsample(img, 0), Error);
}

TEST(FeatureVolume, IdenticalCamerasReplicateSource) {
  std::mt19937_64 rng(4);
  const FeatureMap f = extract_features(ramvs::test::random_grid(rng, 12, 14), 1);
  const Camera cam = ramvs::test::pinhole(20.0, 6.5, 5.5);
  const HypothesisSet h = HypothesisSet::global({10.0, 20.0, 30.0}, 12, 14);
  const FeatureVolume fv = build_feature_volume(f, cam, cam, h);
  for (int d = 0; d < 3; ++d) {
    for (int v = 0; v < 12; ++v) {
      for (int u = 0; u < 14; ++u) {
        ASSERT_TRUE(fv.valid(d, v, u));
        for (int c = 0; c < 3; ++c) EXPECT_NEAR(fv.channels[c](d, v, u), f.channels[c](v, u), 1e-9);
      }
    }
  }
}

TEST(FeatureVolume, DisjointFrustaAreAllInvalid) {
  std::mt19937_64 rng(4);
  const FeatureMap f = extract_features(ramvs::test::random_grid(rng, 8, 8), 1);
  const Camera ref = ramvs::test::pinhole(10.0, 3.5, 3.5);
  Camera src = ref;
  src.translation = Vec3(1000.0, 0.0, 0.0);
  const FeatureVolume fv = build_feature_volume(f, ref, src, HypothesisSet::global({5.0, 6.0}, 8, 8));
  for (auto x : fv.valid.data()) EXPECT_EQ(x, 0);
  for (const auto& ch : fv.channels) {
    for (double x : ch.data()) EXPECT_EQ(x, 0.0);
  }
}

TEST(Cost, IdenticalViewsGiveZero) {
  std::mt19937_64 rng(8);
  const FeatureVolume ref = as_reference(random_feature_volume(rng, 4, 3, 5, 6, 0.0));
  const std::vector<FeatureVolume> srcs = {ref, ref, ref};
  const CostVolume cv = aggregate_cost(ref, srcs);
  EXPECT_EQ(cv.view_count, 4);
  for (const auto& ch : cv.channels) {
    for (double x : ch.data()) EXPECT_EQ(x, 0.0);
  }
}

TEST(Cost, MatchesNaiveLoop) {
  std::mt19937_64 rng(9);
  const int D = 8, H = 6, W = 4, C = 3;
  const FeatureVolume ref = as_reference(random_feature_volume(rng, D, C, H, W, 0.0));
  std::vector<FeatureVolume> srcs;
  for (int i = 0; i < 3; ++i) srcs.push_back(random_feature_volume(rng, D, C, H, W, 0.3));
  std::vector<ViewWeightMap> weights(3);
  for (auto& m : weights) m.weights = ramvs::test::random_volume(rng, D, H, W, 0.2, 2.0);
  const CostVolume cv = aggregate_cost(ref, srcs, weights);
  for (int c = 0; c < C; ++c) {
    for (int d = 0; d < D; ++d) {
      for (int v = 0; v < H; ++v) {
        for (int u = 0; u < W; ++u) {
          double acc = 0.0;
          int n = 0;
          for (int i = 0; i < 3; ++i) {
            if (!srcs[i].valid(d, v, u)) continue;
            const double r = srcs[i].channels[c](d, v, u) - ref.channels[c](d, v, u);
            acc += weights[i].weights(d, v, u) * r * r;
            ++n;
          }
          const double expected = n ? acc / n : 0.0;
          EXPECT_NEAR(cv.channels[c](d, v, u), expected, 1e-10);
          EXPECT_EQ(cv.valid(d, v, u) != 0, n > 0);
        }
      }
    }
  }
}

TEST(Cost, PermutationInvariantExactly) {
  std::mt19937_64 rng(10);
  const FeatureVolume ref = as_reference(random_feature_volume(rng, 5, 3, 7, 6, 0.0));
  std::vector<FeatureVolume> srcs;
  for (int i = 0; i < 4; ++i) srcs.push_back(random_feature_volume(rng, 5, 3, 7, 6, 0.2));
  const CostVolume a = aggregate_cost(ref, srcs);
  std::vector<int> order = {0, 1, 2, 3};
  while (std::next_permutation(order.begin(), order.end())) {
    std::vector<FeatureVolume> perm;
    for (int i : order) perm.push_back(srcs[i]);
    const CostVolume b = aggregate_cost(ref, perm);
    for (int c = 0; c < 3; ++c) {
      ASSERT_TRUE(std::equal(a.channels[c].data().begin(), a.channels[c].data().end(), b.channels[c].data().begin()));
    }
  }
}

TEST(Cost, NonNegativeAndQuadraticInScale) {
  std::mt19937_64 rng(12);
  FeatureVolume ref = as_reference(random_feature_volume(rng, 4, 3, 5, 5, 0.0));
  std::vector<FeatureVolume> srcs;
  for (int i = 0; i < 3; ++i) srcs.push_back(random_feature_volume(rng, 4, 3, 5, 5, 0.25));
  const CostVolume a = aggregate_cost(ref, srcs);
  for (const auto& ch : a.channels) {
    for (double x : ch.data()) EXPECT_GE(x, 0.0);
  }
  const double k = 3.7;
  for (auto& ch : ref.channels) {
    for (double& x : ch.data()) x *= k;
  }
  for (auto& s : srcs) {
    for (auto& ch : s.channels) {
      for (double& x : ch.data()) x *= k;
    }
  }
  const CostVolume b = aggregate_cost(ref, srcs);
  for (int c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < a.channels[c].size(); ++i) {
      EXPECT_NEAR(b.channels[c].data()[i], k * k * a.channels[c].data()[i], 1e-9);
    }
  }
}

TEST(Cost, NoValidViewIsZeroAndInvalid) {
  std::mt19937_64 rng(13);
  const FeatureVolume ref = as_reference(random_feature_volume(rng, 2, 3, 2, 2, 0.0));
  FeatureVolume src = random_feature_volume(rng, 2, 3, 2, 2, 1.0);
  const std::vector<FeatureVolume> srcs = {src};
  const CostVolume cv = aggregate_cost(ref, srcs);
  for (auto x : cv.valid.data()) EXPECT_EQ(x, 0);
  const Volume<double> mean = cv.channel_mean();
  for (double x : mean.data()) EXPECT_EQ(x, 0.0);
}

TEST(ViewWeights, UniformIsOnes) {
  std::mt19937_64 rng(14);
  const FeatureVolume ref = as_reference(random_feature_volume(rng, 3, 3, 4, 4, 0.0));
  const std::vector<FeatureVolume> srcs = {random_feature_volume(rng, 3, 3, 4, 4, 0.0)};
  for (const auto& m : compute_view_weights(ref, srcs, WeightMode::uniform)) {
    for (double x : m.weights.data()) EXPECT_EQ(x, 1.0);
  }
}

TEST(ViewWeights, SimilarityFavorsMatchingView) {
  std::mt19937_64 rng(15);
  const FeatureVolume ref = as_reference(random_feature_volume(rng, 3, 3, 4, 5, 0.0));
  const std::vector<FeatureVolume> srcs = {ref, as_reference(random_feature_volume(rng, 3, 3, 4, 5, 0.0))};
  const auto w = compute_view_weights(ref, srcs, WeightMode::similarity);
  for (int v = 0; v < 4; ++v) {
    for (int u = 0; u < 5; ++u) {
      EXPECT_GT(w[0].at(0, v, u), w[1].at(0, v, u));
      EXPECT_NEAR(w[0].at(0, v, u) + w[1].at(0, v, u), 2.0, 1e-12);
    }
  }
}

TEST(ViewWeights, IdenticalSourcesGiveOnes) {
  std::mt19937_64 rng(16);
  const FeatureVolume ref = as_reference(random_feature_volume(rng, 3, 3, 4, 5, 0.0));
  const FeatureVolume s = as_reference(random_feature_volume(rng, 3, 3, 4, 5, 0.0));
  const std::vector<FeatureVolume> srcs = {s, s, s};
  for (const auto& m : compute_view_weights(ref, srcs, WeightMode::similarity)) {
    for (double x : m.weights.data()) EXPECT_NEAR(x, 1.0, 1e-12);
  }
}

TEST(Cost, FrontoPlaneArgminAtTrueDepth) {
  SceneSpec spec;
  spec.kind = SceneKind::fronto;
  spec.height = 64;
  spec.width = 80;
  spec.focal = 320.0;
  const SyntheticScene scene = render_synthetic_scene(spec);
  const double z = 600.0;
  std::vector<double> planes;
  for (int i = -8; i <= 8; ++i) planes.push_back(z + 8.0 * i + 0.5);
  const HypothesisSet h = HypothesisSet::global(planes, 64, 80);
  const FeatureMap fref = extract_features(scene.images[0], 1);
  const FeatureVolume ref = reference_feature_volume(fref, h.count());
  std::vector<FeatureVolume> srcs;
  for (int i = 1; i < 5; ++i) {
    srcs.push_back(build_feature_volume(extract_features(scene.images[i], 1), scene.cameras[0], scene.cameras[i], h));
  }
  const Volume<double> cost = aggregate_cost(ref, srcs).channel_mean();
  int good = 0, total = 0;
  for (int v = 4; v < 60; ++v) {
    for (int u = 4; u < 76; ++u) {
      int best = 0;
      for (int d = 1; d < h.count(); ++d) {
        if (cost(d, v, u) < cost(best, v, u)) best = d;
      }
      good += best == 8;
      ++total;
    }
  }
  EXPECT_GE(static_cast<double>(good) / total, 0.99);
}
