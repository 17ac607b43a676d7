#pragma once

#include "ramvs/core.hpp"
#include "ramvs/cost_volume.hpp"
#include "ramvs/fusion.hpp"
#include "ramvs/geometry.hpp"
#include "ramvs/reconstruct.hpp"
#include "ramvs/region_heads.hpp"

#include <span>
#include <vector>

namespace ramvs {

struct PipelineConfig {
  std::vector<StageConfig> stages = {{64, 4.0, 4}, {32, 2.0, 2}, {8, 1.0, 1}};
  double theta = 0.1;
  double lambda = 0.1;
  int patch_k = 5;
  int n_views = 5;
  FilterThresholds filter;
  bool fusion = true;
  double temperature = 0.05;
  int smoothing_radius = 1;
  WeightMode weights = WeightMode::similarity;

  /// Throws Error(domain) on an invalid setting.
  void validate() const;
};

struct StageOutput {
  Camera camera;  // intrinsics scaled to the stage resolution
  HypothesisSet hypotheses;
  ProbabilityVolume probability;
  DistanceVolume distance;
  DepthMap depth;
  Mask fallback;  // empty when fusion is disabled
  ConfidenceMap confidence;
};

struct DepthEstimate {
  DepthMap depth;
  ConfidenceMap confidence;
  std::vector<StageOutput> stages;  // filled when requested
};

/// Cascade depth estimation for one reference view. Images are grayscale and
/// share the reference resolution; the first n_views - 1 sources are used.
DepthEstimate estimate_depth(const GridXd& ref_image, const Camera& ref_cam, std::span<const GridXd> src_images,
                             std::span<const Camera> src_cams, const PipelineConfig& cfg, bool keep_stages = false);

}  // namespace ramvs
