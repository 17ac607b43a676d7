#include "ramvs/pipeline.hpp"

#include <algorithm>
#include <cmath>

namespace ramvs {

void PipelineConfig::validate() const {
  if (stages.empty()) throw Error(ErrorCategory::domain, "at least one cascade stage is required");
  for (const StageConfig& s : stages) {
    if (s.hypothesis_count < 2) throw Error(ErrorCategory::domain, "hypothesis counts must be at least 2");
    if (!(s.interval_multiplier > 0.0)) throw Error(ErrorCategory::domain, "interval multipliers must be positive");
    if (s.resolution_divisor < 1) throw Error(ErrorCategory::domain, "resolution divisors must be at least 1");
  }
  FusionConfig{theta}.validate();
  if (!(lambda >= 0.0)) throw Error(ErrorCategory::domain, "lambda must be non-negative");
  SearchConfig{patch_k}.validate();
  if (n_views < 2) throw Error(ErrorCategory::domain, "n_views must be at least 2");
  if (!(temperature > 0.0)) throw Error(ErrorCategory::domain, "temperature must be positive");
  if (smoothing_radius < 0) throw Error(ErrorCategory::domain, "smoothing radius must be non-negative");
  if (!(filter.eps_px > 0.0) || !(filter.eps_rel > 0.0) || filter.min_views < 1 || !(filter.min_conf >= 0.0)) {
    throw Error(ErrorCategory::domain, "invalid consistency-filter thresholds");
  }
}

DepthEstimate estimate_depth(const GridXd& ref_image, const Camera& ref_cam, std::span<const GridXd> src_images,
                             std::span<const Camera> src_cams, const PipelineConfig& cfg, bool keep_stages) {
  cfg.validate();
  ref_cam.validate();
  if (src_images.size() != src_cams.size()) throw Error(ErrorCategory::domain, "source images and cameras differ in count");
  const std::size_t n_src = std::min(src_images.size(), static_cast<std::size_t>(cfg.n_views - 1));
  if (n_src == 0) throw Error(ErrorCategory::insufficient_views, "no source views");
  for (std::size_t i = 0; i < n_src; ++i) {
    src_cams[i].validate();
    if (src_images[i].rows() != ref_image.rows() || src_images[i].cols() != ref_image.cols()) {
      throw Error(ErrorCategory::domain, "source image size differs from the reference image");
    }
  }

  const double unit = ref_cam.depth_interval;
  const DepthRange range = global_range(ref_cam, cfg.stages.front());
  DepthEstimate out;
  DepthMap prev;
  for (std::size_t s = 0; s < cfg.stages.size(); ++s) {
    const StageConfig& stage = cfg.stages[s];
    const int div = stage.resolution_divisor;
    const Camera cam = ref_cam.scaled(div);
    const FeatureMap feat_ref = extract_features(ref_image, div);
    const int h = feat_ref.height();
    const int w = feat_ref.width();

    HypothesisSet hyps = sample_hypotheses(static_cast<int>(s) + 1, stage, unit, range, h, w, s ? &prev : nullptr);
    const FeatureVolume ref_vol = reference_feature_volume(feat_ref, hyps.count());
    std::vector<FeatureVolume> src_vols;
    src_vols.reserve(n_src);
    for (std::size_t i = 0; i < n_src; ++i) {
      src_vols.push_back(build_feature_volume(extract_features(src_images[i], div), cam, src_cams[i].scaled(div), hyps));
    }
    const std::vector<ViewWeightMap> weights = compute_view_weights(ref_vol, src_vols, cfg.weights);
    ProbabilityVolume P =
        probability_from_cost(aggregate_cost(ref_vol, src_vols, weights), cfg.temperature, cfg.smoothing_radius);
    DistanceVolume S = distance_from_provisional(P, hyps, cam, cfg.patch_k, stage_distance_scale(stage, unit));

    DepthMap depth;
    Mask fallback;
    if (cfg.fusion) {
      FusionResult fused = fuse_branches(P, S, hyps, FusionConfig{cfg.theta});
      depth = std::move(fused.depth);
      fallback = std::move(fused.fallback);
    } else {
      depth = softargmax_depth(P, hyps);
    }
    ConfidenceMap conf = confidence_map(P, hyps, depth, fallback);

    prev = depth;
    if (s + 1 == cfg.stages.size()) {
      out.depth = depth;
      out.confidence = conf;
    }
    if (keep_stages) {
      out.stages.push_back(StageOutput{cam, std::move(hyps), std::move(P), std::move(S), std::move(depth),
                                       std::move(fallback), std::move(conf)});
    }
  }
  return out;
}

}  // namespace ramvs
