#pragma once

#include "ramvs/core.hpp"
#include "ramvs/geometry.hpp"
#include "ramvs/region_heads.hpp"

namespace ramvs {

struct FusionConfig {
  double theta = 0.1;  // threshold on |S| in tanh space

  void validate() const;
};

struct FusionResult {
  DepthMap depth;
  Grid<int> retained;  // hypotheses kept per pixel
  Mask fallback;       // nothing retained; depth is the argmax-P hypothesis
};

/// Expected depth sum_d hyp(d) * P(d). Pixels flagged low-confidence in P are
/// marked invalid (their depth value is still the expectation).
DepthMap softargmax_depth(const ProbabilityVolume& P, const HypothesisSet& hyps);

/// Branch fusion: keep hypotheses with |S| <= theta, renormalize their
/// probability mass and take the expectation over them. When every hypothesis
/// is kept the result is bit-identical to softargmax_depth.
FusionResult fuse_branches(const ProbabilityVolume& P, const DistanceVolume& S, const HypothesisSet& hyps,
                           const FusionConfig& cfg);

/// Probability mass of the four hypotheses nearest the regressed depth,
/// zeroed where branch fusion fell back. `fallback` may be empty.
ConfidenceMap confidence_map(const ProbabilityVolume& P, const HypothesisSet& hyps, const DepthMap& depth,
                             const Mask& fallback);

}  // namespace ramvs
