#include "ramvs/fusion.hpp"

#include <algorithm>
#include <cmath>

namespace ramvs {

void FusionConfig::validate() const {
  if (!(theta > 0.0) || theta > 1.0) throw Error(ErrorCategory::domain, "theta must lie in (0, 1]");
}

namespace {

void check_shapes(const ProbabilityVolume& P, const HypothesisSet& hyps) {
  if (hyps.count() != P.depth() || hyps.height() != P.height() || hyps.width() != P.width()) {
    throw Error(ErrorCategory::domain, "probability volume and hypotheses differ in shape");
  }
}

double expectation(const ProbabilityVolume& P, const HypothesisSet& hyps, int v, int u) {
  double acc = 0.0;
  for (int d = 0; d < P.depth(); ++d) acc += hyps.at(d, v, u) * P.prob(d, v, u);
  return acc;
}

}  // namespace

DepthMap softargmax_depth(const ProbabilityVolume& P, const HypothesisSet& hyps) {
  check_shapes(P, hyps);
  DepthMap out(P.height(), P.width());
  for (int v = 0; v < P.height(); ++v) {
    for (int u = 0; u < P.width(); ++u) {
      out.depth(v, u) = expectation(P, hyps, v, u);
      out.valid(v, u) = P.low_confidence.size() == 0 || !P.low_confidence(v, u);
    }
  }
  return out;
}

FusionResult fuse_branches(const ProbabilityVolume& P, const DistanceVolume& S, const HypothesisSet& hyps,
                           const FusionConfig& cfg) {
  cfg.validate();
  check_shapes(P, hyps);
  if (!S.values.same_shape(P.prob)) throw Error(ErrorCategory::domain, "distance and probability volumes differ in shape");
  const int nd = P.depth();
  const int h = P.height();
  const int w = P.width();
  FusionResult out{DepthMap(h, w), Grid<int>::Zero(h, w), Mask::Constant(h, w, false)};
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      out.depth.valid(v, u) = P.low_confidence.size() == 0 || !P.low_confidence(v, u);
      int kept = 0;
      double mass = 0.0;
      double acc = 0.0;
      for (int d = 0; d < nd; ++d) {
        if (std::abs(S.values(d, v, u)) > cfg.theta) continue;
        ++kept;
        mass += P.prob(d, v, u);
        acc += hyps.at(d, v, u) * P.prob(d, v, u);
      }
      out.retained(v, u) = kept;
      if (kept == nd) {
        out.depth.depth(v, u) = expectation(P, hyps, v, u);
      } else if (kept > 0 && mass > 0.0) {
        out.depth.depth(v, u) = acc / mass;
      } else {
        int best = 0;
        for (int d = 1; d < nd; ++d) {
          if (P.prob(d, v, u) > P.prob(best, v, u)) best = d;
        }
        out.depth.depth(v, u) = hyps.at(best, v, u);
        out.fallback(v, u) = true;
      }
    }
  }
  return out;
}

ConfidenceMap confidence_map(const ProbabilityVolume& P, const HypothesisSet& hyps, const DepthMap& depth,
                             const Mask& fallback) {
  check_shapes(P, hyps);
  const int nd = P.depth();
  const int window = std::min(4, nd);
  ConfidenceMap out = ConfidenceMap::Zero(P.height(), P.width());
  for (int v = 0; v < P.height(); ++v) {
    for (int u = 0; u < P.width(); ++u) {
      const double z = depth.depth(v, u);
      // Hypotheses are sorted, so the nearest `window` form a contiguous run.
      int lo = 0;
      int hi = nd - 1;
      while (hi - lo + 1 > window) {
        if (std::abs(hyps.at(lo, v, u) - z) > std::abs(hyps.at(hi, v, u) - z)) {
          ++lo;
        } else {
          --hi;
        }
      }
      double mass = 0.0;
      for (int d = lo; d <= hi; ++d) mass += P.prob(d, v, u);
      if (fallback.size() != 0 && fallback(v, u)) mass = 0.0;
      out(v, u) = std::clamp(mass, 0.0, 1.0);
    }
  }
  return out;
}

}  // namespace ramvs
