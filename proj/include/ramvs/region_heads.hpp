#pragma once

#include "ramvs/core.hpp"
#include "ramvs/cost_volume.hpp"
#include "ramvs/geometry.hpp"
#include "ramvs/sdf_supervision.hpp"

#include <cmath>

namespace ramvs {

/// Per-pixel distribution over depth hypotheses (D x H x W).
struct ProbabilityVolume {
  Volume<double> prob;
  Mask low_confidence;  // no source view sampled any hypothesis at the pixel

  int depth() const { return prob.depth(); }
  int height() const { return prob.height(); }
  int width() const { return prob.width(); }
};

/// Signed point-to-surface distances squashed by tanh(distance / scale);
/// positive on the camera side of the surface.
struct DistanceVolume {
  Volume<double> values;
  double scale = 1.0;

  int depth() const { return values.depth(); }
  int height() const { return values.height(); }
  int width() const { return values.width(); }
  double world_distance(int d, int v, int u) const { return scale * std::atanh(values(d, v, u)); }
};

/// Separable box mean over (d, v, u) with windows clipped at the borders.
Volume<double> box_smooth(const Volume<double>& vol, int radius);

/// softmax over depth of -mean_channels(smooth(cost)) / temperature. Invalid
/// cells take the largest valid cost at their pixel before smoothing; pixels
/// with no valid cell become uniform and are flagged low-confidence.
ProbabilityVolume probability_from_cost(const CostVolume& cv, double temperature, int smoothing_radius);

/// Same transform from an already channel-averaged cost (D x H x W).
ProbabilityVolume probability_from_mean_cost(const Volume<double>& mean_cost, const ValidityVolume& valid,
                                             double temperature, int smoothing_radius);

/// Half the nominal depth extent (count * interval) swept by a stage.
double stage_distance_scale(const StageConfig& stage, double unit_interval);

/// Distance head: the soft-argmax depth of P is back-projected into a
/// provisional surface and every hypothesis point is measured against it with
/// the patch search. Low-confidence pixels get the saturating value
/// tanh(+-extent / scale) so branch fusion discards them.
DistanceVolume distance_from_provisional(const ProbabilityVolume& P, const HypothesisSet& hyps, const Camera& cam,
                                         int patch_k, double scale);

}  // namespace ramvs
