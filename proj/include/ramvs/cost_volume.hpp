#pragma once

#include "ramvs/core.hpp"
#include "ramvs/geometry.hpp"

#include <span>
#include <vector>

namespace ramvs {

/// Fixed per-pixel descriptors at one stage resolution: normalized intensity,
/// horizontal gradient and vertical gradient.
struct FeatureMap {
  std::vector<GridXd> channels;

  int channel_count() const { return static_cast<int>(channels.size()); }
  int height() const { return channels.empty() ? 0 : static_cast<int>(channels.front().rows()); }
  int width() const { return channels.empty() ? 0 : static_cast<int>(channels.front().cols()); }
};

/// Warped features, D x C x H x W, stored one D x H x W volume per channel.
/// Invalid cells hold 0.
struct FeatureVolume {
  std::vector<Volume<double>> channels;
  ValidityVolume valid;

  int depth() const { return valid.depth(); }
  int channel_count() const { return static_cast<int>(channels.size()); }
  int height() const { return valid.height(); }
  int width() const { return valid.width(); }
};

struct CostVolume {
  std::vector<Volume<double>> channels;  // aggregated squared residuals
  ValidityVolume valid;                  // at least one source view sampled the cell
  int view_count = 0;                    // N, reference included

  int depth() const { return valid.depth(); }
  int channel_count() const { return static_cast<int>(channels.size()); }
  int height() const { return valid.height(); }
  int width() const { return valid.width(); }

  /// Mean over channels at each (d, v, u).
  Volume<double> channel_mean() const;
};

/// Per source view weights, either D x H x W or broadcast over depth (depth 1).
struct ViewWeightMap {
  Volume<double> weights;

  double at(int d, int v, int u) const { return weights.depth() == 1 ? weights(0, v, u) : weights(d, v, u); }
};

enum class WeightMode { uniform, similarity };

GridXd area_downsample(const GridXd& image, int divisor);

GridXd to_grayscale(const GridXd& r, const GridXd& g, const GridXd& b);

/// Features of a grayscale image at 1/divisor resolution. The intensity channel
/// is mean-centered and divided by its standard deviation (floored at 1e-6);
/// gradients are central differences of that channel with clamped borders.
FeatureMap extract_features(const GridXd& image, int divisor);

/// Bilinear sample; the caller guarantees the coordinate is inside the image.
double sample_bilinear(const GridXd& map, double u, double v);

FeatureVolume reference_feature_volume(const FeatureMap& feat_ref, int depth_count);

FeatureVolume build_feature_volume(const FeatureMap& feat_src, const Camera& cam_ref, const Camera& cam_src,
                                   const HypothesisSet& hyps);

/// Weighted mean of squared feature residuals over the source views that
/// sampled each cell. Per-cell terms are summed in sorted order so the result
/// does not depend on the order of `sources`. Empty `weights` means uniform.
CostVolume aggregate_cost(const FeatureVolume& ref, std::span<const FeatureVolume> sources,
                          std::span<const ViewWeightMap> weights = {});

/// One weight map per source view. `uniform` yields ones; `similarity` yields
/// exp(-min over depth of the channel-mean squared residual), normalized so
/// the weights at each pixel average to 1 across views.
std::vector<ViewWeightMap> compute_view_weights(const FeatureVolume& ref, std::span<const FeatureVolume> sources,
                                                WeightMode mode);

}  // namespace ramvs
