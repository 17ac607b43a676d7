#include "ramvs/core.hpp"

#include <cmath>

namespace ramvs {

const char* category_name(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::domain: return "domain";
    case ErrorCategory::behind_camera: return "behind-camera";
    case ErrorCategory::empty_surface: return "empty-surface";
    case ErrorCategory::format: return "format";
    case ErrorCategory::io: return "io";
    case ErrorCategory::insufficient_views: return "insufficient-views";
    case ErrorCategory::grid_outside_frustum: return "grid-outside-frustum";
    case ErrorCategory::degenerate: return "degenerate";
    case ErrorCategory::no_geometry: return "no-geometry";
    case ErrorCategory::empty_input: return "empty-input";
  }
  return "unknown";
}

DepthMap::DepthMap(GridXd values) : depth(std::move(values)) {
  valid = depth.unaryExpr([](double d) { return std::isfinite(d) && d > 0.0; });
}

bool DepthMap::is_valid(int v, int u) const {
  return valid(v, u) && std::isfinite(depth(v, u)) && depth(v, u) > 0.0;
}

}  // namespace ramvs
