#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ramvs {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// H x W maps are indexed (row v, column u).
template <typename T>
using Grid = Eigen::Array<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using GridXd = Grid<double>;
using Mask = Grid<bool>;

enum class ErrorCategory {
  domain,
  behind_camera,
  empty_surface,
  format,
  io,
  insufficient_views,
  grid_outside_frustum,
  degenerate,
  no_geometry,
  empty_input,
};

const char* category_name(ErrorCategory c);

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const { return category_; }

 private:
  ErrorCategory category_;
};

/// Dense D x H x W volume stored slice-major; each depth slice is a
/// contiguous row-major H x W block that can be viewed as an Eigen array.
template <typename T>
class Volume {
 public:
  using SliceMap = Eigen::Map<Grid<T>>;
  using ConstSliceMap = Eigen::Map<const Grid<T>>;

  Volume() = default;
  Volume(int depth, int height, int width, T fill = T{})
      : depth_(depth), height_(height), width_(width),
        data_(static_cast<std::size_t>(depth) * height * width, fill) {}

  int depth() const { return depth_; }
  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::size_t index(int d, int v, int u) const {
    return (static_cast<std::size_t>(d) * height_ + v) * width_ + u;
  }
  T& operator()(int d, int v, int u) { return data_[index(d, v, u)]; }
  const T& operator()(int d, int v, int u) const { return data_[index(d, v, u)]; }

  SliceMap slice(int d) { return SliceMap(data_.data() + index(d, 0, 0), height_, width_); }
  ConstSliceMap slice(int d) const {
    return ConstSliceMap(data_.data() + index(d, 0, 0), height_, width_);
  }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }

  bool same_shape(const Volume& other) const {
    return depth_ == other.depth_ && height_ == other.height_ && width_ == other.width_;
  }
  template <typename U>
  bool same_shape(const Volume<U>& other) const {
    return depth_ == other.depth() && height_ == other.height() && width_ == other.width();
  }

 private:
  int depth_ = 0;
  int height_ = 0;
  int width_ = 0;
  std::vector<T> data_;
};

// std::vector<bool> is avoided for validity volumes.
using ValidityVolume = Volume<std::uint8_t>;

/// Per-pixel depth in world units with a validity mask.
struct DepthMap {
  GridXd depth;
  Mask valid;

  DepthMap() = default;
  DepthMap(int height, int width, double fill = 0.0)
      : depth(GridXd::Constant(height, width, fill)), valid(Mask::Constant(height, width, true)) {}
  explicit DepthMap(GridXd values);

  int height() const { return static_cast<int>(depth.rows()); }
  int width() const { return static_cast<int>(depth.cols()); }
  bool is_valid(int v, int u) const;
};

using ConfidenceMap = GridXd;

}  // namespace ramvs
