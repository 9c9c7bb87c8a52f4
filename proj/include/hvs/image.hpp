#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

#include "hvs/errors.hpp"

namespace hvs {

using Index = Eigen::Index;

/// Dense height x width x channels grid stored as contiguous channel planes
/// (each plane row-major). The tag distinguishes pixel data from gradients,
/// which share a layout but not a value range.
template <typename Scalar_, typename Tag>
class Grid3 {
 public:
  using Scalar = Scalar_;
  using PlaneMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using Plane = Eigen::Map<PlaneMatrix>;
  using ConstPlane = Eigen::Map<const PlaneMatrix>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Grid3() = default;

  Grid3(Index height, Index width, Index channels = 3, Scalar fill = Scalar(0))
      : height_(height), width_(width), channels_(channels) {
    if (height <= 0 || width <= 0 || channels <= 0) {
      throw DimensionError("grid dimensions must be positive, got " + std::to_string(height) + "x" +
                           std::to_string(width) + "x" + std::to_string(channels));
    }
    data_ = Vector::Constant(height * width * channels, fill);
  }

  Index height() const { return height_; }
  Index width() const { return width_; }
  Index channels() const { return channels_; }
  Index pixel_count() const { return height_ * width_; }
  Index size() const { return data_.size(); }

  Scalar& operator()(Index row, Index col, Index ch) { return data_[(ch * height_ + row) * width_ + col]; }
  Scalar operator()(Index row, Index col, Index ch) const {
    return data_[(ch * height_ + row) * width_ + col];
  }

  Plane plane(Index ch) { return Plane(data_.data() + ch * height_ * width_, height_, width_); }
  ConstPlane plane(Index ch) const {
    return ConstPlane(data_.data() + ch * height_ * width_, height_, width_);
  }

  /// Flat planar storage, length height*width*channels.
  Vector& values() { return data_; }
  const Vector& values() const { return data_; }

  template <typename OtherScalar, typename OtherTag>
  bool same_shape(const Grid3<OtherScalar, OtherTag>& other) const {
    return height_ == other.height() && width_ == other.width() && channels_ == other.channels();
  }

  template <typename NewScalar>
  Grid3<NewScalar, Tag> cast() const {
    Grid3<NewScalar, Tag> out(height_, width_, channels_);
    out.values() = data_.template cast<NewScalar>();
    return out;
  }

  /// Reinterprets the same storage under another tag (e.g. a perturbation
  /// expressed as a gradient-shaped tensor).
  template <typename NewTag>
  Grid3<Scalar, NewTag> retag() const {
    Grid3<Scalar, NewTag> out(height_, width_, channels_);
    out.values() = data_;
    return out;
  }

  friend bool operator==(const Grid3& a, const Grid3& b) {
    return a.same_shape(b) && (a.data_.array() == b.data_.array()).all();
  }

 private:
  Index height_ = 0;
  Index width_ = 0;
  Index channels_ = 0;
  Vector data_;
};

struct ImageTag {};
struct GradientTag {};

/// Pixel data, every value in [0,1], RGB channel order.
template <typename Scalar>
using ImageT = Grid3<Scalar, ImageTag>;
/// Signed tensor with image shape: a loss gradient or a perturbation.
template <typename Scalar>
using GradientT = Grid3<Scalar, GradientTag>;

using Image = ImageT<float>;
using Gradient = GradientT<float>;

template <typename Scalar>
bool in_unit_range(const ImageT<Scalar>& img) {
  const auto& v = img.values().array();
  return (v >= Scalar(0)).all() && (v <= Scalar(1)).all();
}

inline void require_same_shape(const auto& a, const auto& b, const char* what) {
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(what) + ": shape mismatch (" + std::to_string(a.height()) + "x" +
                         std::to_string(a.width()) + "x" + std::to_string(a.channels()) + " vs " +
                         std::to_string(b.height()) + "x" + std::to_string(b.width()) + "x" +
                         std::to_string(b.channels()) + ")");
  }
}

struct LabeledImage {
  Image image;
  int label = 0;
};

struct Dataset {
  std::vector<LabeledImage> items;
  std::vector<std::string> class_names;

  std::size_t size() const { return items.size(); }
  bool empty() const { return items.empty(); }
  int class_count() const { return static_cast<int>(class_names.size()); }
};

const std::vector<std::string>& cifar10_class_names();

}  // namespace hvs
