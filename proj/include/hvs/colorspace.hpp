#pragma once

#include <Eigen/Core>

#include "hvs/image.hpp"

namespace hvs {

struct YuvTag {};

/// Y, U, V planes. Y is nominally in [0,1]; U and V are signed and never
/// clamped.
template <typename Scalar>
using YuvImageT = Grid3<Scalar, YuvTag>;
using YuvImage = YuvImageT<float>;

/// RGB -> YUV with the constants of TensorFlow's rgb_to_yuv. Rows 2 and 3
/// sum to zero, so gray has no chroma.
inline Eigen::Matrix3d rgb_to_yuv_matrix() {
  Eigen::Matrix3d m;
  m << 0.299, 0.587, 0.114,
       -0.14714119, -0.28886916, 0.43601035,
       0.61497538, -0.51496512, -0.10001026;
  return m;
}

/// YUV -> RGB, the numerical inverse of rgb_to_yuv_matrix().
inline Eigen::Matrix3d yuv_to_rgb_matrix() {
  Eigen::Matrix3d m;
  m << 1.0, 0.0, 1.13988303,
       1.0, -0.394642334, -0.58062185,
       1.0, 2.03206185, 0.0;
  return m;
}

/// Linear map that removes the luma component of an RGB vector:
/// to YUV, zero Y, back to RGB.
inline Eigen::Matrix3d zero_luma_projection_matrix() {
  const Eigen::DiagonalMatrix<double, 3> drop_luma(0.0, 1.0, 1.0);
  return yuv_to_rgb_matrix() * drop_luma * rgb_to_yuv_matrix();
}

namespace detail {

// Applies a 3x3 colour matrix to every pixel. Planes are viewed as a
// 3 x (H*W) matrix so this is a single product.
template <typename OutTag, typename Scalar, typename InTag>
Grid3<Scalar, OutTag> apply_color_matrix(const Eigen::Matrix3d& m, const Grid3<Scalar, InTag>& in) {
  if (in.channels() != 3) throw DimensionError("colour transforms need 3 channels");
  using Planes = Eigen::Matrix<Scalar, 3, Eigen::Dynamic, Eigen::RowMajor>;
  Grid3<Scalar, OutTag> out(in.height(), in.width(), 3);
  const Eigen::Map<const Planes> src(in.values().data(), 3, in.pixel_count());
  Eigen::Map<Planes> dst(out.values().data(), 3, in.pixel_count());
  dst = (m * src.template cast<double>()).template cast<Scalar>();
  return out;
}

}  // namespace detail

template <typename Scalar>
YuvImageT<Scalar> rgb_to_yuv(const ImageT<Scalar>& img) {
  return detail::apply_color_matrix<YuvTag>(rgb_to_yuv_matrix(), img);
}

template <typename Scalar>
struct RgbConversion {
  ImageT<Scalar> image;
  /// Channel entries that fell outside [0,1] and were clamped.
  Index clamp_count = 0;
};

/// YUV -> RGB, clamping into the pixel range only at the end and counting the
/// entries that left the gamut.
template <typename Scalar>
RgbConversion<Scalar> yuv_to_rgb(const YuvImageT<Scalar>& yuv) {
  RgbConversion<Scalar> out{detail::apply_color_matrix<ImageTag>(yuv_to_rgb_matrix(), yuv), 0};
  auto v = out.image.values().array();
  out.clamp_count = ((v < Scalar(0)) || (v > Scalar(1))).count();
  v = v.max(Scalar(0)).min(Scalar(1));
  return out;
}

/// Gradient with its luma component removed. Linear and idempotent; the
/// pure-luma direction (c,c,c) maps to zero.
template <typename Scalar>
GradientT<Scalar> project_gradient_zero_luma(const GradientT<Scalar>& grad) {
  return detail::apply_color_matrix<GradientTag>(zero_luma_projection_matrix(), grad);
}

/// Per-pixel luma of a signed RGB tensor (e.g. a perturbation).
template <typename Scalar, typename Tag>
Eigen::Array<double, Eigen::Dynamic, 1> luma_of(const Grid3<Scalar, Tag>& rgb) {
  using Planes = Eigen::Matrix<Scalar, 3, Eigen::Dynamic, Eigen::RowMajor>;
  const Eigen::Map<const Planes> src(rgb.values().data(), 3, rgb.pixel_count());
  return (rgb_to_yuv_matrix().row(0) * src.template cast<double>()).transpose().array();
}

}  // namespace hvs
