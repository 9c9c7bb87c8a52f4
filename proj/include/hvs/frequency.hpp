#pragma once

#include <Eigen/Core>

#include <cmath>

#include "hvs/image.hpp"

namespace hvs {

using MaskArray = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class MaskSource { kAll, kFrequency, kChroma, kLuma, kComposite };

/// Binary per-pixel gate on which pixels an attack may modify.
struct PerturbationMask {
  MaskArray bits;
  MaskSource source = MaskSource::kAll;

  Index height() const { return bits.rows(); }
  Index width() const { return bits.cols(); }
  Index count() const { return bits.count(); }

  static PerturbationMask all(Index height, Index width) {
    return {MaskArray::Constant(height, width, true), MaskSource::kAll};
  }
  static PerturbationMask none(Index height, Index width) {
    return {MaskArray::Constant(height, width, false), MaskSource::kAll};
  }
};

/// Pixelwise AND; the result is tagged as a composite mask.
inline PerturbationMask operator&&(const PerturbationMask& a, const PerturbationMask& b) {
  if (a.height() != b.height() || a.width() != b.width()) throw DimensionError("mask conjunction: shape mismatch");
  return {a.bits && b.bits, MaskSource::kComposite};
}

// The only boundary policy: edge and corner pixels are not measured and
// carry frequency 0, so a threshold mask never opens them.
enum class BoundaryPolicy { kZero };

template <typename Scalar>
struct FrequencyMapT {
  Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> values;
  BoundaryPolicy policy = BoundaryPolicy::kZero;

  Index height() const { return values.rows(); }
  Index width() const { return values.cols(); }
};
using FrequencyMap = FrequencyMapT<float>;

/// Local high-frequency estimate per pixel. For each channel of an interior
/// pixel, take its absolute deviation from the mean of its vertical
/// neighbours and from the mean of its horizontal neighbours, and keep the
/// smaller. The pixel's value is the largest of its three channel values.
template <typename Scalar>
FrequencyMapT<Scalar> pixel_frequency_map(const ImageT<Scalar>& img) {
  const Index h = img.height();
  const Index w = img.width();
  if (h < 3 || w < 3) {
    throw DimensionError("frequency map needs at least 3x3 pixels, got " + std::to_string(h) + "x" +
                         std::to_string(w));
  }
  FrequencyMapT<Scalar> out;
  out.values.setZero(h, w);
  auto interior = out.values.block(1, 1, h - 2, w - 2);
  for (Index ch = 0; ch < img.channels(); ++ch) {
    const auto p = img.plane(ch).array();
    const auto center = p.block(1, 1, h - 2, w - 2);
    const auto vmean = (p.block(0, 1, h - 2, w - 2) + p.block(2, 1, h - 2, w - 2)) / Scalar(2);
    const auto hmean = (p.block(1, 0, h - 2, w - 2) + p.block(1, 2, h - 2, w - 2)) / Scalar(2);
    const auto dev = (center - vmean).abs().min((center - hmean).abs());
    interior = interior.max(dev);
  }
  return out;
}

/// 1 where the frequency strictly exceeds tau. Boundary pixels stay closed.
template <typename Scalar>
PerturbationMask threshold_mask(const FrequencyMapT<Scalar>& map, double tau) {
  if (!(tau >= 0.0)) throw ArgumentError("frequency threshold must be >= 0");
  PerturbationMask mask{map.values.template cast<double>() > tau, MaskSource::kFrequency};
  mask.bits.row(0).setConstant(false);
  mask.bits.row(mask.height() - 1).setConstant(false);
  mask.bits.col(0).setConstant(false);
  mask.bits.col(mask.width() - 1).setConstant(false);
  return mask;
}

/// Grayscale rendering of a frequency map for inspection, min-max
/// normalized to [0,1]; a constant map renders black.
template <typename Scalar>
ImageT<Scalar> frequency_to_image(const FrequencyMapT<Scalar>& map) {
  ImageT<Scalar> out(map.height(), map.width(), 3);
  const Scalar lo = map.values.minCoeff();
  const Scalar range = map.values.maxCoeff() - lo;
  for (Index ch = 0; ch < 3; ++ch) {
    if (range > Scalar(0)) {
      out.plane(ch).array() = (map.values - lo) / range;
    } else {
      out.plane(ch).setZero();
    }
  }
  return out;
}

}  // namespace hvs
