#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hvs/image.hpp"

namespace hvs::nn {

// Numeric values are part of the checkpoint format.
enum class LayerKind : std::uint32_t { kConv = 1, kMaxPool = 2, kDropout = 3, kFlatten = 4, kDense = 5 };
enum class Activation : std::uint32_t { kNone = 0, kRelu = 1, kSoftmax = 2 };

struct LayerSpec {
  LayerKind kind = LayerKind::kFlatten;
  // Filters for conv, units for dense.
  std::uint32_t units = 0;
  // Kernel side for conv, window side for max-pool.
  std::uint32_t kernel = 0;
  float rate = 0.0f;
  Activation activation = Activation::kNone;

  static LayerSpec conv(std::uint32_t filters, std::uint32_t kernel) {
    return {LayerKind::kConv, filters, kernel, 0.0f, Activation::kRelu};
  }
  static LayerSpec max_pool(std::uint32_t size) { return {LayerKind::kMaxPool, 0, size, 0.0f, Activation::kNone}; }
  static LayerSpec dropout(float rate) { return {LayerKind::kDropout, 0, 0, rate, Activation::kNone}; }
  static LayerSpec flatten() { return {LayerKind::kFlatten, 0, 0, 0.0f, Activation::kNone}; }
  static LayerSpec dense(std::uint32_t units, Activation act = Activation::kNone) {
    return {LayerKind::kDense, units, 0, 0.0f, act};
  }

  bool has_params() const { return kind == LayerKind::kConv || kind == LayerKind::kDense; }

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

struct Shape {
  Index channels = 0;
  Index height = 0;
  Index width = 0;

  Index size() const { return channels * height * width; }
  friend bool operator==(const Shape&, const Shape&) = default;
};

/// Layer sequence plus input geometry. Convolutions use same-padding and
/// stride 1; pooling uses non-overlapping windows.
struct Architecture {
  Shape input{3, 32, 32};
  std::vector<LayerSpec> layers;

  /// The 12-layer classifier: two conv-conv-pool-dropout blocks (32 then 64
  /// filters, 3x3), flatten, dense 512, dropout 0.5, dense softmax.
  static Architecture cifar10(std::uint32_t classes = 10, Index side = 32);

  /// Same topology at desk scale: 4+4 conv filters, dense 32. Used for
  /// finite-difference gradient checks.
  static Architecture reduced(std::uint32_t classes = 10, Index side = 8);

  /// Output shape of every layer; element 0 is the input shape.
  std::vector<Shape> shapes() const;

  std::uint32_t classes() const { return layers.empty() ? 0 : layers.back().units; }

  /// Throws ArgumentError describing the first structural problem.
  void validate() const;

  std::string describe() const;

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

}  // namespace hvs::nn
