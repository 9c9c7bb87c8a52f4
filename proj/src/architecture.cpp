#include "hvs/architecture.hpp"

#include <sstream>

namespace hvs::nn {

Architecture Architecture::cifar10(std::uint32_t classes, Index side) {
  Architecture a;
  a.input = {3, side, side};
  a.layers = {
      LayerSpec::conv(32, 3),    LayerSpec::conv(32, 3), LayerSpec::max_pool(2), LayerSpec::dropout(0.25f),
      LayerSpec::conv(64, 3),    LayerSpec::conv(64, 3), LayerSpec::max_pool(2), LayerSpec::dropout(0.25f),
      LayerSpec::flatten(),      LayerSpec::dense(512),  LayerSpec::dropout(0.5f),
      LayerSpec::dense(classes, Activation::kSoftmax),
  };
  return a;
}

Architecture Architecture::reduced(std::uint32_t classes, Index side) {
  Architecture a;
  a.input = {3, side, side};
  a.layers = {
      LayerSpec::conv(4, 3), LayerSpec::conv(4, 3), LayerSpec::max_pool(2), LayerSpec::dropout(0.25f),
      LayerSpec::conv(4, 3), LayerSpec::conv(4, 3), LayerSpec::max_pool(2), LayerSpec::dropout(0.25f),
      LayerSpec::flatten(),  LayerSpec::dense(32),  LayerSpec::dropout(0.5f),
      LayerSpec::dense(classes, Activation::kSoftmax),
  };
  return a;
}

std::vector<Shape> Architecture::shapes() const {
  std::vector<Shape> out{input};
  Shape s = input;
  for (const auto& l : layers) {
    switch (l.kind) {
      case LayerKind::kConv:
        s.channels = l.units;
        break;
      case LayerKind::kMaxPool:
        s.height /= l.kernel;
        s.width /= l.kernel;
        break;
      case LayerKind::kDropout:
        break;
      case LayerKind::kFlatten:
        s = {s.size(), 1, 1};
        break;
      case LayerKind::kDense:
        s = {l.units, 1, 1};
        break;
    }
    out.push_back(s);
  }
  return out;
}

void Architecture::validate() const {
  auto fail = [](std::size_t i, const std::string& why) {
    throw ArgumentError("architecture layer " + std::to_string(i) + ": " + why);
  };
  if (input.channels <= 0 || input.height <= 0 || input.width <= 0) {
    throw ArgumentError("architecture input shape must be positive");
  }
  if (layers.empty()) throw ArgumentError("architecture has no layers");

  Shape s = input;
  bool flat = false;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    const bool last = i + 1 == layers.size();
    switch (l.kind) {
      case LayerKind::kConv:
        if (flat) fail(i, "convolution after flatten");
        if (l.units == 0 || l.kernel == 0 || l.kernel % 2 == 0) fail(i, "convolution needs filters and an odd kernel");
        if (l.activation != Activation::kRelu && l.activation != Activation::kNone) fail(i, "bad conv activation");
        s.channels = l.units;
        break;
      case LayerKind::kMaxPool:
        if (flat) fail(i, "pooling after flatten");
        if (l.kernel == 0 || s.height < l.kernel || s.width < l.kernel) fail(i, "pool window larger than input");
        s.height /= l.kernel;
        s.width /= l.kernel;
        break;
      case LayerKind::kDropout:
        if (!(l.rate >= 0.0f && l.rate < 1.0f)) fail(i, "dropout rate must be in [0,1)");
        break;
      case LayerKind::kFlatten:
        if (flat) fail(i, "second flatten");
        flat = true;
        break;
      case LayerKind::kDense:
        if (!flat) fail(i, "dense layer before flatten");
        if (l.units == 0) fail(i, "dense layer needs units");
        if ((l.activation == Activation::kSoftmax) != last) fail(i, "softmax must be the final activation");
        break;
    }
    if (last && (l.kind != LayerKind::kDense || l.activation != Activation::kSoftmax)) {
      fail(i, "network must end in a dense softmax layer");
    }
  }
}

std::string Architecture::describe() const {
  std::ostringstream os;
  os << "input " << input.channels << "x" << input.height << "x" << input.width;
  for (const auto& l : layers) {
    switch (l.kind) {
      case LayerKind::kConv:
        os << " | conv " << l.units << "x" << l.kernel << "x" << l.kernel << (l.activation == Activation::kRelu ? "+relu" : "");
        break;
      case LayerKind::kMaxPool:
        os << " | maxpool " << l.kernel << "x" << l.kernel;
        break;
      case LayerKind::kDropout:
        os << " | dropout " << l.rate;
        break;
      case LayerKind::kFlatten:
        os << " | flatten";
        break;
      case LayerKind::kDense:
        os << " | dense " << l.units
           << (l.activation == Activation::kRelu ? "+relu" : l.activation == Activation::kSoftmax ? "+softmax" : "");
        break;
    }
  }
  return os.str();
}

}  // namespace hvs::nn
