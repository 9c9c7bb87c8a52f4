#pragma once

#include <cmath>
#include <span>

#include "hvs/attacks.hpp"
#include "hvs/image.hpp"
#include "hvs/nn.hpp"

namespace hvs {

/// Lp distances between two images. L0 counts pixels (any channel
/// differing, compared bitwise); L1, L2 and L-inf run over channel entries.
struct DistanceRecord {
  Index l0_pixels = 0;
  double l1 = 0.0;
  double l2 = 0.0;
  double linf = 0.0;
};

template <typename S, typename Tag>
DistanceRecord lp_distances(const Grid3<S, Tag>& a, const Grid3<S, Tag>& b) {
  require_same_shape(a, b, "lp_distances");
  const auto d = (a.values().template cast<double>() - b.values().template cast<double>()).array();
  DistanceRecord out;
  out.l1 = d.abs().sum();
  out.l2 = std::sqrt(d.square().sum());
  out.linf = d.size() ? d.abs().maxCoeff() : 0.0;
  const Index n = a.pixel_count();
  Eigen::Array<bool, Eigen::Dynamic, 1> changed = Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(n, false);
  for (Index ch = 0; ch < a.channels(); ++ch) {
    changed = changed || (a.values().segment(ch * n, n).array() != b.values().segment(ch * n, n).array());
  }
  out.l0_pixels = changed.count();
  return out;
}

/// Fraction of items whose predicted class equals the label.
template <typename Oracle>
double evaluate_accuracy(const Oracle& oracle, const Dataset& data) {
  if (data.empty()) throw ArgumentError("accuracy of an empty dataset is undefined");
  std::size_t correct = 0;
  for (const auto& item : data.items) {
    if (oracle.predict(item.image) == item.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

/// Share of attacks whose adversarial prediction misses the label. When
/// restricted, only items the model classified correctly before the attack
/// count.
template <typename S>
double attack_success_rate(std::span<const AdversarialResultT<S>> results, bool restrict_to_clean_correct = true) {
  std::size_t denom = 0;
  std::size_t hits = 0;
  for (const auto& r : results) {
    if (restrict_to_clean_correct && r.clean_pred != r.label) continue;
    ++denom;
    if (r.adv_pred != r.label) ++hits;
  }
  if (denom == 0) throw UndefinedRateError("success rate has an empty denominator");
  return static_cast<double>(hits) / static_cast<double>(denom);
}

}  // namespace hvs
