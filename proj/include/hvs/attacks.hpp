#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>

#include "hvs/colorspace.hpp"
#include "hvs/frequency.hpp"
#include "hvs/image.hpp"
#include "hvs/nn.hpp"

namespace hvs {

enum class AttackKind { kFgsm, kHvs2, kApproxLuma, kLumaZeroYuv };

inline constexpr double kDefaultEpsilon = 8.0 / 255.0;
inline constexpr double kDefaultTau = 0.01;

/// Accepts the CLI spellings (fgsm, hvs2, approx-luma, luma-zero) and their
/// underscore forms.
AttackKind parse_attack_kind(std::string_view name);
std::string_view attack_name(AttackKind kind);

struct AttackSpec {
  AttackKind kind = AttackKind::kFgsm;
  double epsilon = kDefaultEpsilon;
  // Frequency threshold; only hvs2 reads it.
  double tau = kDefaultTau;

  void validate() const {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw ArgumentError("epsilon must be a positive finite number");
    if (!(tau >= 0.0)) throw ArgumentError("tau must be >= 0");
  }
};

template <typename S>
struct AdversarialResultT {
  ImageT<S> clean;
  ImageT<S> adversarial;
  // Step before clamping into [0,1].
  GradientT<S> perturbation;
  int label = 0;
  int clean_pred = 0;
  int adv_pred = 0;
  // adv_pred differs from the true label.
  bool success = false;
  std::optional<PerturbationMask> mask_used;
  // Channel entries that clean + perturbation pushed outside [0,1].
  Index clamp_count = 0;

  /// Pixels with at least one non-zero perturbation entry.
  Index perturbed_pixels() const {
    Eigen::Array<bool, Eigen::Dynamic, 1> touched = Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(perturbation.pixel_count(), false);
    const Index n = perturbation.pixel_count();
    for (Index ch = 0; ch < perturbation.channels(); ++ch) {
      touched = touched || (perturbation.values().segment(ch * n, n).array() != S(0));
    }
    return touched.count();
  }
};
using AdversarialResult = AdversarialResultT<float>;

template <typename S>
S sign(S v) {
  return static_cast<S>((S(0) < v) - (v < S(0)));
}

/// 1 where all three gradient components are strictly positive or all are
/// strictly negative: stepping along sign(g) then scales the pixel's
/// colour up or down without turning its hue. A zero component closes the
/// pixel.
template <typename S>
PerturbationMask constant_chroma_mask(const GradientT<S>& grad) {
  if (grad.channels() != 3) throw DimensionError("chroma mask needs 3 channels");
  const auto r = grad.plane(0).array();
  const auto g = grad.plane(1).array();
  const auto b = grad.plane(2).array();
  const MaskArray pos = (r > S(0)) && (g > S(0)) && (b > S(0));
  const MaskArray neg = (r < S(0)) && (g < S(0)) && (b < S(0));
  return {pos || neg, MaskSource::kChroma};
}

/// 1 where some gradient component is strictly positive and another strictly
/// negative.
template <typename S>
PerturbationMask approx_constant_luma_mask(const GradientT<S>& grad) {
  if (grad.channels() != 3) throw DimensionError("luma mask needs 3 channels");
  const auto r = grad.plane(0).array();
  const auto g = grad.plane(1).array();
  const auto b = grad.plane(2).array();
  const MaskArray any_pos = (r > S(0)) || (g > S(0)) || (b > S(0));
  const MaskArray any_neg = (r < S(0)) || (g < S(0)) || (b < S(0));
  return {any_pos && any_neg, MaskSource::kLuma};
}

namespace detail {

// Returns clamp(x + delta, 0, 1) and the number of clamped entries. With a
// budget, each entry is additionally pulled back by whole ulps until its
// exact distance from x is within the budget, so L-inf <= budget holds in
// floating point and not only in real arithmetic.
template <typename S>
std::pair<ImageT<S>, Index> apply_step(const ImageT<S>& x, const GradientT<S>& delta, std::optional<S> budget) {
  ImageT<S> out = x;
  Index clamped = 0;
  for (Index k = 0; k < x.size(); ++k) {
    const S d = delta.values()[k];
    if (d == S(0)) continue;
    const S orig = x.values()[k];
    S v = orig + d;
    if (v < S(0) || v > S(1)) {
      ++clamped;
      v = std::clamp(v, S(0), S(1));
    }
    if (budget) {
      while (std::abs(static_cast<long double>(v) - static_cast<long double>(orig)) > static_cast<long double>(*budget)) {
        v = std::nextafter(v, orig);
      }
    }
    out.values()[k] = v;
  }
  return {std::move(out), clamped};
}

template <typename S, typename Oracle>
AdversarialResultT<S> finish(const Oracle& oracle, const ImageT<S>& img, int label, GradientT<S> delta,
                             std::optional<PerturbationMask> mask, std::optional<S> budget) {
  auto [adv, clamped] = apply_step(img, delta, budget);
  AdversarialResultT<S> out;
  out.clean = img;
  out.adversarial = std::move(adv);
  out.perturbation = std::move(delta);
  out.label = label;
  out.clean_pred = oracle.predict(out.clean);
  out.adv_pred = oracle.predict(out.adversarial);
  out.success = out.adv_pred != label;
  out.mask_used = std::move(mask);
  out.clamp_count = clamped;
  return out;
}

template <typename S>
void check_epsilon(double epsilon) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw ArgumentError("epsilon must be a positive finite number");
}

/// FGSM step restricted to mask, from a precomputed gradient.
template <typename S, typename Oracle>
AdversarialResultT<S> masked_fgsm_from_gradient(const Oracle& oracle, const ImageT<S>& img, int label, double epsilon,
                                                const PerturbationMask& mask, const GradientT<S>& grad) {
  check_epsilon<S>(epsilon);
  if (mask.height() != img.height() || mask.width() != img.width()) {
    throw DimensionError("mask " + std::to_string(mask.height()) + "x" + std::to_string(mask.width()) +
                         " does not match image " + std::to_string(img.height()) + "x" + std::to_string(img.width()));
  }
  require_same_shape(img, grad, "masked_fgsm");
  const S eps = static_cast<S>(epsilon);
  GradientT<S> delta(img.height(), img.width(), img.channels());
  for (Index ch = 0; ch < img.channels(); ++ch) {
    delta.plane(ch).array() =
        mask.bits.select(eps * grad.plane(ch).array().unaryExpr([](S v) { return sign(v); }), S(0));
  }
  return finish(oracle, img, label, std::move(delta), std::optional<PerturbationMask>(mask), std::optional<S>(eps));
}

}  // namespace detail

/// x' = clamp(x + epsilon * mask * sign(dL/dx), 0, 1). Pixels outside the
/// mask are returned bit-identical; an all-ones mask is plain FGSM.
template <typename S, typename Oracle>
  requires nn::GradientOracle<Oracle, S>
AdversarialResultT<S> masked_fgsm(const Oracle& oracle, const ImageT<S>& img, int label, double epsilon,
                                  const PerturbationMask& mask) {
  detail::check_epsilon<S>(epsilon);
  const auto grad = oracle.loss_and_gradient(img, label).gradient;
  return detail::masked_fgsm_from_gradient(oracle, img, label, epsilon, mask, grad);
}

template <typename S, typename Oracle>
  requires nn::GradientOracle<Oracle, S>
AdversarialResultT<S> fgsm(const Oracle& oracle, const ImageT<S>& img, int label, double epsilon) {
  return masked_fgsm(oracle, img, label, epsilon, PerturbationMask::all(img.height(), img.width()));
}

/// FGSM limited to pixels that are both high-frequency in the clean image
/// (estimate > tau) and whose gradient signs all agree.
template <typename S, typename Oracle>
  requires nn::GradientOracle<Oracle, S>
AdversarialResultT<S> hvs2(const Oracle& oracle, const ImageT<S>& img, int label, double epsilon,
                           double tau = kDefaultTau) {
  detail::check_epsilon<S>(epsilon);
  const auto grad = oracle.loss_and_gradient(img, label).gradient;
  const PerturbationMask mask = threshold_mask(pixel_frequency_map(img), tau) && constant_chroma_mask(grad);
  return detail::masked_fgsm_from_gradient(oracle, img, label, epsilon, mask, grad);
}

/// FGSM limited to pixels whose gradient has mixed signs.
template <typename S, typename Oracle>
  requires nn::GradientOracle<Oracle, S>
AdversarialResultT<S> approx_luma_attack(const Oracle& oracle, const ImageT<S>& img, int label, double epsilon) {
  detail::check_epsilon<S>(epsilon);
  const auto grad = oracle.loss_and_gradient(img, label).gradient;
  return detail::masked_fgsm_from_gradient(oracle, img, label, epsilon, approx_constant_luma_mask(grad), grad);
}

/// The FGSM step with its luma removed in YUV space. The step carries no
/// luma before clamping, but its RGB entries may exceed epsilon (up to
/// luma_zero_gain() * epsilon).
template <typename S, typename Oracle>
  requires nn::GradientOracle<Oracle, S>
AdversarialResultT<S> luma_zero_attack(const Oracle& oracle, const ImageT<S>& img, int label, double epsilon) {
  detail::check_epsilon<S>(epsilon);
  auto step = oracle.loss_and_gradient(img, label).gradient;
  const S eps = static_cast<S>(epsilon);
  step.values() = step.values().unaryExpr([eps](S v) { return eps * sign(v); });
  return detail::finish(oracle, img, label, project_gradient_zero_luma(step), std::nullopt, std::optional<S>{});
}

/// Largest L-inf norm of the zero-luma projection of a vector in {-1,0,1}^3.
inline double luma_zero_gain() {
  const Eigen::Matrix3d p = zero_luma_projection_matrix();
  double best = 0.0;
  for (int code = 0; code < 27; ++code) {
    const Eigen::Vector3d s(code % 3 - 1, (code / 3) % 3 - 1, code / 9 - 1);
    best = std::max(best, (p * s).cwiseAbs().maxCoeff());
  }
  return best;
}

template <typename S, typename Oracle>
  requires nn::GradientOracle<Oracle, S>
AdversarialResultT<S> run_attack(const AttackSpec& spec, const Oracle& oracle, const ImageT<S>& img, int label) {
  spec.validate();
  switch (spec.kind) {
    case AttackKind::kFgsm:
      return fgsm(oracle, img, label, spec.epsilon);
    case AttackKind::kHvs2:
      return hvs2(oracle, img, label, spec.epsilon, spec.tau);
    case AttackKind::kApproxLuma:
      return approx_luma_attack(oracle, img, label, spec.epsilon);
    case AttackKind::kLumaZeroYuv:
      return luma_zero_attack(oracle, img, label, spec.epsilon);
  }
  throw ArgumentError("unknown attack kind");
}

template <typename Oracle>
  requires nn::GradientOracle<Oracle, float>
AdversarialResult run_attack(const AttackSpec& spec, const Oracle& oracle, const LabeledImage& item) {
  return run_attack<float>(spec, oracle, item.image, item.label);
}

/// Re-checks the contract of a finished attack; throws InvariantError.
///  - adversarial values stay in [0,1];
///  - masked attacks: L-inf distance <= epsilon, pixels outside the mask
///    untouched;
///  - zero-luma: the unclamped step has |Y| < 1e-6 per pixel and L-inf
///    distance <= luma_zero_gain() * epsilon, up to float rounding.
template <typename S>
void verify_attack_invariants(const AttackSpec& spec, const AdversarialResultT<S>& r) {
  auto fail = [&](const std::string& what) {
    throw InvariantError(std::string(attack_name(spec.kind)) + ": " + what);
  };
  if (!in_unit_range(r.adversarial)) fail("adversarial image leaves [0,1]");
  const auto diff = (r.adversarial.values().template cast<long double>() - r.clean.values().template cast<long double>())
                        .cwiseAbs();
  const long double linf = diff.size() ? diff.maxCoeff() : 0.0L;
  if (spec.kind == AttackKind::kLumaZeroYuv) {
    // Slack for rounding the projected step and the sum x + step.
    const long double bound = static_cast<long double>(static_cast<S>(spec.epsilon)) * luma_zero_gain() * (1.0L + 1e-6L) +
                              std::numeric_limits<S>::epsilon();
    if (linf > bound) fail("L-inf distance exceeds the zero-luma bound");
    if ((luma_of(r.perturbation).abs() >= 1e-6).any()) fail("step carries luma");
    return;
  }
  if (linf > static_cast<long double>(static_cast<S>(spec.epsilon))) fail("L-inf distance exceeds epsilon");
  if (r.mask_used) {
    const Index n = r.clean.pixel_count();
    for (Index ch = 0; ch < r.clean.channels(); ++ch) {
      for (Index p = 0; p < n; ++p) {
        if (!r.mask_used->bits(p / r.clean.width(), p % r.clean.width()) &&
            r.adversarial.values()[ch * n + p] != r.clean.values()[ch * n + p]) {
          fail("pixel outside the mask was modified");
        }
      }
    }
  }
}

}  // namespace hvs
