#include "hvs/attacks.hpp"

namespace hvs {

AttackKind parse_attack_kind(std::string_view name) {
  if (name == "fgsm") return AttackKind::kFgsm;
  if (name == "hvs2") return AttackKind::kHvs2;
  if (name == "approx-luma" || name == "approx_luma") return AttackKind::kApproxLuma;
  if (name == "luma-zero" || name == "luma_zero" || name == "luma_zero_yuv") return AttackKind::kLumaZeroYuv;
  throw ArgumentError("unknown attack '" + std::string(name) + "' (expected fgsm, hvs2, approx-luma, luma-zero)");
}

std::string_view attack_name(AttackKind kind) {
  switch (kind) {
    case AttackKind::kFgsm:
      return "fgsm";
    case AttackKind::kHvs2:
      return "hvs2";
    case AttackKind::kApproxLuma:
      return "approx-luma";
    case AttackKind::kLumaZeroYuv:
      return "luma-zero";
  }
  return "unknown";
}

}  // namespace hvs
