#pragma once

#include <array>
#include <optional>
#include <string_view>

namespace survfuse {

/// Sources of a fused risk covariate. The enumerator order is the fixed
/// covariate order used by fusion models.
enum class Modality { Clin, Img, RsfClin, RsfImg, Pesi };

inline constexpr std::array<Modality, 5> kAllModalities = {
    Modality::Clin, Modality::Img, Modality::RsfClin, Modality::RsfImg, Modality::Pesi};

constexpr std::string_view to_string(Modality m) noexcept {
  switch (m) {
    case Modality::Clin: return "clin";
    case Modality::Img: return "img";
    case Modality::RsfClin: return "rsf_clin";
    case Modality::RsfImg: return "rsf_img";
    case Modality::Pesi: return "pesi";
  }
  return "?";
}

constexpr std::optional<Modality> parse_modality(std::string_view s) noexcept {
  for (Modality m : kAllModalities) {
    if (to_string(m) == s) return m;
  }
  return std::nullopt;
}

}  // namespace survfuse
