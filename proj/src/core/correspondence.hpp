#pragma once

#include <array>
#include <string>
#include <string_view>

#include "core/numlin.hpp"

namespace trifocal {

/// Point/line correspondence types with linear trifocal constraints, in the
/// column order used by the degree table.
enum class Kind { PPP = 0, PPL = 1, PLP = 2, LLL = 3, PLL = 4 };

inline constexpr std::array<Kind, 5> kAllKinds = {Kind::PPP, Kind::PPL, Kind::PLP, Kind::LLL, Kind::PLL};

std::string_view kind_name(Kind k);
Kind kind_from_name(std::string_view name);

/// True when slot `view` (0, 1, 2) of `k` holds an image point, false for a
/// line.
bool slot_is_point(Kind k, int view);

/// Three unit-normalized vectors: image points or image lines per kind.
struct Correspondence {
  Kind kind = Kind::PLL;
  std::array<Vec3, 3> v{};

  Correspondence() = default;
  /// Normalizes the payload; throws on a zero vector.
  Correspondence(Kind kind, const Vec3& v0, const Vec3& v1, const Vec3& v2);
};

}  // namespace trifocal
