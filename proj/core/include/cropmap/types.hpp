#pragma once

#include <cstdint>
#include <string_view>

namespace cropmap {

/// Study-legend class code (level-1 such as 200, level-2 such as 213).
using ClassCode = std::uint16_t;

/// Biome-derived classification stratum.
enum class Stratum : std::uint8_t { Str1 = 1, Str2 = 2 };

std::string_view stratum_name(Stratum s);
/// Accepts "Str1"/"Str2" or "1"/"2".
Stratum parse_stratum(std::string_view text);

}  // namespace cropmap
