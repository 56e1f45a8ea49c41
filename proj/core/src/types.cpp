#include "cropmap/types.hpp"

#include <stdexcept>
#include <string>

namespace cropmap {

std::string_view stratum_name(Stratum s) {
  return s == Stratum::Str1 ? "Str1" : "Str2";
}

Stratum parse_stratum(std::string_view text) {
  if (text == "Str1" || text == "1" || text == "str1") return Stratum::Str1;
  if (text == "Str2" || text == "2" || text == "str2") return Stratum::Str2;
  throw std::invalid_argument("unknown stratum '" + std::string(text) + "'");
}

}  // namespace cropmap
