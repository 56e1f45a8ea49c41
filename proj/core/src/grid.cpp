#include "cropmap/grid.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace cropmap {

std::optional<std::pair<int, int>> GridGeometry::cell_of(double x,
                                                         double y) const {
  const double fc = std::floor((x - origin_x) / pixel_size);
  const double fr = std::floor((origin_y - y) / pixel_size);
  if (fc < 0 || fr < 0 || fc >= width || fr >= height) return std::nullopt;
  return std::pair{static_cast<int>(fc), static_cast<int>(fr)};
}

void GridGeometry::validate() const {
  if (width < 1 || height < 1)
    throw std::invalid_argument("grid must be at least 1x1");
  if (!(pixel_size > 0.0) || !std::isfinite(pixel_size))
    throw std::invalid_argument("pixel_size must be positive");
}

void require_same_geometry(const GridGeometry& a, const GridGeometry& b,
                           const char* what) {
  if (!(a == b))
    throw std::invalid_argument(std::string("geometry mismatch: ") + what);
}

}  // namespace cropmap
