#pragma once

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

namespace cropmap {

/// North-up pixel grid. `origin_x`/`origin_y` are the map coordinates of the
/// top-left corner; rows run southwards (decreasing y).
struct GridGeometry {
  int width = 0;
  int height = 0;
  double pixel_size = 10.0;
  double origin_x = 0.0;
  double origin_y = 0.0;

  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }
  std::size_t index(int col, int row) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width) +
           static_cast<std::size_t>(col);
  }
  /// Map coordinates of a pixel center.
  std::pair<double, double> pixel_center(int col, int row) const {
    return {origin_x + (col + 0.5) * pixel_size,
            origin_y - (row + 0.5) * pixel_size};
  }
  /// Area of one pixel in hectares.
  double pixel_area_ha() const { return pixel_size * pixel_size / 10000.0; }

  /// Cell containing (x, y). Cells are half-open: the west and north edges
  /// belong to the cell, the east and south edges to the neighbour.
  std::optional<std::pair<int, int>> cell_of(double x, double y) const;

  /// Throws std::invalid_argument unless width, height >= 1 and pixel_size > 0.
  void validate() const;

  bool operator==(const GridGeometry&) const = default;
};

/// Throws std::invalid_argument with `what` when the two grids differ.
void require_same_geometry(const GridGeometry& a, const GridGeometry& b,
                           const char* what);

/// Single-band raster on a grid.
template <class T>
struct Raster {
  GridGeometry geometry;
  std::vector<T> values;

  Raster() = default;
  Raster(GridGeometry g, T fill)
      : geometry(g), values(g.pixel_count(), fill) {}

  T& at(int col, int row) { return values[geometry.index(col, row)]; }
  const T& at(int col, int row) const {
    return values[geometry.index(col, row)];
  }
};

}  // namespace cropmap
