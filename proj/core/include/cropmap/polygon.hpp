#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cropmap/grid.hpp"

namespace cropmap {

struct Point {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point&) const = default;
};

/// Simple polygon ring. A repeated closing vertex is optional on input and
/// stripped by normalize_ring().
std::vector<Point> normalize_ring(std::span<const Point> ring);

/// Signed shoelace area in map units squared (positive when counter-clockwise).
double signed_area(std::span<const Point> ring);
double ring_area(std::span<const Point> ring);
Point centroid(std::span<const Point> ring);
bool is_simple(std::span<const Point> ring);

/// Point strictly inside the ring. Points on an edge or vertex are outside.
bool strictly_inside(std::span<const Point> ring, Point p);

/// Row-major indices of the pixels whose centers lie strictly inside the ring.
/// Throws std::invalid_argument for rings with fewer than three vertices.
std::vector<std::size_t> rasterize(std::span<const Point> ring,
                                   const GridGeometry& grid);

}  // namespace cropmap
