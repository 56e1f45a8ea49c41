#include "cropmap/polygon.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cropmap {

std::vector<Point> normalize_ring(std::span<const Point> ring) {
  std::vector<Point> out(ring.begin(), ring.end());
  if (out.size() >= 2 && out.front() == out.back()) out.pop_back();
  return out;
}

double signed_area(std::span<const Point> ring) {
  const auto n = ring.size();
  if (n < 3) return 0.0;
  double twice = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Point& a = ring[i];
    const Point& b = ring[(i + 1) % n];
    twice += a.x * b.y - b.x * a.y;
  }
  return 0.5 * twice;
}

double ring_area(std::span<const Point> ring) { return std::abs(signed_area(ring)); }

Point centroid(std::span<const Point> ring) {
  const auto n = ring.size();
  const double a = signed_area(ring);
  if (n < 3 || a == 0.0) throw std::invalid_argument("centroid of a degenerate ring");
  double cx = 0.0, cy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Point& p = ring[i];
    const Point& q = ring[(i + 1) % n];
    const double cross = p.x * q.y - q.x * p.y;
    cx += (p.x + q.x) * cross;
    cy += (p.y + q.y) * cross;
  }
  return {cx / (6.0 * a), cy / (6.0 * a)};
}

namespace {

double cross(Point o, Point a, Point b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

bool on_segment(Point a, Point b, Point p) {
  const double len = std::hypot(b.x - a.x, b.y - a.y);
  if (std::abs(cross(a, b, p)) > 1e-9 * std::max(len, 1.0)) return false;
  return p.x >= std::min(a.x, b.x) && p.x <= std::max(a.x, b.x) &&
         p.y >= std::min(a.y, b.y) && p.y <= std::max(a.y, b.y);
}

int sign(double v) { return (v > 0) - (v < 0); }

bool segments_touch(Point a, Point b, Point c, Point d) {
  const int d1 = sign(cross(c, d, a)), d2 = sign(cross(c, d, b));
  const int d3 = sign(cross(a, b, c)), d4 = sign(cross(a, b, d));
  if (d1 * d2 < 0 && d3 * d4 < 0) return true;
  return on_segment(c, d, a) || on_segment(c, d, b) || on_segment(a, b, c) ||
         on_segment(a, b, d);
}

}  // namespace

bool is_simple(std::span<const Point> ring) {
  const auto n = ring.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    const Point a = ring[i], b = ring[(i + 1) % n];
    if (a == b) return false;
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
      if (adjacent) continue;
      if (segments_touch(a, b, ring[j], ring[(j + 1) % n])) return false;
    }
  }
  return true;
}

bool strictly_inside(std::span<const Point> ring, Point p) {
  const auto n = ring.size();
  bool inside = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Point a = ring[j], b = ring[i];
    if (on_segment(a, b, p)) return false;
    if ((b.y > p.y) != (a.y > p.y)) {
      const double x_at = b.x + (p.y - b.y) * (a.x - b.x) / (a.y - b.y);
      if (p.x < x_at) inside = !inside;
    }
  }
  return inside;
}

std::vector<std::size_t> rasterize(std::span<const Point> input,
                                   const GridGeometry& grid) {
  const auto ring = normalize_ring(input);
  if (ring.size() < 3) throw std::invalid_argument("polygon ring needs at least 3 vertices");
  double minx = ring[0].x, maxx = ring[0].x, miny = ring[0].y, maxy = ring[0].y;
  for (const auto& p : ring) {
    minx = std::min(minx, p.x);
    maxx = std::max(maxx, p.x);
    miny = std::min(miny, p.y);
    maxy = std::max(maxy, p.y);
  }
  const double ps = grid.pixel_size;
  const int c0 = std::max(0, static_cast<int>(std::floor((minx - grid.origin_x) / ps - 0.5)));
  const int c1 = std::min(grid.width - 1,
                          static_cast<int>(std::ceil((maxx - grid.origin_x) / ps - 0.5)));
  const int r0 = std::max(0, static_cast<int>(std::floor((grid.origin_y - maxy) / ps - 0.5)));
  const int r1 = std::min(grid.height - 1,
                          static_cast<int>(std::ceil((grid.origin_y - miny) / ps - 0.5)));
  std::vector<std::size_t> pixels;
  for (int r = r0; r <= r1; ++r) {
    for (int c = c0; c <= c1; ++c) {
      const auto [x, y] = grid.pixel_center(c, r);
      if (strictly_inside(ring, {x, y})) pixels.push_back(grid.index(c, r));
    }
  }
  return pixels;
}

}  // namespace cropmap
