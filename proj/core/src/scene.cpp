#include "cropmap/scene.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace cropmap {

std::string_view polarization_name(Polarization p) {
  switch (p) {
    case Polarization::VV: return "VV";
    case Polarization::VH: return "VH";
    case Polarization::CR: return "CR";
  }
  return "?";
}

Polarization parse_polarization(std::string_view text) {
  if (text == "VV") return Polarization::VV;
  if (text == "VH") return Polarization::VH;
  if (text == "CR") return Polarization::CR;
  throw std::invalid_argument("unknown polarization '" + std::string(text) + "'");
}

SceneGrid SceneGrid::filled(GridGeometry g, std::chrono::year_month_day date,
                            Polarization band, float value) {
  SceneGrid s;
  s.acquired = date;
  s.band = band;
  s.geometry = g;
  s.values.assign(g.pixel_count(), value);
  s.valid.assign(g.pixel_count(), 1);
  return s;
}

void SceneGrid::validate() const {
  geometry.validate();
  const auto n = geometry.pixel_count();
  if (values.size() != n || valid.size() != n)
    throw std::invalid_argument("scene arrays do not match its geometry");
  if (!acquired.ok()) throw std::invalid_argument("scene date is not a calendar date");
  for (std::size_t i = 0; i < n; ++i) {
    if (valid[i] && !(std::isfinite(values[i]) && values[i] >= 0.0f))
      throw std::invalid_argument("valid scene pixel " + std::to_string(i) +
                                  " is negative or non-finite");
  }
}

double to_db(double linear) {
  if (!(linear > 0.0)) return -std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(linear);
}

double from_db(double db) { return std::pow(10.0, db / 10.0); }

namespace {

void require_pair(const SceneGrid& vv, const SceneGrid& vh) {
  require_same_geometry(vv.geometry, vh.geometry, "VV and VH scenes");
  if (vv.acquired != vh.acquired || vv.acquisition_id != vh.acquisition_id)
    throw std::invalid_argument("VV and VH scenes are from different acquisitions");
  if (vv.values.size() != vv.geometry.pixel_count() ||
      vh.values.size() != vh.geometry.pixel_count() ||
      vv.valid.size() != vv.values.size() || vh.valid.size() != vh.values.size())
    throw std::invalid_argument("scene arrays do not match its geometry");
}

}  // namespace

std::pair<SceneGrid, SceneGrid> mask_scene_edges(const SceneGrid& vv,
                                                 const SceneGrid& vh,
                                                 double threshold_db,
                                                 std::size_t min_group) {
  require_pair(vv, vh);
  if (min_group < 1) throw std::invalid_argument("min_group must be >= 1");
  const auto& g = vv.geometry;
  const auto n = g.pixel_count();

  std::vector<std::uint8_t> low(n, 0);
  for (std::size_t i = 0; i < n; ++i)
    low[i] = vv.valid[i] && to_db(vv.values[i]) < threshold_db;

  SceneGrid out_vv = vv;
  SceneGrid out_vh = vh;
  std::vector<std::uint8_t> seen(n, 0);
  std::vector<std::size_t> component;
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < n; ++start) {
    if (!low[start] || seen[start]) continue;
    component.clear();
    stack.assign(1, start);
    seen[start] = 1;
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      component.push_back(p);
      const int col = static_cast<int>(p % g.width);
      const int row = static_cast<int>(p / g.width);
      auto visit = [&](int c, int r) {
        if (c < 0 || r < 0 || c >= g.width || r >= g.height) return;
        const std::size_t q = g.index(c, r);
        if (low[q] && !seen[q]) {
          seen[q] = 1;
          stack.push_back(q);
        }
      };
      visit(col - 1, row);
      visit(col + 1, row);
      visit(col, row - 1);
      visit(col, row + 1);
    }
    if (component.size() >= min_group) {
      for (std::size_t p : component) {
        out_vv.valid[p] = 0;
        out_vh.valid[p] = 0;
      }
    }
  }
  return {std::move(out_vv), std::move(out_vh)};
}

SceneGrid compute_cr(const SceneGrid& vv, const SceneGrid& vh) {
  require_pair(vv, vh);
  SceneGrid cr;
  cr.acquired = vv.acquired;
  cr.acquisition_id = vv.acquisition_id;
  cr.band = Polarization::CR;
  cr.geometry = vv.geometry;
  const auto n = vv.geometry.pixel_count();
  cr.values.assign(n, 0.0f);
  cr.valid.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!vv.valid[i] || !vh.valid[i] || vv.values[i] == 0.0f) continue;
    cr.values[i] = static_cast<float>(static_cast<double>(vh.values[i]) /
                                      static_cast<double>(vv.values[i]));
    cr.valid[i] = 1;
  }
  return cr;
}

}  // namespace cropmap
