#include "cropmap/cube.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <tuple>

#include "cropmap/io.hpp"
#include "cropmap/parallel.hpp"

namespace cropmap {

std::string_view band_name(CubeBand b) {
  switch (b) {
    case CubeBand::VV_dB: return "VV";
    case CubeBand::VH_dB: return "VH";
    case CubeBand::CR: return "CR";
  }
  return "?";
}

CubeBand parse_band(std::string_view text) {
  if (text == "VV" || text == "VV_dB") return CubeBand::VV_dB;
  if (text == "VH" || text == "VH_dB") return CubeBand::VH_dB;
  if (text == "CR" || text == "VH/VV") return CubeBand::CR;
  throw std::invalid_argument("unknown band '" + std::string(text) + "'");
}

std::vector<CubeBand> parse_bands(std::string_view comma_list) {
  std::vector<CubeBand> out;
  for (const auto& f : split_fields(comma_list, ',')) {
    if (f.empty()) continue;
    const CubeBand b = parse_band(f);
    if (std::find(out.begin(), out.end(), b) != out.end())
      throw std::invalid_argument("band listed twice: " + f);
    out.push_back(b);
  }
  if (out.empty()) throw std::invalid_argument("empty band list");
  return out;
}

std::string join_bands(std::span<const CubeBand> bands) {
  std::string s;
  for (std::size_t i = 0; i < bands.size(); ++i) {
    if (i) s += ',';
    s += band_name(bands[i]);
  }
  return s;
}

DekadalCube DekadalCube::empty(GridGeometry g, int year,
                               std::vector<CubeBand> bands) {
  g.validate();
  DekadalCube c;
  c.geometry = g;
  c.year = year;
  c.bands = std::move(bands);
  const auto n = static_cast<std::size_t>(kDekadsPerYear) * c.bands.size() *
                 g.pixel_count();
  c.values.assign(n, 0.0f);
  c.valid.assign(n, 0);
  return c;
}

std::optional<std::size_t> DekadalCube::band_slot(CubeBand b) const {
  for (std::size_t i = 0; i < bands.size(); ++i)
    if (bands[i] == b) return i;
  return std::nullopt;
}

float DekadalCube::value(int dekad, CubeBand b, std::size_t pixel) const {
  auto slot = band_slot(b);
  if (!slot) throw std::invalid_argument("cube has no band " + std::string(band_name(b)));
  return values[index(dekad, *slot, pixel)];
}

bool DekadalCube::is_valid(int dekad, CubeBand b, std::size_t pixel) const {
  auto slot = band_slot(b);
  if (!slot) throw std::invalid_argument("cube has no band " + std::string(band_name(b)));
  return valid[index(dekad, *slot, pixel)] != 0;
}

std::vector<std::string> FeatureWindow::feature_names() const {
  std::vector<std::string> names;
  names.reserve(feature_count());
  for (auto b : bands)
    for (int d = start_dekad; d <= end_dekad; ++d)
      names.push_back(std::string(band_name(b)) + "_" + std::to_string(d));
  return names;
}

std::string FeatureWindow::descriptor() const {
  return std::to_string(start_dekad) + "-" + std::to_string(end_dekad) + ":" +
         join_bands(bands);
}

FeatureWindow FeatureWindow::parse(std::string_view text) {
  const auto colon = text.find(':');
  const auto dash = text.find('-');
  if (colon == std::string_view::npos || dash == std::string_view::npos || dash > colon)
    throw std::invalid_argument("window descriptor must look like 0-21:VV,VH");
  FeatureWindow w;
  w.start_dekad = static_cast<int>(parse_int(text.substr(0, dash)));
  w.end_dekad = static_cast<int>(parse_int(text.substr(dash + 1, colon - dash - 1)));
  w.bands = parse_bands(text.substr(colon + 1));
  w.validate();
  return w;
}

void FeatureWindow::validate() const {
  if (start_dekad < 0 || end_dekad >= kDekadsPerYear || start_dekad > end_dekad)
    throw std::invalid_argument("dekad window " + std::to_string(start_dekad) + "-" +
                                std::to_string(end_dekad) + " outside [0, 35]");
  if (bands.empty()) throw std::invalid_argument("feature window has no bands");
}

std::vector<std::size_t> FeatureWindow::positions_in(const FeatureWindow& source) const {
  validate();
  if (start_dekad < source.start_dekad || end_dekad > source.end_dekad)
    throw std::invalid_argument("window " + descriptor() + " not covered by " +
                                source.descriptor());
  std::vector<std::size_t> pos;
  pos.reserve(feature_count());
  for (auto b : bands) {
    auto it = std::find(source.bands.begin(), source.bands.end(), b);
    if (it == source.bands.end())
      throw std::invalid_argument("band " + std::string(band_name(b)) +
                                  " not present in " + source.descriptor());
    const auto slot = static_cast<std::size_t>(it - source.bands.begin());
    for (int d = start_dekad; d <= end_dekad; ++d)
      pos.push_back(slot * source.dekad_count() +
                    static_cast<std::size_t>(d - source.start_dekad));
  }
  return pos;
}

namespace {

std::vector<std::size_t> window_slots(const DekadalCube& cube,
                                      const FeatureWindow& window) {
  window.validate();
  std::vector<std::size_t> slots;
  for (auto b : window.bands) {
    auto s = cube.band_slot(b);
    if (!s)
      throw std::invalid_argument("cube lacks band " + std::string(band_name(b)));
    slots.push_back(*s);
  }
  return slots;
}

bool gather_with_slots(const DekadalCube& cube, const FeatureWindow& window,
                       std::span<const std::size_t> slots, std::size_t pixel,
                       std::span<float> out) {
  std::size_t k = 0;
  bool ok = true;
  for (std::size_t slot : slots) {
    for (int d = window.start_dekad; d <= window.end_dekad; ++d) {
      const auto idx = cube.index(d, slot, pixel);
      out[k++] = cube.values[idx];
      ok = ok && cube.valid[idx];
    }
  }
  return ok;
}

}  // namespace

bool gather_features(const DekadalCube& cube, const FeatureWindow& window,
                     std::size_t pixel, std::span<float> out) {
  const auto slots = window_slots(cube, window);
  if (out.size() != window.feature_count())
    throw std::invalid_argument("feature buffer has the wrong length");
  return gather_with_slots(cube, window, slots, pixel, out);
}

FeatureMatrix slice_window(const DekadalCube& cube, const FeatureWindow& window) {
  const auto slots = window_slots(cube, window);
  FeatureMatrix m;
  m.rows = cube.geometry.pixel_count();
  m.cols = window.feature_count();
  m.values.assign(m.rows * m.cols, 0.0f);
  m.row_valid.assign(m.rows, 0);
  for (std::size_t p = 0; p < m.rows; ++p) {
    m.row_valid[p] = gather_with_slots(
        cube, window, slots, p, std::span<float>(m.values.data() + p * m.cols, m.cols));
  }
  return m;
}

DekadalCube composite_dekads(std::span<const SceneGrid> scenes, int year,
                             const GridGeometry& geometry, unsigned threads) {
  geometry.validate();
  DekadalCube cube = DekadalCube::empty(
      geometry, year, {CubeBand::VV_dB, CubeBand::VH_dB, CubeBand::CR});

  // Canonical order: (date, acquisition id, band).
  using Key = std::tuple<int, std::string, int>;
  std::map<Key, const SceneGrid*> ordered;
  for (const auto& s : scenes) {
    s.validate();
    require_same_geometry(s.geometry, geometry, "scene vs composite grid");
    if (static_cast<int>(s.acquired.year()) != year)
      throw std::invalid_argument("scene dated outside composite year " +
                                  std::to_string(year));
    if (s.band == Polarization::CR)
      throw std::invalid_argument("composite inputs must be VV or VH scenes");
    Key key{static_cast<int>(std::chrono::sys_days(s.acquired).time_since_epoch().count()),
            s.acquisition_id, static_cast<int>(s.band)};
    if (!ordered.emplace(key, &s).second)
      throw std::invalid_argument("duplicate scene for one acquisition and band");
  }

  // Per dekad: VV, VH and CR contribution lists.
  struct DekadInputs {
    std::vector<const SceneGrid*> vv, vh;
    std::vector<SceneGrid> cr;
  };
  std::vector<DekadInputs> by_dekad(kDekadsPerYear);
  for (auto it = ordered.begin(); it != ordered.end(); ++it) {
    const SceneGrid* s = it->second;
    auto& slot = by_dekad[dekad_of(s->acquired)];
    if (s->band == Polarization::VV) {
      slot.vv.push_back(s);
      Key vh_key{std::get<0>(it->first), std::get<1>(it->first),
                 static_cast<int>(Polarization::VH)};
      if (auto pair = ordered.find(vh_key); pair != ordered.end())
        slot.cr.push_back(compute_cr(*s, *pair->second));
    } else {
      slot.vh.push_back(s);
    }
  }

  const std::size_t n = geometry.pixel_count();
  const std::size_t tile_rows = 16;
  const std::size_t tiles = (static_cast<std::size_t>(geometry.height) + tile_rows - 1) / tile_rows;
  parallel_for(tiles, threads, [&](std::size_t tile) {
    const std::size_t begin = tile * tile_rows * geometry.width;
    const std::size_t end = std::min(n, (tile + 1) * tile_rows * geometry.width);
    for (int d = 0; d < kDekadsPerYear; ++d) {
      const auto& in = by_dekad[d];
      for (std::size_t p = begin; p < end; ++p) {
        auto mean_of = [p](auto first, auto last, auto get) -> std::optional<double> {
          double sum = 0.0;
          std::size_t count = 0;
          for (auto it = first; it != last; ++it) {
            const SceneGrid& s = get(*it);
            if (!s.valid[p]) continue;
            sum += static_cast<double>(s.values[p]);
            ++count;
          }
          if (count == 0) return std::nullopt;
          return sum / static_cast<double>(count);
        };
        auto deref = [](const SceneGrid* s) -> const SceneGrid& { return *s; };
        auto self = [](const SceneGrid& s) -> const SceneGrid& { return s; };
        if (auto m = mean_of(in.vv.begin(), in.vv.end(), deref); m && *m > 0.0)
          cube.set(d, 0, p, static_cast<float>(to_db(*m)));
        if (auto m = mean_of(in.vh.begin(), in.vh.end(), deref); m && *m > 0.0)
          cube.set(d, 1, p, static_cast<float>(to_db(*m)));
        if (auto m = mean_of(in.cr.begin(), in.cr.end(), self))
          cube.set(d, 2, p, static_cast<float>(*m));
      }
    }
  });
  return cube;
}

}  // namespace cropmap
