#include "cropmap/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "cropmap/error.hpp"
#include "cropmap/io.hpp"
#include "cropmap/legend.hpp"
#include "cropmap/parallel.hpp"

namespace cropmap {

namespace fs = std::filesystem;

namespace {
constexpr std::pair<MaskReason, std::string_view> kReasonNames[] = {
    {MaskReason::None, "none"},       {MaskReason::NoData, "nodata"},
    {MaskReason::Terrain, "terrain"}, {MaskReason::Builtup, "builtup"},
    {MaskReason::Water, "water"},     {MaskReason::Auxiliary, "auxiliary"},
};
constexpr std::pair<MaskKind, std::string_view> kKindNames[] = {
    {MaskKind::Elevation, "elevation"}, {MaskKind::Slope, "slope"},
    {MaskKind::Builtup, "builtup"},     {MaskKind::Water, "water"},
    {MaskKind::Auxiliary, "auxiliary"},
};
}  // namespace

std::string_view mask_reason_name(MaskReason r) {
  for (auto [k, n] : kReasonNames)
    if (k == r) return n;
  return "unknown";
}

MaskReason parse_mask_reason(std::string_view text) {
  for (auto [k, n] : kReasonNames)
    if (n == text) return k;
  throw std::invalid_argument("unknown mask reason '" + std::string(text) + "'");
}

std::string_view mask_kind_name(MaskKind k) {
  for (auto [v, n] : kKindNames)
    if (v == k) return n;
  return "unknown";
}

MaskKind parse_mask_kind(std::string_view text) {
  for (auto [v, n] : kKindNames)
    if (n == text) return v;
  throw std::invalid_argument("unknown mask kind '" + std::string(text) + "'");
}

void ClassifiedMap::validate() const {
  if (codes.size() != geometry.pixel_count() || reasons.size() != geometry.pixel_count())
    throw std::invalid_argument("classified map size does not match its geometry");
  const auto& legend = StudyLegend::standard();
  for (std::size_t i = 0; i < codes.size(); ++i)
    if (reasons[i] == MaskReason::None && !legend.contains(codes[i]))
      throw std::invalid_argument("pixel " + std::to_string(i) + " holds non-legend code " +
                                  std::to_string(codes[i]));
}

bool low_confidence(ClassCode code) { return code == kArtificial || code == kBareLand; }

static void check_models(const std::map<Stratum, ForestModel>& models, const FeatureWindow& window,
                         int level) {
  const auto& legend = StudyLegend::standard();
  for (const auto& [s, m] : models) {
    const std::string what = "level-" + std::to_string(level) + " model for " +
                             std::string(stratum_name(s));
    if (m.n_features != window.feature_count() || m.feature_descriptor != window.descriptor())
      throw std::invalid_argument(what + " was trained on '" + m.feature_descriptor +
                                  "', not '" + window.descriptor() + "'");
    for (auto c : m.classes) {
      if (!legend.contains(c))
        throw std::invalid_argument(what + " predicts non-legend class " + std::to_string(c));
      const bool arable_child = level1_of(c) == kArable && c != kArable;
      if (level == 2 ? !arable_child : arable_child)
        throw std::invalid_argument(what + " predicts class " + std::to_string(c) +
                                    " outside its level");
    }
  }
}

ClassifiedMap classify_two_phase(const DekadalCube& cube,
                                 const std::map<Stratum, ForestModel>& level1,
                                 const std::map<Stratum, ForestModel>& level2,
                                 const StratumRaster& strata, const FeatureWindow& window,
                                 unsigned threads, ClassifyStats* stats) {
  window.validate();
  check_models(level1, window, 1);
  check_models(level2, window, 2);
  const auto& g = cube.geometry;
  // Stratum per pixel center; a gap anywhere is an error.
  std::vector<Stratum> stratum_of(g.pixel_count());
  for (int r = 0; r < g.height; ++r)
    for (int c = 0; c < g.width; ++c) {
      auto [x, y] = g.pixel_center(c, r);
      const Stratum s = assign_stratum(strata, Point{x, y});
      if (!level1.count(s))
        throw std::invalid_argument("no level-1 model for " + std::string(stratum_name(s)));
      stratum_of[g.index(c, r)] = s;
    }
  const FeatureMatrix features = slice_window(cube, window);

  ClassifiedMap map;
  map.geometry = g;
  map.codes.assign(g.pixel_count(), 0);
  map.reasons.assign(g.pixel_count(), MaskReason::None);
  std::atomic<std::size_t> l1{0}, l2{0}, nodata{0};
  constexpr int kTileRows = 16;
  const auto tiles = static_cast<std::size_t>((g.height + kTileRows - 1) / kTileRows);
  std::atomic<bool> missing_l2{false};
  Stratum missing_stratum = Stratum::Str1;
  parallel_for(tiles, threads, [&](std::size_t tile) {
    std::vector<double> scratch;
    std::size_t n1 = 0, n2 = 0, nd = 0;
    const int r0 = static_cast<int>(tile) * kTileRows;
    const int r1 = std::min(g.height, r0 + kTileRows);
    for (int r = r0; r < r1; ++r)
      for (int c = 0; c < g.width; ++c) {
        const std::size_t p = g.index(c, r);
        if (!features.row_valid[p]) {
          map.reasons[p] = MaskReason::NoData;
          ++nd;
          continue;
        }
        const Stratum s = stratum_of[p];
        ClassCode code = predict_code(level1.at(s), features.row(p), scratch);
        ++n1;
        if (code == kArable) {
          auto it = level2.find(s);
          if (it == level2.end()) {
            if (!missing_l2.exchange(true)) missing_stratum = s;
            continue;
          }
          code = predict_code(it->second, features.row(p), scratch);
          ++n2;
        }
        map.codes[p] = code;
      }
    l1 += n1;
    l2 += n2;
    nodata += nd;
  });
  if (missing_l2)
    throw std::invalid_argument("arable pixels in " + std::string(stratum_name(missing_stratum)) +
                                " but no level-2 model");
  if (stats) {
    stats->level1_calls = l1;
    stats->level2_calls = l2;
    stats->nodata_pixels = nodata;
  }
  map.provenance.emplace_back("window", window.descriptor());
  for (const auto& [s, m] : level1)
    map.provenance.emplace_back("level1." + std::string(stratum_name(s)),
                                "seed=" + std::to_string(m.seed) + ";" + m.hp.describe());
  for (const auto& [s, m] : level2)
    map.provenance.emplace_back("level2." + std::string(stratum_name(s)),
                                "seed=" + std::to_string(m.seed) + ";" + m.hp.describe());
  return map;
}

Raster<float> compute_slope(const Raster<float>& dem) {
  const auto& g = dem.geometry;
  if (g.width < 3 || g.height < 3) throw std::invalid_argument("slope needs a grid of at least 3x3");
  if (dem.values.size() != g.pixel_count()) throw std::invalid_argument("dem size mismatch");
  Raster<float> out(g, 0.0f);
  auto z = [&](int c, int r) {
    c = std::clamp(c, 0, g.width - 1);
    r = std::clamp(r, 0, g.height - 1);
    return static_cast<double>(dem.at(c, r));
  };
  const double d = g.pixel_size;
  for (int r = 0; r < g.height; ++r)
    for (int c = 0; c < g.width; ++c) {
      const double a = z(c - 1, r - 1), b = z(c, r - 1), cc = z(c + 1, r - 1);
      const double dd = z(c - 1, r), f = z(c + 1, r);
      const double gg = z(c - 1, r + 1), h = z(c, r + 1), i = z(c + 1, r + 1);
      const double gx = ((cc + 2 * f + i) - (a + 2 * dd + gg)) / (8 * d);
      const double gy = ((gg + 2 * h + i) - (a + 2 * b + cc)) / (8 * d);
      out.at(c, r) = static_cast<float>(std::atan(std::hypot(gx, gy)) * 180.0 / std::numbers::pi);
    }
  return out;
}

static MaskReason reason_for(MaskKind k) {
  switch (k) {
    case MaskKind::Elevation:
    case MaskKind::Slope: return MaskReason::Terrain;
    case MaskKind::Builtup: return MaskReason::Builtup;
    case MaskKind::Water: return MaskReason::Water;
    case MaskKind::Auxiliary: return MaskReason::Auxiliary;
  }
  return MaskReason::Auxiliary;
}

ClassifiedMap apply_masks(const ClassifiedMap& map, const std::vector<MaskLayer>& layers,
                          const MaskOptions& options) {
  ClassifiedMap out = map;
  const MaskLayer* elevation = nullptr;
  const MaskLayer* slope = nullptr;
  for (const auto& l : layers) {
    require_same_geometry(map.geometry, l.values.geometry, "mask layer");
    if (l.values.values.size() != map.geometry.pixel_count())
      throw std::invalid_argument("mask layer size mismatch");
    if (l.kind == MaskKind::Elevation) elevation = &l;
    if (l.kind == MaskKind::Slope) slope = &l;
  }
  auto mark = [&](std::size_t p, MaskReason r) {
    // Lower non-zero enum value wins.
    if (out.reasons[p] == MaskReason::None || r < out.reasons[p]) out.reasons[p] = r;
  };
  if (elevation || slope) {
    for (std::size_t p = 0; p < out.codes.size(); ++p) {
      const bool high = elevation && elevation->values.values[p] > options.elevation_limit;
      const bool steep = slope && slope->values.values[p] > options.slope_limit;
      bool hit;
      if (elevation && slope)
        hit = options.rule == TerrainRule::Conjunction ? (high && steep) : (high || steep);
      else
        hit = high || steep;
      if (hit) mark(p, MaskReason::Terrain);
    }
    std::string rule = elevation && slope
                           ? (options.rule == TerrainRule::Conjunction ? " and " : " or ")
                           : "";
    out.provenance.emplace_back(
        "mask.terrain",
        (elevation ? "elevation>" + format_double(options.elevation_limit) : std::string()) + rule +
            (slope ? "slope>" + format_double(options.slope_limit) : std::string()));
  }
  for (const auto& l : layers) {
    if (l.kind == MaskKind::Elevation || l.kind == MaskKind::Slope) continue;
    const MaskReason r = reason_for(l.kind);
    for (std::size_t p = 0; p < out.codes.size(); ++p)
      if (l.values.values[p] != 0.0f) mark(p, r);
    out.provenance.emplace_back("mask." + std::string(mask_kind_name(l.kind)), "nonzero");
  }
  return out;
}

std::vector<AreaRow> area_census(const ClassifiedMap& map) {
  std::map<ClassCode, std::size_t> counts;
  for (std::size_t p = 0; p < map.codes.size(); ++p)
    if (map.valid(p)) ++counts[map.codes[p]];
  std::vector<AreaRow> out;
  for (auto [code, n] : counts)
    out.push_back({code, n, static_cast<double>(n) * map.geometry.pixel_area_ha(), low_confidence(code)});
  return out;
}

std::map<MaskReason, std::size_t> reason_census(const ClassifiedMap& map) {
  std::map<MaskReason, std::size_t> out;
  for (auto r : map.reasons) ++out[r];
  return out;
}

void write_map(const fs::path& dir, const ClassifiedMap& map) {
  fs::create_directories(dir);
  Manifest m;
  m.set("kind", "classified_map");
  put_geometry(m, map.geometry);
  m.set("byte_order", "little");
  m.set("classes", "classes.u16");
  m.set("reasons", "reasons.u8");
  for (const auto& [k, v] : map.provenance) m.set("provenance." + k, v);
  write_u16(dir / "classes.u16", map.codes);
  std::vector<std::uint8_t> r(map.reasons.size());
  std::transform(map.reasons.begin(), map.reasons.end(), r.begin(),
                 [](MaskReason x) { return static_cast<std::uint8_t>(x); });
  write_u8(dir / "reasons.u8", r);
  m.write(dir / "map.manifest");
}

ClassifiedMap read_map(const fs::path& dir) {
  const auto manifest = dir / "map.manifest";
  if (!fs::exists(manifest)) throw MissingInputError("no map.manifest in " + dir.string());
  const Manifest m = Manifest::read(manifest);
  if (m.get_or("byte_order", "little") != "little") throw FormatError("unsupported byte order");
  ClassifiedMap map;
  map.geometry = geometry_from(m);
  const auto n = map.geometry.pixel_count();
  map.codes = read_u16(dir / m.get("classes"), n);
  const auto r = read_u8(dir / m.get("reasons"), n);
  map.reasons.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (r[i] > static_cast<std::uint8_t>(MaskReason::Auxiliary))
      throw FormatError(dir.string() + ": bad mask reason code " + std::to_string(r[i]));
    map.reasons[i] = static_cast<MaskReason>(r[i]);
  }
  for (const auto& [k, v] : m.entries())
    if (k.starts_with("provenance.")) map.provenance.emplace_back(k.substr(11), v);
  return map;
}

}  // namespace cropmap
