#include "cropmap/validation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "cropmap/error.hpp"
#include "cropmap/io.hpp"

namespace cropmap {

namespace fs = std::filesystem;

namespace {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::pair<int, std::vector<std::string>>> rows;  // line number, fields

  std::size_t column(std::string_view name, const fs::path& path) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
      throw FormatError(path.string() + ": missing column '" + std::string(name) + "'");
    return static_cast<std::size_t>(it - header.begin());
  }
  std::optional<std::size_t> find(std::string_view name) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
  }
};

CsvTable read_csv(const fs::path& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw MissingInputError(std::string("cannot open ") + what + " " + path.string());
  CsvTable t;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto s = trim(line);
    if (s.empty() || s.front() == '#') continue;
    auto f = split_fields(s, ',');
    if (t.header.empty()) {
      t.header = std::move(f);
      continue;
    }
    if (f.size() != t.header.size())
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                        std::to_string(t.header.size()) + " fields");
    t.rows.emplace_back(lineno, std::move(f));
  }
  if (t.header.empty()) throw FormatError(path.string() + ": no header");
  return t;
}

bool parse_flag(std::string_view v) {
  if (v == "1" || v == "true" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "no") return false;
  throw std::invalid_argument("expected a 0/1 flag, got '" + std::string(v) + "'");
}

std::vector<Point> parse_ring(std::string_view text) {
  std::vector<Point> ring;
  for (const auto& v : split_fields(text, ';')) {
    if (v.empty()) continue;
    auto xy = split_fields(v, ' ');
    xy.erase(std::remove(xy.begin(), xy.end(), std::string()), xy.end());
    if (xy.size() != 2) throw std::invalid_argument("vertex must be 'x y'");
    ring.push_back({parse_double(xy[0]), parse_double(xy[1])});
  }
  return normalize_ring(ring);
}

}  // namespace

std::vector<LucasPoint> read_points(const fs::path& path) {
  const auto t = read_csv(path, "point file");
  const auto id = t.column("id", path), x = t.column("x", path), y = t.column("y", path),
             cls = t.column("class", path), situ = t.column("in_situ", path),
             direct = t.column("direct", path), ha = t.column("parcel_ha", path),
             homo = t.column("homogeneous", path), train = t.column("in_training", path);
  std::vector<LucasPoint> out;
  for (const auto& [lineno, f] : t.rows) {
    try {
      LucasPoint p;
      p.id = f[id];
      p.location = {parse_double(f[x]), parse_double(f[y])};
      p.code = static_cast<ClassCode>(parse_int(f[cls]));
      p.in_situ = parse_flag(f[situ]);
      p.direct = parse_flag(f[direct]);
      p.parcel_ha = parse_double(f[ha]);
      p.homogeneous = parse_flag(f[homo]);
      p.in_training = parse_flag(f[train]);
      out.push_back(std::move(p));
    } catch (const std::invalid_argument& e) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

void write_points(const fs::path& path, const std::vector<LucasPoint>& points) {
  std::ostringstream os;
  os << "id,x,y,class,in_situ,direct,parcel_ha,homogeneous,in_training\n";
  for (const auto& p : points)
    os << p.id << ',' << format_double(p.location.x) << ',' << format_double(p.location.y) << ','
       << p.code << ',' << p.in_situ << ',' << p.direct << ',' << format_double(p.parcel_ha) << ','
       << p.homogeneous << ',' << p.in_training << '\n';
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream(path, std::ios::trunc) << os.str();
}

FilterResult filter_lucas_points(const std::vector<LucasPoint>& points, const PointFilter& filter) {
  FilterResult r;
  for (const auto& p : points) {
    if (!p.in_situ) ++r.dropped_not_in_situ;
    else if (!p.direct) ++r.dropped_not_direct;
    else if (p.parcel_ha < filter.min_parcel_ha) ++r.dropped_small_parcel;
    else if (!p.homogeneous) ++r.dropped_heterogeneous;
    else if (p.in_training) ++r.dropped_in_training;
    else r.kept.push_back(p);
  }
  return r;
}

PointConfusion confusion_from_points(const ClassifiedMap& map,
                                     const std::vector<LucasPoint>& points) {
  if (points.empty()) throw std::invalid_argument("no reference points");
  std::vector<std::pair<ClassCode, ClassCode>> pairs;
  PointConfusion out;
  for (const auto& p : points) {
    auto cell = map.geometry.cell_of(p.location.x, p.location.y);
    if (!cell) {
      ++out.excluded_outside;
      continue;
    }
    const auto px = map.geometry.index(cell->first, cell->second);
    if (!map.valid(px)) {
      ++out.excluded_masked;
      continue;
    }
    pairs.emplace_back(map.codes[px], p.code);
  }
  std::set<ClassCode> cls;
  for (auto [m, r] : pairs) {
    cls.insert(m);
    cls.insert(r);
  }
  out.matrix = CountMatrix(std::vector<ClassCode>(cls.begin(), cls.end()));
  for (auto [m, r] : pairs) out.matrix.add(m, r);
  out.used = pairs.size();
  return out;
}

std::vector<ParcelRecord> read_parcels(const fs::path& path, const LegendCatalog* catalog) {
  const auto t = read_csv(path, "parcel file");
  const auto id = t.column("id", path), region = t.column("region", path),
             declared = t.column("declared", path), vertices = t.column("vertices", path);
  std::vector<ParcelRecord> out;
  for (const auto& [lineno, f] : t.rows) {
    try {
      ParcelRecord p;
      p.id = f[id];
      p.region = f[region];
      p.declared = f[declared];
      p.ring = parse_ring(f[vertices]);
      if (p.ring.size() < 3 || !(p.area_ha() > 0)) throw std::invalid_argument("degenerate parcel");
      const std::string scheme = "gsaa:" + p.region;
      if (catalog && catalog->has(scheme)) {
        p.code = catalog->scheme(scheme).map_code(p.declared);
      } else {
        const auto c = static_cast<ClassCode>(parse_int(p.declared));
        if (StudyLegend::standard().contains(c)) p.code = c;
      }
      out.push_back(std::move(p));
    } catch (const std::invalid_argument& e) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::optional<ClassCode> parcel_mode(const ClassifiedMap& map, const std::vector<Point>& ring,
                                     double max_masked_share, bool* too_masked) {
  if (too_masked) *too_masked = false;
  const auto pixels = rasterize(ring, map.geometry);
  if (pixels.empty()) return std::nullopt;
  std::map<ClassCode, std::size_t> votes;
  std::size_t masked = 0;
  for (auto p : pixels) {
    if (map.valid(p)) ++votes[map.codes[p]];
    else ++masked;
  }
  if (static_cast<double>(masked) > max_masked_share * static_cast<double>(pixels.size())) {
    if (too_masked) *too_masked = true;
    return std::nullopt;
  }
  std::optional<ClassCode> best;
  std::size_t best_n = 0;
  for (auto [code, n] : votes)
    if (n > best_n) {
      best = code;
      best_n = n;
    }
  return best;
}

std::vector<RegionParcelResult> parcel_majority(const ClassifiedMap& map,
                                                const std::vector<ParcelRecord>& parcels,
                                                const ParcelOptions& options) {
  std::map<std::string, std::vector<const ParcelRecord*>> by_region;
  for (const auto& p : parcels) by_region[p.region].push_back(&p);

  std::vector<RegionParcelResult> out;
  for (const auto& [region, list] : by_region) {
    RegionParcelResult r;
    r.region = region;
    std::map<ClassCode, double> declared_area;
    double total_area = 0.0;
    for (const auto* p : list) {
      if (!p->code) continue;
      declared_area[*p->code] += p->area_ha();
      total_area += p->area_ha();
    }
    std::set<ClassCode> kept;
    for (auto [code, a] : declared_area) {
      if (a < options.min_area_share * total_area) r.small_classes.push_back(code);
      else kept.insert(code);
    }
    std::vector<std::pair<ClassCode, ClassCode>> pairs;  // (mode, declared)
    std::set<ClassCode> cls = kept;
    for (const auto* p : list) {
      if (!p->code) {
        ++r.excluded_unmapped;
        continue;
      }
      if (!kept.count(*p->code)) {
        ++r.excluded_small_class;
        continue;
      }
      bool too_masked = false;
      const auto mode = parcel_mode(map, p->ring, options.max_masked_share, &too_masked);
      if (!mode) {
        ++(too_masked ? r.excluded_masked : r.excluded_no_pixels);
        continue;
      }
      pairs.emplace_back(*mode, *p->code);
      cls.insert(*mode);
    }
    CountMatrix full(std::vector<ClassCode>(cls.begin(), cls.end()));
    for (auto [m, d] : pairs) full.add(m, d);
    r.matrix = full.without(options.drop_classes);
    r.parcels_used = static_cast<std::size_t>(r.matrix.total());
    r.metrics = count_metrics(r.matrix);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<RegionAreaPair> read_reported_areas(const fs::path& path, const LegendMapping* mapping) {
  const auto t = read_csv(path, "reported area file");
  const auto region = t.column("region", path), area = t.column("reported_kha", path);
  const auto cls = t.find("class");
  const auto source = t.find("source_code");
  if (!cls && !source) throw FormatError(path.string() + ": needs a class or source_code column");
  if (!cls && !mapping)
    throw FormatError(path.string() + ": source_code column needs a legend mapping");
  std::map<std::pair<int, ClassCode>, double> acc;
  for (const auto& [lineno, f] : t.rows) {
    try {
      const int reg = static_cast<int>(parse_int(f[region]));
      const double kha = parse_double(f[area]);
      if (!(kha >= 0)) throw std::invalid_argument("reported area must be >= 0");
      std::optional<ClassCode> code;
      if (cls) code = static_cast<ClassCode>(parse_int(f[*cls]));
      else code = mapping->map_code(f[*source]);
      if (!code) continue;  // source crop outside the study legend
      acc[{reg, *code}] += kha;
    } catch (const std::invalid_argument& e) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  std::vector<RegionAreaPair> out;
  for (const auto& [k, v] : acc) out.push_back({k.first, k.second, v, 0.0});
  return out;
}

std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("pearson: length mismatch");
  const std::size_t n = x.size();
  if (n < 2) return std::nullopt;
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0) || !(syy > 0)) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

ZonalResult zonal_area_compare(const ClassifiedMap& map, const Raster<std::uint16_t>& regions,
                               const std::vector<RegionAreaPair>& reported) {
  require_same_geometry(map.geometry, regions.geometry, "region raster");
  std::map<std::pair<int, ClassCode>, std::size_t> pixels;
  for (std::size_t p = 0; p < map.codes.size(); ++p) {
    if (!map.valid(p) || regions.values[p] == 0) continue;
    ++pixels[{regions.values[p], map.codes[p]}];
  }
  const double kha_per_pixel = map.geometry.pixel_area_ha() / 1000.0;
  ZonalResult out;
  std::map<ClassCode, std::pair<std::vector<double>, std::vector<double>>> series;
  std::set<std::pair<int, ClassCode>> seen;
  auto sorted = reported;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    return std::pair(a.code, a.region) < std::pair(b.code, b.region);
  });
  for (const auto& rp : sorted) {
    if (!seen.insert({rp.region, rp.code}).second)
      throw std::invalid_argument("duplicate reported area for region " + std::to_string(rp.region) +
                                  ", class " + std::to_string(rp.code));
    auto it = pixels.find({rp.region, rp.code});
    const double mapped = it == pixels.end() ? 0.0 : static_cast<double>(it->second) * kha_per_pixel;
    ZonalRow row{rp.region, rp.code, rp.reported_kha, mapped, std::nullopt};
    if (rp.reported_kha != 0.0)
      row.relative_difference = (rp.reported_kha - mapped) / rp.reported_kha * 100.0;
    out.rows.push_back(row);
    series[rp.code].first.push_back(rp.reported_kha);
    series[rp.code].second.push_back(mapped);
  }
  for (const auto& [code, xy] : series)
    out.crops.push_back({code, xy.first.size(), pearson(xy.first, xy.second)});
  return out;
}

}  // namespace cropmap
