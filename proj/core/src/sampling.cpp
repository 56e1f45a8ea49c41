#include "cropmap/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "cropmap/error.hpp"
#include "cropmap/io.hpp"
#include "cropmap/parallel.hpp"
#include "cropmap/random.hpp"

namespace cropmap {

namespace fs = std::filesystem;

void LabeledPolygon::validate() const {
  const auto r = normalize_ring(ring);
  if (r.size() < 3) throw std::invalid_argument("polygon " + id + ": fewer than 3 vertices");
  if (!is_simple(r)) throw std::invalid_argument("polygon " + id + ": ring self-intersects");
  const double a = ring_area(r);
  if (!(a > 0.0)) throw std::invalid_argument("polygon " + id + ": zero area");
  if (in_situ_survey && a < kInSituMmuM2)
    throw std::invalid_argument("polygon " + id + ": below the in-situ minimum mapping unit");
}

std::vector<LabeledPolygon> read_polygons(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingInputError("cannot open polygon file " + path.string());
  std::vector<LabeledPolygon> out;
  std::string line;
  int lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto f = split_fields(t, ',');
    auto where = [&] { return path.string() + ":" + std::to_string(lineno) + ": "; };
    if (!header) {
      header = true;
      if (f.size() < 4 || f[0] != "id") throw FormatError(where() + "missing header id,class,stratum,vertices");
      continue;
    }
    if (f.size() != 4 && f.size() != 5) throw FormatError(where() + "expected 4 or 5 fields");
    LabeledPolygon p;
    try {
      p.id = f[0];
      p.code = static_cast<ClassCode>(parse_int(f[1]));
      p.stratum = parse_stratum(f[2]);
      for (const auto& v : split_fields(f[3], ';')) {
        if (v.empty()) continue;
        auto xy = split_fields(v, ' ');
        xy.erase(std::remove(xy.begin(), xy.end(), std::string()), xy.end());
        if (xy.size() != 2) throw std::invalid_argument("vertex must be 'x y'");
        p.ring.push_back({parse_double(xy[0]), parse_double(xy[1])});
      }
      if (f.size() == 5) p.in_situ_survey = parse_int(f[4]) != 0;
      p.ring = normalize_ring(p.ring);
      p.validate();
    } catch (const std::invalid_argument& e) {
      throw FormatError(where() + e.what());
    }
    out.push_back(std::move(p));
  }
  return out;
}

void write_polygons(const fs::path& path, std::span<const LabeledPolygon> polygons) {
  std::ostringstream os;
  os << "id,class,stratum,vertices,in_situ\n";
  for (const auto& p : polygons) {
    os << p.id << ',' << p.code << ',' << stratum_name(p.stratum) << ',';
    for (std::size_t i = 0; i < p.ring.size(); ++i) {
      if (i) os << ';';
      os << format_double(p.ring[i].x) << ' ' << format_double(p.ring[i].y);
    }
    os << ',' << (p.in_situ_survey ? 1 : 0) << '\n';
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream(path, std::ios::trunc) << os.str();
}

std::string_view sample_mode_name(SampleMode m) {
  return m == SampleMode::PerPixel ? "per-pixel" : "polygon-averaged";
}

SampleMode parse_sample_mode(std::string_view text) {
  if (text == "per-pixel" || text == "pixel") return SampleMode::PerPixel;
  if (text == "polygon-averaged" || text == "averaged") return SampleMode::PolygonAveraged;
  throw std::invalid_argument("unknown sample mode '" + std::string(text) + "'");
}

std::vector<ClassCode> SampleSet::labels() const {
  std::vector<ClassCode> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.code);
  return out;
}

std::vector<ClassCode> SampleSet::classes() const {
  std::set<ClassCode> s;
  for (const auto& r : rows) s.insert(r.code);
  return {s.begin(), s.end()};
}

void SampleSet::append(const SampleSet& other, std::size_t i) {
  rows.push_back(other.rows[i]);
  auto r = other.row(i);
  features.insert(features.end(), r.begin(), r.end());
}

SampleSet SampleSet::empty_like() const {
  SampleSet s;
  s.window = window;
  s.mode = mode;
  return s;
}

SampleSet SampleSet::select(const FeatureWindow& sub) const {
  const auto pos = sub.positions_in(window);
  SampleSet out;
  out.window = sub;
  out.mode = mode;
  out.rows = rows;
  out.features.reserve(rows.size() * pos.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto r = row(i);
    for (auto p : pos) out.features.push_back(r[p]);
  }
  return out;
}

SampleSet extract_samples(const DekadalCube& cube, std::span<const LabeledPolygon> polygons,
                          const FeatureWindow& window, SampleMode mode, unsigned threads) {
  if (polygons.empty()) throw std::invalid_argument("extract_samples: empty polygon list");
  FeatureMatrix m = slice_window(cube, window);

  std::vector<const LabeledPolygon*> order;
  for (const auto& p : polygons) order.push_back(&p);
  std::sort(order.begin(), order.end(),
            [](auto* a, auto* b) { return a->id < b->id; });
  for (std::size_t i = 1; i < order.size(); ++i)
    if (order[i]->id == order[i - 1]->id)
      throw std::invalid_argument("duplicate polygon id " + order[i]->id);

  const std::size_t nf = window.feature_count();
  std::vector<SampleSet> parts(order.size());
  parallel_for(order.size(), threads, [&](std::size_t k) {
    const LabeledPolygon& poly = *order[k];
    SampleSet& part = parts[k];
    const auto pixels = rasterize(poly.ring, cube.geometry);
    SampleRow meta{poly.id, poly.code, poly.stratum, 1};
    if (mode == SampleMode::PerPixel) {
      for (auto p : pixels) {
        if (!m.row_valid[p]) continue;
        part.rows.push_back(meta);
        auto r = m.row(p);
        part.features.insert(part.features.end(), r.begin(), r.end());
      }
    } else {
      std::vector<double> sum(nf, 0.0);
      std::uint32_t count = 0;
      for (auto p : pixels) {
        if (!m.row_valid[p]) continue;
        auto r = m.row(p);
        for (std::size_t j = 0; j < nf; ++j) sum[j] += r[j];
        ++count;
      }
      if (count > 0) {
        meta.pixels = count;
        part.rows.push_back(meta);
        for (std::size_t j = 0; j < nf; ++j)
          part.features.push_back(static_cast<float>(sum[j] / count));
      }
    }
  });

  SampleSet out;
  out.window = window;
  out.mode = mode;
  for (auto& part : parts) {
    if (part.rows.empty()) {
      ++out.dropped_polygons;
      continue;
    }
    out.rows.insert(out.rows.end(), part.rows.begin(), part.rows.end());
    out.features.insert(out.features.end(), part.features.begin(), part.features.end());
  }
  return out;
}

void write_samples(const fs::path& path, const SampleSet& s) {
  std::ostringstream os;
  os << "#mode=" << sample_mode_name(s.mode) << '\n';
  os << "#window=" << s.window.descriptor() << '\n';
  os << "polygon_id,class,stratum,pixels";
  for (const auto& name : s.window.feature_names()) os << ',' << name;
  os << '\n';
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto& r = s.rows[i];
    os << r.polygon_id << ',' << r.code << ',' << stratum_name(r.stratum) << ',' << r.pixels;
    for (float v : s.row(i)) os << ',' << format_float(v);
    os << '\n';
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream(path, std::ios::trunc) << os.str();
}

SampleSet read_samples(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingInputError("cannot open sample file " + path.string());
  SampleSet s;
  bool have_window = false, have_header = false;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto t = trim(line);
    if (t.empty()) continue;
    auto where = [&] { return path.string() + ":" + std::to_string(lineno) + ": "; };
    try {
      if (t.front() == '#') {
        if (t.starts_with("#mode=")) s.mode = parse_sample_mode(t.substr(6));
        if (t.starts_with("#window=")) {
          s.window = FeatureWindow::parse(t.substr(8));
          have_window = true;
        }
        continue;
      }
      auto f = split_fields(t, ',');
      if (!have_header) {
        if (!have_window) throw FormatError(where() + "missing #window= line");
        const auto names = s.window.feature_names();
        if (f.size() != 4 + names.size() || f[0] != "polygon_id")
          throw FormatError(where() + "header does not match the declared window");
        for (std::size_t j = 0; j < names.size(); ++j)
          if (f[4 + j] != names[j]) throw FormatError(where() + "unexpected column " + f[4 + j]);
        have_header = true;
        continue;
      }
      if (f.size() != 4 + s.feature_count()) throw FormatError(where() + "wrong field count");
      SampleRow r{f[0], static_cast<ClassCode>(parse_int(f[1])), parse_stratum(f[2]),
                  static_cast<std::uint32_t>(parse_int(f[3]))};
      s.rows.push_back(r);
      for (std::size_t j = 4; j < f.size(); ++j) {
        const double v = parse_double(f[j]);
        if (!std::isfinite(v)) throw FormatError(where() + "non-finite feature");
        s.features.push_back(static_cast<float>(v));
      }
    } catch (const std::invalid_argument& e) {
      throw FormatError(where() + e.what());
    }
  }
  if (!have_header) throw FormatError(path.string() + ": no sample header");
  return s;
}

Stratum assign_stratum(const StratumRaster& strata, Point p) {
  const auto& g = strata.cells.geometry;
  if (g.pixel_count() == 0 || strata.cells.values.size() != g.pixel_count())
    throw std::invalid_argument("stratum raster is empty");
  auto cell = g.cell_of(p.x, p.y);
  if (!cell) throw std::invalid_argument("location outside stratum raster coverage");
  const auto v = strata.cells.at(cell->first, cell->second);
  if (v == 1) return Stratum::Str1;
  if (v == 2) return Stratum::Str2;
  throw std::invalid_argument("stratum raster has no stratum at this location");
}

Stratum assign_stratum(const StratumRaster& strata, const LabeledPolygon& polygon) {
  return assign_stratum(strata, centroid(normalize_ring(polygon.ring)));
}

StratumRaster read_strata(const fs::path& manifest) {
  auto r = read_raster_u16(manifest);
  StratumRaster s;
  s.cells.geometry = r.geometry;
  s.cells.values.reserve(r.values.size());
  for (auto v : r.values) {
    if (v > 2) throw FormatError(manifest.string() + ": stratum values must be 0, 1 or 2");
    s.cells.values.push_back(static_cast<std::uint8_t>(v));
  }
  return s;
}

void write_strata(const fs::path& manifest, const StratumRaster& strata) {
  write_raster(manifest, strata.cells);
}

SplitResult split_polygons(const SampleSet& samples, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0))
    throw std::invalid_argument("split fraction must be in (0, 1)");
  std::map<std::string, ClassCode> polygon_class;
  for (const auto& r : samples.rows) {
    auto [it, inserted] = polygon_class.emplace(r.polygon_id, r.code);
    if (!inserted && it->second != r.code)
      throw std::invalid_argument("polygon " + r.polygon_id + " has rows of two classes");
  }
  std::map<ClassCode, std::vector<std::string>> by_class;
  for (const auto& [id, code] : polygon_class) by_class[code].push_back(id);

  SplitResult result;
  std::set<std::string> train_ids;
  for (auto& [code, ids] : by_class) {
    if (ids.size() == 1) {
      train_ids.insert(ids[0]);
      result.warnings.push_back("class " + std::to_string(code) +
                                " has a single polygon; assigned to train");
      continue;
    }
    Rng rng(derive_seed(seed, code));
    rng.shuffle(std::span<std::string>(ids));
    const auto n_train = static_cast<std::size_t>(
        std::lround(fraction * static_cast<double>(ids.size())));
    for (std::size_t i = 0; i < n_train && i < ids.size(); ++i) train_ids.insert(ids[i]);
  }
  result.train = samples.filter([&](const SampleRow& r) { return train_ids.count(r.polygon_id) > 0; });
  result.test = samples.filter([&](const SampleRow& r) { return train_ids.count(r.polygon_id) == 0; });
  return result;
}

std::vector<CensusRow> census(const SampleSet& samples) {
  std::map<std::pair<ClassCode, Stratum>, std::pair<std::set<std::string>, std::size_t>> acc;
  for (const auto& r : samples.rows) {
    auto& a = acc[{r.code, r.stratum}];
    a.first.insert(r.polygon_id);
    a.second += r.pixels;
  }
  std::vector<CensusRow> out;
  for (const auto& [key, a] : acc)
    out.push_back({key.first, key.second, a.first.size(), a.second});
  return out;
}

}  // namespace cropmap
