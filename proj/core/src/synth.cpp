#include "cropmap/synth.hpp"

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "cropmap/error.hpp"
#include "cropmap/io.hpp"
#include "cropmap/legend.hpp"
#include "cropmap/parallel.hpp"
#include "cropmap/random.hpp"

namespace cropmap {

namespace fs = std::filesystem;

double SeasonalCurve::at(double t) const {
  if (amplitude_db == 0.0) return baseline_db;
  const double k = (peak - onset) / (2.0 * std::log(19.0));
  const double rise = 1.0 / (1.0 + std::exp(-(t - (onset + peak) / 2.0) / k));
  const double fall = 1.0 / (1.0 + std::exp(-(t - senescence) / k));
  return baseline_db + amplitude_db * rise * (1.0 - fall);
}

void SeasonalCurve::validate() const {
  if (!(onset < peak && peak < senescence))
    throw std::invalid_argument("curve needs onset < peak < senescence");
  if (!std::isfinite(baseline_db) || !std::isfinite(amplitude_db))
    throw std::invalid_argument("curve levels must be finite");
}

double CropSignature::value(CubeBand band, double t, Stratum s) const {
  const double tt = s == Stratum::Str2 ? t - stratum2_shift : t;
  switch (band) {
    case CubeBand::VV_dB: return vv.at(tt);
    case CubeBand::VH_dB: return vh.at(tt);
    case CubeBand::CR: return std::pow(10.0, (vh.at(tt) - vv.at(tt)) / 10.0);
  }
  return 0.0;
}

void CropSignature::validate() const {
  vv.validate();
  vh.validate();
  if (!(sigma_db >= 0.0)) throw std::invalid_argument("sigma must be >= 0");
  if (!StudyLegend::standard().contains(code))
    throw std::invalid_argument("signature for non-legend class " + std::to_string(code));
}

namespace {

// Seasonal plateaus: early (dekads ~3-8), mid (~10-15), late (~17 on) and
// their contiguous unions. Woodland and grassland are already up in January.
enum class Span { None, E, M, L, EM, ML, EML, AllYear };

SeasonalCurve curve(Span s, double base, double amp) {
  switch (s) {
    case Span::None: return {base, 0.0, 0.0, 1.0, 2.0};
    case Span::E: return {base, amp, 1, 3, 9};
    case Span::M: return {base, amp, 8, 10, 16};
    case Span::L: return {base, amp, 15, 17, 30};
    case Span::EM: return {base, amp, 1, 3, 16};
    case Span::ML: return {base, amp, 8, 10, 30};
    case Span::EML: return {base, amp, 1, 3, 30};
    case Span::AllYear: return {base, amp, -10, -8, 60};
  }
  return {};
}

CropSignature crop(ClassCode code, Span vv, Span vh) {
  CropSignature s;
  s.code = code;
  s.vv = curve(vv, -17.0, 10.0);
  s.vh = curve(vh, -22.0, 12.0);
  return s;
}

}  // namespace

std::vector<CropSignature> default_signatures() {
  using S = Span;
  return {
      crop(211, S::M, S::EM),    // common wheat
      crop(212, S::E, S::None),  // durum wheat
      crop(213, S::None, S::EM), // barley
      crop(214, S::EM, S::M),    // rye
      crop(215, S::M, S::M),     // oats
      crop(216, S::L, S::L),     // maize
      crop(221, S::M, S::ML),    // potatoes
      crop(222, S::ML, S::L),    // sugar beet
      crop(231, S::None, S::L),  // sunflower
      crop(232, S::E, S::EML),   // rape, early VH rise
      crop(233, S::L, S::ML),    // soya
      crop(240, S::None, S::M),  // dry pulses
      crop(300, S::AllYear, S::AllYear),
      crop(500, S::None, S::AllYear),
  };
}

static const char* kSignatureHeader =
    "code,shift,sigma,vv_base,vv_amp,vv_onset,vv_peak,vv_senescence,"
    "vh_base,vh_amp,vh_onset,vh_peak,vh_senescence";

std::vector<CropSignature> read_signatures(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingInputError("cannot open signature file " + path.string());
  std::vector<CropSignature> out;
  std::string line;
  int lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    if (!header) {
      if (t != kSignatureHeader) throw FormatError(path.string() + ": unexpected signature header");
      header = true;
      continue;
    }
    const auto f = split_fields(t, ',');
    try {
      if (f.size() != 13) throw std::invalid_argument("expected 13 fields");
      std::vector<double> v;
      for (std::size_t i = 1; i < f.size(); ++i) v.push_back(parse_double(f[i]));
      CropSignature s;
      s.code = static_cast<ClassCode>(parse_int(f[0]));
      s.stratum2_shift = v[0];
      s.sigma_db = v[1];
      s.vv = {v[2], v[3], v[4], v[5], v[6]};
      s.vh = {v[7], v[8], v[9], v[10], v[11]};
      s.validate();
      out.push_back(s);
    } catch (const std::invalid_argument& e) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

void write_signatures(const fs::path& path, const std::vector<CropSignature>& sigs) {
  std::ostringstream os;
  os << kSignatureHeader << '\n';
  auto c = [&](const SeasonalCurve& k) {
    os << ',' << format_double(k.baseline_db) << ',' << format_double(k.amplitude_db) << ','
       << format_double(k.onset) << ',' << format_double(k.peak) << ',' << format_double(k.senescence);
  };
  for (const auto& s : sigs) {
    os << s.code << ',' << format_double(s.stratum2_shift) << ',' << format_double(s.sigma_db);
    c(s.vv);
    c(s.vh);
    os << '\n';
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream(path, std::ios::trunc) << os.str();
}

void SyntheticScenario::validate() const {
  geometry.validate();
  if (signatures.empty()) throw std::invalid_argument("scenario has no signatures");
  std::map<ClassCode, int> sig;
  for (const auto& s : signatures) {
    s.validate();
    if (!sig.emplace(s.code, 0).second)
      throw std::invalid_argument("duplicate signature for class " + std::to_string(s.code));
  }
  std::vector<int> owner(geometry.pixel_count(), -1);
  for (std::size_t k = 0; k < parcels.size(); ++k) {
    const auto& p = parcels[k];
    if (!sig.count(p.code))
      throw std::invalid_argument("parcel " + p.id + ": no signature for class " + std::to_string(p.code));
    if (p.width < 1 || p.height < 1 || p.col < 0 || p.row < 0 || p.col + p.width > geometry.width ||
        p.row + p.height > geometry.height)
      throw std::invalid_argument("parcel " + p.id + " lies outside the grid");
    const bool top = p.row + p.height <= stratum_split_row;
    const bool bottom = p.row >= stratum_split_row;
    if ((p.stratum == Stratum::Str1 && !top) || (p.stratum == Stratum::Str2 && !bottom))
      throw std::invalid_argument("parcel " + p.id + " crosses or contradicts the stratum split");
    for (int r = p.row; r < p.row + p.height; ++r)
      for (int c = p.col; c < p.col + p.width; ++c) {
        auto& o = owner[geometry.index(c, r)];
        if (o >= 0) throw std::invalid_argument("parcels " + parcels[static_cast<std::size_t>(o)].id +
                                                " and " + p.id + " overlap");
        o = static_cast<int>(k);
      }
  }
  std::vector<std::string> ids;
  for (const auto& p : parcels) ids.push_back(p.id);
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
    throw std::invalid_argument("duplicate parcel id");
}

SyntheticScenario read_scenario(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingInputError("cannot open scenario " + path.string());
  SyntheticScenario s;
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  bool in_parcels = false, header = false;
  auto where = [&] { return path.string() + ":" + std::to_string(lineno) + ": "; };
  while (std::getline(in, line)) {
    ++lineno;
    auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    if (t == "[parcels]") {
      in_parcels = true;
      continue;
    }
    try {
      if (!in_parcels) {
        const auto eq = t.find('=');
        if (eq == std::string_view::npos) throw FormatError(where() + "expected key=value");
        kv[std::string(trim(t.substr(0, eq)))] = std::string(trim(t.substr(eq + 1)));
        continue;
      }
      const auto f = split_fields(t, ',');
      if (!header) {
        if (f != std::vector<std::string>{"id", "class", "stratum", "col", "row", "width", "height"})
          throw FormatError(where() + "parcel header must be id,class,stratum,col,row,width,height");
        header = true;
        continue;
      }
      if (f.size() != 7) throw FormatError(where() + "expected 7 parcel fields");
      SynthParcel p;
      p.id = f[0];
      p.code = static_cast<ClassCode>(parse_int(f[1]));
      p.stratum = parse_stratum(f[2]);
      p.col = static_cast<int>(parse_int(f[3]));
      p.row = static_cast<int>(parse_int(f[4]));
      p.width = static_cast<int>(parse_int(f[5]));
      p.height = static_cast<int>(parse_int(f[6]));
      s.parcels.push_back(p);
    } catch (const std::invalid_argument& e) {
      throw FormatError(where() + e.what());
    }
  }
  try {
    auto num = [&](const char* key, double fallback) {
      auto it = kv.find(key);
      return it == kv.end() ? fallback : parse_double(it->second);
    };
    s.geometry.width = static_cast<int>(num("width", s.geometry.width));
    s.geometry.height = static_cast<int>(num("height", s.geometry.height));
    s.geometry.pixel_size = num("pixel_size", s.geometry.pixel_size);
    s.geometry.origin_x = num("origin_x", s.geometry.origin_x);
    s.geometry.origin_y = num("origin_y", s.geometry.origin_y);
    s.year = static_cast<int>(num("year", s.year));
    s.stratum_split_row = static_cast<int>(num("stratum_split_row", s.geometry.height / 2.0));
    if (kv.count("seed")) s.seed = std::stoull(kv["seed"]);
    const std::string sig = kv.count("signatures") ? kv["signatures"] : "default";
    s.signatures = sig == "default" ? default_signatures() : read_signatures(path.parent_path() / sig);
    if (kv.count("sigma_db"))
      for (auto& g : s.signatures) g.sigma_db = parse_double(kv["sigma_db"]);
    if (kv.count("stratum2_shift"))
      for (auto& g : s.signatures) g.stratum2_shift = parse_double(kv["stratum2_shift"]);
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return s;
}

void write_scenario(const fs::path& path, const SyntheticScenario& s, std::string_view signatures_ref) {
  std::ostringstream os;
  os << "width=" << s.geometry.width << "\nheight=" << s.geometry.height
     << "\npixel_size=" << format_double(s.geometry.pixel_size)
     << "\norigin_x=" << format_double(s.geometry.origin_x)
     << "\norigin_y=" << format_double(s.geometry.origin_y) << "\nyear=" << s.year
     << "\nseed=" << s.seed << "\nstratum_split_row=" << s.stratum_split_row
     << "\nsignatures=" << signatures_ref << "\n\n[parcels]\nid,class,stratum,col,row,width,height\n";
  for (const auto& p : s.parcels)
    os << p.id << ',' << p.code << ',' << stratum_name(p.stratum) << ',' << p.col << ',' << p.row
       << ',' << p.width << ',' << p.height << '\n';
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream(path, std::ios::trunc) << os.str();
}

SyntheticScenario standard_scenario(std::uint64_t seed) {
  SyntheticScenario s;
  s.seed = seed;
  s.signatures = default_signatures();
  s.stratum_split_row = 32;
  // Woodland and grassland first so they get the spare third parcel.
  std::vector<ClassCode> order{300, 500};
  for (const auto& g : s.signatures)
    if (g.code != 300 && g.code != 500) order.push_back(g.code);
  const int widths[10] = {6, 6, 6, 7, 6, 7, 6, 7, 6, 7};
  for (int r = 0; r < 8; ++r) {
    int col = 0;
    for (int c = 0; c < 10; ++c) {
      const int k = (r % 4) * 10 + c;  // index within the stratum
      const bool south = r >= 4;
      SynthParcel p;
      char id[16];
      std::snprintf(id, sizeof id, "p%02d", r * 10 + c);
      p.id = id;
      // The south rotates the class order so different classes get two parcels.
      p.code = order[static_cast<std::size_t>((k * 3 + (south ? 7 : 0)) % 14)];
      p.stratum = south ? Stratum::Str2 : Stratum::Str1;
      p.col = col;
      p.row = r * 8;
      p.width = widths[c];
      p.height = 8;
      col += widths[c];
      s.parcels.push_back(p);
    }
  }
  return s;
}

SyntheticOutput generate(const SyntheticScenario& scenario, unsigned threads) {
  scenario.validate();
  const auto& g = scenario.geometry;
  SyntheticOutput out;
  out.cube = DekadalCube::empty(g, scenario.year, {CubeBand::VV_dB, CubeBand::VH_dB, CubeBand::CR});
  out.truth = Raster<std::uint16_t>(g, 0);
  out.strata.cells = Raster<std::uint8_t>(g, 1);
  for (int r = scenario.stratum_split_row; r < g.height; ++r)
    for (int c = 0; c < g.width; ++c) out.strata.cells.at(c, r) = 2;

  std::map<ClassCode, const CropSignature*> sig;
  for (const auto& s : scenario.signatures) sig[s.code] = &s;

  parallel_for(scenario.parcels.size(), threads, [&](std::size_t k) {
    const auto& p = scenario.parcels[k];
    const CropSignature& s = *sig.at(p.code);
    for (int r = p.row; r < p.row + p.height; ++r)
      for (int c = p.col; c < p.col + p.width; ++c) {
        const std::size_t px = g.index(c, r);
        out.truth.values[px] = p.code;
        Rng rng(derive_seed(scenario.seed, px));
        for (int d = 0; d < kDekadsPerYear; ++d) {
          const double vv = s.value(CubeBand::VV_dB, d, p.stratum) + s.sigma_db * rng.normal();
          const double vh = s.value(CubeBand::VH_dB, d, p.stratum) + s.sigma_db * rng.normal();
          out.cube.set(d, 0, px, static_cast<float>(vv));
          out.cube.set(d, 1, px, static_cast<float>(vh));
          out.cube.set(d, 2, px, static_cast<float>(std::pow(10.0, (vh - vv) / 10.0)));
        }
      }
  });

  for (const auto& p : scenario.parcels) {
    LabeledPolygon poly;
    poly.id = p.id;
    poly.code = p.code;
    poly.stratum = p.stratum;
    const double x0 = g.origin_x + p.col * g.pixel_size, x1 = x0 + p.width * g.pixel_size;
    const double y0 = g.origin_y - p.row * g.pixel_size, y1 = y0 - p.height * g.pixel_size;
    poly.ring = {{x0, y1}, {x1, y1}, {x1, y0}, {x0, y0}};
    out.polygons.push_back(std::move(poly));
  }
  return out;
}

}  // namespace cropmap
