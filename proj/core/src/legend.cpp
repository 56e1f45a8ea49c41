#include "cropmap/legend.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "cropmap/error.hpp"
#include "cropmap/io.hpp"

namespace cropmap {

namespace fs = std::filesystem;

StudyLegend::StudyLegend()
    : classes_{
          {100, "Artificial land", 100, std::nullopt},
          {200, "Arable land", 200, std::nullopt},
          {211, "Common wheat", 200, 210},
          {212, "Durum wheat", 200, 210},
          {213, "Barley", 200, 210},
          {214, "Rye", 200, 210},
          {215, "Oats", 200, 210},
          {216, "Maize", 200, 210},
          {217, "Rice", 200, 210},
          {218, "Triticale", 200, 210},
          {219, "Other cereals", 200, 210},
          {221, "Potatoes", 200, 220},
          {222, "Sugar beet", 200, 220},
          {223, "Other root crops", 200, 220},
          {230, "Other non permanent industrial crops", 200, 230},
          {231, "Sunflower", 200, 230},
          {232, "Rape and turnip rape", 200, 230},
          {233, "Soya", 200, 230},
          {240, "Dry pulses, vegetables and flowers", 200, 240},
          {250, "Other fodder crops", 200, 250},
          {290, "Bare arable land", 200, 290},
          {300, "Woodland and shrubland", 300, std::nullopt},
          {500, "Grassland", 500, std::nullopt},
          {600, "Bare land and lichens/moss", 600, std::nullopt},
      } {}

const StudyLegend& StudyLegend::standard() {
  static const StudyLegend legend;
  return legend;
}

const StudyClass* StudyLegend::find(ClassCode code) const {
  for (const auto& c : classes_)
    if (c.code == code) return &c;
  return nullptr;
}

ClassCode StudyLegend::level1_of(ClassCode code) const {
  const auto* c = find(code);
  if (!c) throw std::invalid_argument("unknown study code " + std::to_string(code));
  return c->level1_parent;
}

std::optional<ClassCode> StudyLegend::group_of(ClassCode code) const {
  const auto* c = find(code);
  if (!c) throw std::invalid_argument("unknown study code " + std::to_string(code));
  return c->group;
}

std::string_view StudyLegend::label(ClassCode code) const {
  const auto* c = find(code);
  return c ? c->label : std::string_view("unknown");
}

std::vector<ClassCode> StudyLegend::level1_codes() const {
  std::vector<ClassCode> out;
  for (const auto& c : classes_)
    if (c.level1_parent == c.code) out.push_back(c.code);
  return out;
}

std::vector<ClassCode> StudyLegend::arable_codes() const {
  std::vector<ClassCode> out;
  for (const auto& c : classes_)
    if (c.level1_parent == kArable && c.code != kArable) out.push_back(c.code);
  return out;
}

ClassCode level1_of(ClassCode code) { return StudyLegend::standard().level1_of(code); }
std::optional<ClassCode> group_of(ClassCode code) {
  return StudyLegend::standard().group_of(code);
}

void LegendMapping::add(std::string source_code, std::string land_use,
                        ClassCode study_code) {
  if (!StudyLegend::standard().contains(study_code))
    throw std::invalid_argument("scheme " + scheme_ + ": study code " +
                                std::to_string(study_code) + " not in legend");
  auto key = std::pair{std::move(source_code), std::move(land_use)};
  auto [it, inserted] = entries_.emplace(key, study_code);
  if (!inserted && it->second != study_code)
    throw std::invalid_argument("scheme " + scheme_ + ": source code '" + key.first +
                                "' mapped to both " + std::to_string(it->second) +
                                " and " + std::to_string(study_code));
}

std::optional<ClassCode> LegendMapping::map_code(std::string_view source_code,
                                                 std::string_view land_use) const {
  if (!land_use.empty()) {
    auto it = entries_.find(std::pair{std::string(source_code), std::string(land_use)});
    if (it != entries_.end()) return it->second;
  }
  auto it = entries_.find(std::pair{std::string(source_code), std::string()});
  if (it != entries_.end()) return it->second;
  return std::nullopt;
}

std::vector<ClassCode> LegendMapping::study_codes() const {
  std::set<ClassCode> s;
  for (const auto& [k, v] : entries_) s.insert(v);
  return {s.begin(), s.end()};
}

std::vector<LegendMapping::Entry> LegendMapping::entries() const {
  std::vector<Entry> out;
  for (const auto& [k, v] : entries_) out.push_back({k.first, k.second, v});
  return out;
}

LegendCatalog LegendCatalog::load(std::span<const fs::path> files) {
  LegendCatalog c;
  for (const auto& f : files) c.merge_file(f);
  return c;
}

LegendCatalog LegendCatalog::load_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw MissingInputError("no legend directory " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".csv") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  return load(files);
}

void LegendCatalog::merge_file(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw MissingInputError("cannot open legend mapping " + file.string());
  std::string line;
  int lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto f = split_fields(t, ',');
    auto where = [&] { return file.string() + ":" + std::to_string(lineno) + ": "; };
    if (!header_seen) {
      header_seen = true;
      if (f.size() != 4 || f[0] != "scheme" || f[1] != "source_code" ||
          f[2] != "land_use" || f[3] != "study_code")
        throw FormatError(where() + "header must be scheme,source_code,land_use,study_code");
      continue;
    }
    if (f.size() != 4 || f[0].empty() || f[1].empty())
      throw FormatError(where() + "expected 4 fields");
    long long code = 0;
    try {
      code = parse_int(f[3]);
    } catch (const std::invalid_argument&) {
      throw FormatError(where() + "study_code is not an integer");
    }
    auto& mapping = schemes_.try_emplace(f[0], LegendMapping(f[0])).first->second;
    try {
      mapping.add(f[1], f[2], static_cast<ClassCode>(code));
    } catch (const std::invalid_argument& e) {
      throw FormatError(where() + e.what());
    }
  }
}

bool LegendCatalog::has(std::string_view scheme) const {
  return schemes_.find(scheme) != schemes_.end();
}

const LegendMapping& LegendCatalog::scheme(std::string_view scheme) const {
  auto it = schemes_.find(scheme);
  if (it == schemes_.end())
    throw std::invalid_argument("unknown legend scheme '" + std::string(scheme) + "'");
  return it->second;
}

std::vector<std::string> LegendCatalog::scheme_names() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : schemes_) out.push_back(k);
  return out;
}

std::string coverage_report(const LegendCatalog& catalog) {
  std::ostringstream os;
  os << "scheme,entries,study_codes,covered,missing\n";
  const auto& legend = StudyLegend::standard();
  for (const auto& name : catalog.scheme_names()) {
    const auto& m = catalog.scheme(name);
    const auto codes = m.study_codes();
    std::string covered, missing;
    for (const auto& c : legend.classes()) {
      const bool hit = std::binary_search(codes.begin(), codes.end(), c.code);
      auto& target = hit ? covered : missing;
      if (!target.empty()) target += ' ';
      target += std::to_string(c.code);
    }
    os << name << ',' << m.size() << ',' << codes.size() << ',' << covered << ','
       << missing << '\n';
  }
  return os.str();
}

}  // namespace cropmap
