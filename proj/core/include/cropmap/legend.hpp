#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cropmap/types.hpp"

namespace cropmap {

inline constexpr ClassCode kArtificial = 100;
inline constexpr ClassCode kArable = 200;
inline constexpr ClassCode kWoodland = 300;
inline constexpr ClassCode kGrassland = 500;
inline constexpr ClassCode kBareLand = 600;

struct StudyClass {
  ClassCode code;
  std::string_view label;
  ClassCode level1_parent;
  std::optional<ClassCode> group;
};

/// The two-level study nomenclature: five level-1 classes and the 19
/// arable level-2 classes under 200.
class StudyLegend {
 public:
  static const StudyLegend& standard();

  std::span<const StudyClass> classes() const { return classes_; }
  const StudyClass* find(ClassCode code) const;
  bool contains(ClassCode code) const { return find(code) != nullptr; }

  /// Parent level-1 code; level-1 codes map to themselves.
  /// Throws std::invalid_argument for codes outside the legend.
  ClassCode level1_of(ClassCode code) const;
  /// Crop group (210, 220, 230, 240, 250, 290) of an arable code, none
  /// otherwise. Throws std::invalid_argument for unknown codes.
  std::optional<ClassCode> group_of(ClassCode code) const;
  std::string_view label(ClassCode code) const;

  std::vector<ClassCode> level1_codes() const;
  std::vector<ClassCode> arable_codes() const;

 private:
  StudyLegend();
  std::vector<StudyClass> classes_;
};

ClassCode level1_of(ClassCode code);
std::optional<ClassCode> group_of(ClassCode code);

/// Source-code to study-code mapping for one scheme (LUCAS, a GSAA region,
/// Eurostat). Many-to-one is allowed, one-to-many is rejected on insert.
/// Entries may be qualified by a land-use code; a lookup with a land use
/// first tries the qualified entry and then the unqualified one.
class LegendMapping {
 public:
  LegendMapping() = default;
  explicit LegendMapping(std::string scheme) : scheme_(std::move(scheme)) {}

  const std::string& scheme() const { return scheme_; }

  /// Throws std::invalid_argument when (source, land_use) is already mapped
  /// to a different study code or the study code is not in the legend.
  void add(std::string source_code, std::string land_use, ClassCode study_code);

  std::optional<ClassCode> map_code(std::string_view source_code,
                                    std::string_view land_use = {}) const;

  std::size_t size() const { return entries_.size(); }
  /// Distinct study codes reachable through this mapping, ascending.
  std::vector<ClassCode> study_codes() const;

  struct Entry {
    std::string source_code;
    std::string land_use;
    ClassCode study_code;
  };
  std::vector<Entry> entries() const;

 private:
  std::string scheme_;
  std::map<std::pair<std::string, std::string>, ClassCode, std::less<>> entries_;
};

/// All mapping schemes loaded from delimited files with columns
/// scheme,source_code,land_use,study_code.
class LegendCatalog {
 public:
  static LegendCatalog load(std::span<const std::filesystem::path> files);
  /// Loads every *.csv in a directory.
  static LegendCatalog load_dir(const std::filesystem::path& dir);

  void merge_file(const std::filesystem::path& file);

  bool has(std::string_view scheme) const;
  /// Throws std::invalid_argument for unknown schemes.
  const LegendMapping& scheme(std::string_view scheme) const;
  std::vector<std::string> scheme_names() const;

 private:
  std::map<std::string, LegendMapping, std::less<>> schemes_;
};

/// Per scheme: entry count, study codes covered, legend codes not covered.
std::string coverage_report(const LegendCatalog& catalog);

}  // namespace cropmap
